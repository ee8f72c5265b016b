"""Command-line entry point: ``ratebound {solve,sweep,sample,make-task,replay}``.

Exit codes: 0 success, 1 input or usage error, 2 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import RateboundError, TooFewPoints, UnknownObservation
from .sampler import GENERATOR, sample
from .solver import SolverOptions, fixed_point_residual, solve
from .sweep import SPACINGS, SweepSchedule, rate_utility_curve, sweep
from .tasks import BUILTINS, builtin, grid_task, load_task, save_task

SCHEMA_VERSION = 1
CSV_HEADER = ["beta", "inv_beta", "expected_utility", "mutual_information_bits",
              "h_marginal_bits", "h_conditional_bits", "objective", "iterations", "converged"]
EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _add_source(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--task", metavar="PATH", help="task file (JSON)")
    g.add_argument("--builtin", choices=BUILTINS, help="built-in task")
    g.add_argument("--grid-n", type=int, metavar="N", help="binary N x N grid task")


def _add_solver(p):
    p.add_argument("--tolerance", type=float, default=1e-10)
    p.add_argument("--max-iterations", type=int, default=100_000)


def _add_beta(p):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--beta", type=float)
    g.add_argument("--inv-beta", type=float, help="1/beta")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ratebound", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ratebound {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve one task at one beta")
    _add_source(p)
    _add_beta(p)
    _add_solver(p)
    p.add_argument("--out", default="-", help="output JSON path (default stdout)")

    p = sub.add_parser("sweep", help="solve over a grid of beta values, write CSV")
    # source and --out are checked in cmd_sweep, after the schedule itself
    _add_source(p, required=False)
    p.add_argument("--beta-min", type=float)
    p.add_argument("--beta-max", type=float)
    p.add_argument("--inv-beta-min", type=float)
    p.add_argument("--inv-beta-max", type=float)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--spacing", choices=SPACINGS, default="logarithmic")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--annealed", dest="annealed", action="store_true", default=True,
                      help="warm-started descending sweep (default)")
    mode.add_argument("--independent", dest="annealed", action="store_false",
                      help="independent solves from the initial prior")
    p.add_argument("--no-refine", dest="refine", action="store_false",
                   help="do not locate critical points between grid points")
    p.add_argument("--rate-utility", action="store_true",
                   help="also write the sorted (expected_utility, rate) pairs")
    _add_solver(p)
    p.add_argument("--out", help="output CSV path (required)")

    p = sub.add_parser("sample", help="solve, then sample a conditional or the prior")
    _add_source(p)
    _add_beta(p)
    p.add_argument("--obs", required=True, help="observation label, or 'prior'")
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    _add_solver(p)
    p.add_argument("--out", default="-")

    p = sub.add_parser("make-task", help="write a built-in task as a task file")
    _add_source(p)
    p.add_argument("--out", default="-")

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest", help="result document or .manifest.json sidecar")
    p.add_argument("--out", help="write to this path instead of the recorded one")
    return parser


def _load_source(args):
    if args.task is not None:
        path = Path(args.task)
        try:
            data = path.read_bytes()
        except OSError as e:
            raise UsageError(f"cannot read task file {str(path)!r}: {e.strerror}") from None
        return load_task(data), str(path)
    if args.builtin is not None:
        return builtin(args.builtin), f"builtin:{args.builtin}"
    return grid_task(args.grid_n), f"grid-n:{args.grid_n}"


def _beta(args) -> float:
    if args.beta is not None:
        return args.beta
    if not args.inv_beta > 0:
        raise UsageError(f"--inv-beta must be positive, got {args.inv_beta}")
    return 1.0 / args.inv_beta


def _options(args) -> SolverOptions:
    return SolverOptions(tolerance=args.tolerance, max_iterations=args.max_iterations)


def _manifest(argv, source, started, **extra) -> dict:
    m = {"command": list(argv), "task_source": source}
    m.update(extra)
    m["tool_version"] = __version__
    m["wall_time_seconds"] = time.perf_counter() - started
    return m


def _write(path, text: str):
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _dump(doc) -> str:
    return json.dumps(doc, indent=1) + "\n"


def _solver_manifest(opts: SolverOptions) -> dict:
    return {"init_prior": "uniform", "tolerance": opts.tolerance,
            "max_iterations": opts.max_iterations}


def cmd_solve(args, argv, started) -> int:
    task, source = _load_source(args)
    beta = _beta(args)
    opts = _options(args)
    res = solve(task, beta, opts)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "solve_result",
        "beta": beta,
        "actions": list(task.actions.labels),
        "observations": list(task.observations.labels),
        "policy": res.policy.tolist(),
        "prior": res.prior.mass.tolist(),
        "diagnostics": {
            "iterations": res.iterations,
            "converged": res.converged,
            "objective": res.objective,
            "expected_utility": res.expected_utility,
            "mutual_information_bits": res.mutual_information_bits,
            "h_marginal_bits": res.h_marginal_bits,
            "h_conditional_bits": res.h_conditional_bits,
            "fixed_point_residual": fixed_point_residual(task, beta, res),
        },
    }
    doc["manifest"] = _manifest(argv, source, started, beta=beta,
                                solver_options=_solver_manifest(opts), seed=None)
    _write(args.out, _dump(doc))
    if not res.converged:
        print(f"ratebound: no convergence after {res.iterations} iterations", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _schedule(args) -> SweepSchedule:
    if args.points < 2:
        raise TooFewPoints(f"a sweep needs at least 2 points, got {args.points}")
    direct = args.beta_min is not None or args.beta_max is not None
    inverse = args.inv_beta_min is not None or args.inv_beta_max is not None
    if direct == inverse:
        raise UsageError("give either --beta-min/--beta-max or --inv-beta-min/--inv-beta-max")
    kw = dict(points=args.points, spacing=args.spacing, annealed=args.annealed,
              refine_transitions=args.refine)
    if direct:
        if args.beta_min is None or args.beta_max is None:
            raise UsageError("--beta-min and --beta-max go together")
        return SweepSchedule(args.beta_min, args.beta_max, **kw)
    if args.inv_beta_min is None or args.inv_beta_max is None:
        raise UsageError("--inv-beta-min and --inv-beta-max go together")
    if not (args.inv_beta_min > 0 and args.inv_beta_max > 0):
        raise UsageError("inverse temperatures must be positive")
    return SweepSchedule.from_inv_beta(args.inv_beta_min, args.inv_beta_max, **kw)


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def rate_utility_path(out: str) -> str:
    p = Path(out)
    return str(p.with_name(p.stem + ".rate_utility.csv"))


def cmd_sweep(args, argv, started) -> int:
    schedule = _schedule(args)
    if args.task is None and args.builtin is None and args.grid_n is None:
        raise UsageError("sweep needs one of --task, --builtin or --grid-n")
    if args.out is None:
        raise UsageError("sweep needs --out")
    task, source = _load_source(args)
    opts = _options(args)
    records = sweep(task, schedule, opts)
    rows = [[getattr(r, c) for c in CSV_HEADER] for r in records]
    _write(args.out, _csv(rows, CSV_HEADER))
    artifacts = [args.out]
    if args.rate_utility:
        ru = rate_utility_path(args.out)
        _write(ru, _csv(rate_utility_curve(records), ["expected_utility", "rate_bits"]))
        artifacts.append(ru)
    manifest = _manifest(
        argv, source, started,
        schedule={"beta_min": schedule.beta_min, "beta_max": schedule.beta_max,
                  "points": schedule.points, "spacing": schedule.spacing,
                  "annealed": schedule.annealed,
                  "refine_transitions": schedule.refine_transitions},
        solver_options=_solver_manifest(opts), seed=None, artifacts=artifacts)
    Path(args.out + ".manifest.json").write_text(_dump(manifest), encoding="utf-8")
    if not all(r.converged for r in records):
        bad = sum(not r.converged for r in records)
        print(f"ratebound: {bad} sweep point(s) did not converge", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_sample(args, argv, started) -> int:
    task, source = _load_source(args)
    if args.obs != "prior" and args.obs not in task.observations:
        raise UnknownObservation(
            f"unknown observation {args.obs!r}; choose 'prior' or one of "
            f"{', '.join(task.observations.labels)}")
    if args.n < 1:
        raise UsageError(f"--n must be positive, got {args.n}")
    beta = _beta(args)
    opts = _options(args)
    res = solve(task, beta, opts)
    dist = res.prior if args.obs == "prior" else res.conditional(args.obs)
    rep = sample(dist, args.n, args.seed)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "sample_report",
        "beta": beta,
        "distribution": args.obs,
        "n": args.n,
        "seed": args.seed,
        "generator": GENERATOR,
        "samples": [{"label": s, "probability": rep.source_probabilities[s]}
                    for s in rep.samples],
        "counts": rep.distinct,
        "source_probabilities": rep.source_probabilities,
        "solver": {"iterations": res.iterations, "converged": res.converged},
    }
    doc["manifest"] = _manifest(argv, source, started, beta=beta,
                                solver_options=_solver_manifest(opts), seed=args.seed)
    _write(args.out, _dump(doc))
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_make_task(args, argv, started) -> int:
    task, _ = _load_source(args)
    _write(args.out, save_task(task))
    return EXIT_OK


def cmd_replay(args, argv, started) -> int:
    try:
        doc = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    except OSError as e:
        raise UsageError(f"cannot read manifest {args.manifest!r}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise UsageError(f"manifest {args.manifest!r} is not JSON: {e}") from None
    manifest = doc.get("manifest", doc)
    command = manifest.get("command")
    if not isinstance(command, list) or not command:
        raise UsageError(f"{args.manifest!r} carries no replayable command")
    if command[0] == "replay":
        raise UsageError("refusing to replay a replay")
    command = list(command)
    if args.out is not None:
        if "--out" in command:
            command[command.index("--out") + 1] = args.out
        else:
            command += ["--out", args.out]
    return main(command)


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "sample": cmd_sample,
            "make-task": cmd_make_task, "replay": cmd_replay}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    started = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, argv, started)
    except UsageError as e:
        msg = str(e)
        print(msg if msg.startswith("ratebound") else f"ratebound: {msg}", file=sys.stderr)
        return EXIT_INPUT
    except (RateboundError, ValueError, KeyError, OSError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"ratebound: {type(e).__name__}: {msg}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
