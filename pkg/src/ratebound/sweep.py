"""Inverse-temperature sweeps, the rate-utility curve and transition detection.

An annealed sweep walks beta downward, warm-starting every solve from the
previous prior (floored so collapsed actions can re-enter). When a new
action set takes over abruptly between two grid points, the sweep brackets
the critical beta by bisection on the stability of the old branch and adds
one extra record there, solved from the untied initial prior. At such a
point both branches are optimal, and that record is the symmetric mixture
of them.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from .core import TaskSpec, check_beta
from .errors import EmptyInput, TooFewPoints
from .solver import SolveResult, SolverOptions, iterate, kkt_gain, solve

SPACINGS = ("logarithmic", "linear", "inverse_linear")
WARM_FLOOR = 1e-12
# Prior mass below this is outside the branch's support.
SUPPORT_TOL = 1e-9
# A jump is new-support mass at least this large between neighbours.
JUMP_MASS = 0.05
GAIN_TOL = 1e-13
BISECT_RTOL = 1e-12


@dataclass(frozen=True)
class SweepSchedule:
    beta_min: float
    beta_max: float
    points: int = 200
    spacing: str = "logarithmic"
    annealed: bool = True
    refine_transitions: bool = True

    def __post_init__(self):
        check_beta(self.beta_min)
        check_beta(self.beta_max)
        if int(self.points) != self.points or self.points < 2:
            raise TooFewPoints(f"a sweep needs at least 2 points, got {self.points!r}")
        if not self.beta_min < self.beta_max:
            raise ValueError(f"beta_min ({self.beta_min}) must be below beta_max ({self.beta_max})")
        if self.spacing not in SPACINGS:
            raise ValueError(f"spacing must be one of {SPACINGS}, got {self.spacing!r}")

    @classmethod
    def from_inv_beta(cls, inv_min, inv_max, points=200, spacing="logarithmic", **kw):
        return cls(1.0 / inv_max, 1.0 / inv_min, points, spacing, **kw)

    def betas(self) -> np.ndarray:
        """Grid points in ascending beta."""
        lo, hi, n = float(self.beta_min), float(self.beta_max), int(self.points)
        if self.spacing == "logarithmic":
            b = np.geomspace(lo, hi, n)
        elif self.spacing == "linear":
            b = np.linspace(lo, hi, n)
        else:
            b = 1.0 / np.linspace(1.0 / hi, 1.0 / lo, n)[::-1]
        b[0], b[-1] = lo, hi
        return b


@dataclass(frozen=True)
class SweepRecord:
    beta: float
    inv_beta: float
    expected_utility: float
    mutual_information_bits: float
    h_marginal_bits: float
    h_conditional_bits: float
    objective: float
    iterations: int
    converged: bool
    critical: bool = False
    result: SolveResult | None = field(default=None, repr=False, compare=False)

    @classmethod
    def from_result(cls, res: SolveResult, critical=False) -> SweepRecord:
        return cls(res.beta, 1.0 / res.beta, res.expected_utility,
                   res.mutual_information_bits, res.h_marginal_bits,
                   res.h_conditional_bits, res.objective, res.iterations,
                   res.converged, critical, res)


def _floored(prior: np.ndarray) -> np.ndarray:
    p = np.maximum(prior, WARM_FLOOR)
    return p / p.sum()


def _branch_stable(task, beta, branch_prior, options) -> bool:
    """True if the branch restricted to ``branch_prior``'s support is optimal at ``beta``."""
    _, prior, *_ = iterate(task, beta, branch_prior, options.tolerance,
                           int(options.max_iterations))
    off = prior <= 0
    if not off.any():
        return True
    with np.errstate(over="ignore"):
        gain = kkt_gain(task, beta, prior)
    return bool(gain[off].max() <= 1.0 + GAIN_TOL)


def _critical_point(task, upper: SolveResult, lower: SolveResult,
                    options: SolverOptions) -> SolveResult | None:
    branch = np.where(upper.prior.mass > SUPPORT_TOL, upper.prior.mass, 0.0)
    branch /= branch.sum()
    hi, lo = upper.beta, lower.beta
    if not _branch_stable(task, hi, branch, options) or _branch_stable(task, lo, branch, options):
        return None
    while hi - lo > BISECT_RTOL * hi:
        mid = 0.5 * (hi + lo)
        if _branch_stable(task, mid, branch, options):
            hi = mid
        else:
            lo = mid
    return solve(task, hi, options)


def _jumped(upper: SolveResult, lower: SolveResult) -> bool:
    new = upper.prior.mass <= SUPPORT_TOL
    return float(lower.prior.mass[new].sum()) >= JUMP_MASS


def _threads() -> int:
    try:
        n = int(os.environ.get("RATEBOUND_THREADS", ""))
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def sweep(task: TaskSpec, schedule: SweepSchedule,
          options: SolverOptions | None = None) -> list[SweepRecord]:
    """Solve at every grid beta.

    Annealed sweeps return records in descending beta, independent sweeps in
    ascending beta. Non-converged points are kept and flagged.
    """
    options = options or SolverOptions()
    betas = schedule.betas()
    if not schedule.annealed:
        workers = min(_threads(), len(betas))
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(lambda b: solve(task, b, options), betas))
        else:
            results = [solve(task, b, options) for b in betas]
        return [SweepRecord.from_result(r) for r in results]

    records = []
    prev = None
    for b in betas[::-1]:
        opts = options if prev is None else replace(options, init_prior=_floored(prev.prior.mass))
        res = solve(task, b, opts)
        if schedule.refine_transitions and prev is not None and _jumped(prev, res):
            crit = _critical_point(task, prev, res, options)
            if crit is not None:
                records.append(SweepRecord.from_result(crit, critical=True))
        records.append(SweepRecord.from_result(res))
        prev = res
    return records


def rate_utility_curve(records: Sequence[SweepRecord]) -> list[tuple[float, float]]:
    """(expected utility, rate in bits) pairs sorted by utility."""
    if not records:
        raise EmptyInput("rate-utility curve needs at least one record")
    return sorted((r.expected_utility, r.mutual_information_bits) for r in records)


class Transition(NamedTuple):
    index: int
    beta: float
    peak_bits: float


def _check_ordered(records):
    b = np.array([r.beta for r in records])
    d = np.diff(b)
    if not (np.all(d > 0) or np.all(d < 0)):
        raise ValueError("records must be strictly ordered by beta")


def detect_transition(records: Sequence[SweepRecord], margin: float = 0.01) -> Transition | None:
    """Locate an interior peak of H(x); ``None`` means no transition.

    The maximum must be a strict local maximum and exceed both end records
    by at least ``margin`` bits.
    """
    if len(records) < 3:
        raise TooFewPoints(f"transition detection needs at least 3 records, got {len(records)}")
    _check_ordered(records)
    h = np.array([r.h_marginal_bits for r in records])
    i = int(np.argmax(h))
    if i == 0 or i == len(h) - 1:
        return None
    if not (h[i] > h[i - 1] and h[i] > h[i + 1]):
        return None
    if h[i] - max(h[0], h[-1]) < margin:
        return None
    return Transition(i, records[i].beta, float(h[i]))


def support_changes(records: Sequence[SweepRecord], tol: float = SUPPORT_TOL):
    """Indices where the number of actions carrying prior mass changes.

    Returns ``(index, size_before, size_after)`` triples, comparing record
    ``index - 1`` with record ``index``.
    """
    sizes = [int((r.result.prior.mass > tol).sum()) for r in records]
    return [(i, sizes[i - 1], sizes[i]) for i in range(1, len(sizes)) if sizes[i] != sizes[i - 1]]
