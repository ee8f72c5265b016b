"""Sampling from solved distributions and rejection sampling from the prior.

Randomness comes from numpy's Philox counter-based generator keyed by the
caller's seed, so every report is reproducible from ``(inputs, seed)``.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .core import TaskSpec, check_beta
from .errors import NonTerminating, SupportViolation, UnknownObservation

GENERATOR = "numpy.random.Philox(4x64, 10 rounds)"
MAX_PROPOSALS = 10**9


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def _labels(dist) -> tuple[str, ...]:
    labels = getattr(dist, "labels", None)
    n = np.asarray(dist).size
    return tuple(labels) if labels is not None else tuple(str(i) for i in range(n))


@dataclass(frozen=True)
class SampleReport:
    samples: tuple[str, ...]
    distinct: dict[str, int]
    source_probabilities: dict[str, float]
    seed: int
    generator: str = GENERATOR


@dataclass(frozen=True)
class RejectionReport:
    accepted: tuple[str, ...]
    proposals_used: int
    acceptance_rate: float
    seed: int
    generator: str = GENERATOR


def _draw_indices(mass: np.ndarray, n: int, rng) -> np.ndarray:
    cdf = np.cumsum(mass)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, rng.random(n), side="right")
    # searchsorted can land on a trailing zero-mass entry only through rounding
    return np.minimum(idx, np.flatnonzero(mass > 0)[-1])


def sample(dist, n: int, seed: int) -> SampleReport:
    """Draw ``n`` i.i.d. labels by inverse CDF over the label order."""
    if n < 1:
        raise ValueError(f"sample size must be positive, got {n}")
    mass = np.asarray(dist, dtype=float)
    labels = _labels(dist)
    idx = _draw_indices(mass, int(n), _rng(seed))
    samples = tuple(labels[i] for i in idx)
    counts = Counter(samples)
    return SampleReport(
        samples=samples,
        distinct={l: counts[l] for l in sorted(counts, key=labels.index)},
        source_probabilities={l: float(p) for l, p in zip(labels, mass) if p > 0},
        seed=int(seed),
    )


def rejection_sample(task: TaskSpec, beta, proposal, y, n: int, seed: int,
                     target=None) -> RejectionReport:
    """Sample the posterior proposal(x) exp(beta U(x,y)) / Z by rejection.

    Proposals are accepted with probability exp(beta (U(x,y) - U_max)), where
    U_max is the best utility on the proposal's support. If ``target`` is
    given, its support must be covered by the proposal and draws outside it
    are rejected.
    """
    beta = check_beta(beta)
    if n < 1:
        raise ValueError(f"sample size must be positive, got {n}")
    q = np.asarray(proposal, dtype=float)
    if q.shape != (task.n_actions,):
        raise SupportViolation(f"proposal has {q.size} entries for {task.n_actions} actions")
    yi = _observation_index(task, y)
    u = task.utility[yi]
    support = q > 0
    accept_p = np.zeros_like(u)
    accept_p[support] = np.exp(beta * (u[support] - u[support].max()))
    if target is not None:
        t = np.asarray(target, dtype=float)
        if np.any((t > 0) & ~support):
            raise SupportViolation("target has mass where the proposal is zero")
        accept_p[t <= 0] = 0.0
    rate = float(q @ accept_p)
    if rate <= 0:
        raise NonTerminating("acceptance probability is zero everywhere on the proposal")

    rng = _rng(seed)
    labels = task.actions.labels
    accepted: list[int] = []
    used = 0
    while len(accepted) < n:
        need = n - len(accepted)
        batch = int(min(max(1.2 * need / rate + 64, 1024), 1 << 22))
        if used + batch > MAX_PROPOSALS:
            raise NonTerminating(f"more than {MAX_PROPOSALS} proposals needed")
        idx = _draw_indices(q, batch, rng)
        keep = rng.random(batch) < accept_p[idx]
        hits = np.flatnonzero(keep)
        if hits.size >= need:
            used += int(hits[need - 1]) + 1
            accepted.extend(idx[hits[:need]])
        else:
            used += batch
            accepted.extend(idx[hits])
    return RejectionReport(
        accepted=tuple(labels[i] for i in accepted),
        proposals_used=used,
        acceptance_rate=n / used,
        seed=int(seed),
    )


def _observation_index(task: TaskSpec, y) -> int:
    if isinstance(y, str):
        if y not in task.observations:
            raise UnknownObservation(f"unknown observation {y!r}")
        return task.observations.index(y)
    if not 0 <= int(y) < task.n_observations:
        raise UnknownObservation(f"observation index {y!r} out of range")
    return int(y)


def top_k(dist, k: int) -> list[tuple[str, float]]:
    """The ``k`` most probable labels, ties broken by label order."""
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    mass = np.asarray(dist, dtype=float)
    labels = _labels(dist)
    order = np.argsort(-mass, kind="stable")[:k]
    return [(labels[i], float(mass[i])) for i in order]
