"""Probability objects, task specification and information measures.

All internal arithmetic is in nats; every public information quantity
(entropy, KL, mutual information) is reported in bits. Utility tables are
indexed ``[observation, action]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import InvalidBeta, InvalidDistribution, InvalidTask, SupportViolation

LN2 = math.log(2.0)
SUM_TOL = 1e-12
# Update results below this are treated as exact zeros.
CLAMP = 1e-15


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def clamp(mass) -> np.ndarray:
    """Zero out entries below ``CLAMP`` and renormalize along the last axis."""
    m = np.array(mass, dtype=float)
    m[m < CLAMP] = 0.0
    return m / m.sum(axis=-1, keepdims=True)


class LabelSpace:
    """An ordered set of unique string labels with index lookup."""

    __slots__ = ("labels", "_index")

    def __init__(self, labels: Iterable[str]):
        labels = tuple(str(l) for l in labels)
        if not labels:
            raise InvalidTask(f"{type(self).__name__} must be nonempty")
        if len(set(labels)) != len(labels):
            dup = sorted({l for l in labels if labels.count(l) > 1})
            raise InvalidTask(f"{type(self).__name__} has duplicate labels: {dup[:5]}")
        self.labels = labels
        self._index = {l: i for i, l in enumerate(labels)}

    def index(self, label: str) -> int:
        return self._index[label]

    def __contains__(self, label) -> bool:
        return label in self._index

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __getitem__(self, i):
        return self.labels[i]

    def __eq__(self, other):
        return type(other) is type(self) and other.labels == self.labels

    def __hash__(self):
        return hash((type(self).__name__, self.labels))

    def __repr__(self):
        if len(self) > 6:
            return f"{type(self).__name__}({len(self)} labels)"
        return f"{type(self).__name__}({list(self.labels)})"


class ActionSpace(LabelSpace):
    __slots__ = ()


class ObservationSpace(LabelSpace):
    __slots__ = ()


@dataclass(frozen=True, eq=False)
class Distribution:
    """A point on the probability simplex, optionally aligned to labels."""

    mass: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        m = np.asarray(self.mass, dtype=float)
        if m.ndim != 1 or m.size == 0:
            raise InvalidDistribution("distribution must be a nonempty 1-d array")
        if not np.all(np.isfinite(m)):
            raise InvalidDistribution("distribution has non-finite entries")
        if np.any(m < 0) or np.any(m > 1):
            raise InvalidDistribution("distribution entries must lie in [0, 1]")
        if abs(m.sum() - 1.0) > SUM_TOL:
            raise InvalidDistribution(f"distribution sums to {m.sum()!r}, not 1")
        object.__setattr__(self, "mass", _frozen(m))
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != m.size:
                raise InvalidDistribution(
                    f"{len(labels)} labels for {m.size} probabilities")
            object.__setattr__(self, "labels", labels)

    @classmethod
    def uniform(cls, n_or_labels) -> Distribution:
        if isinstance(n_or_labels, int):
            return cls(np.full(n_or_labels, 1.0 / n_or_labels))
        labels = tuple(n_or_labels)
        return cls(np.full(len(labels), 1.0 / len(labels)), labels)

    @classmethod
    def normalized(cls, weights, labels=None) -> Distribution:
        w = np.asarray(weights, dtype=float)
        return cls(w / w.sum(), labels)

    def __array__(self, dtype=None, copy=None):
        return self.mass if dtype is None else self.mass.astype(dtype)

    def __len__(self):
        return self.mass.size

    def __eq__(self, other):
        if not isinstance(other, Distribution):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.mass, other.mass)

    def label(self, i: int) -> str:
        return self.labels[i] if self.labels is not None else str(i)

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.mass > 0)


def check_beta(beta) -> float:
    """Validate an inverse temperature (units: nats per utility unit)."""
    try:
        b = float(beta)
    except (TypeError, ValueError):
        raise InvalidBeta(f"beta must be a real number, got {beta!r}") from None
    if not math.isfinite(b) or b <= 0:
        raise InvalidBeta(f"beta must be positive and finite, got {beta!r}")
    return b


def as_policy(rows, n_obs: int | None = None, n_act: int | None = None) -> np.ndarray:
    """Validate a conditional policy p(x|y), one row per observation."""
    p = np.asarray(rows, dtype=float)
    if p.ndim != 2:
        raise InvalidDistribution("policy must be a 2-d array [observation, action]")
    if n_obs is not None and p.shape[0] != n_obs:
        raise InvalidDistribution(f"policy has {p.shape[0]} rows, expected {n_obs}")
    if n_act is not None and p.shape[1] != n_act:
        raise InvalidDistribution(f"policy has {p.shape[1]} columns, expected {n_act}")
    if np.any(p < 0) or np.any(p > 1) or not np.all(np.isfinite(p)):
        raise InvalidDistribution("policy entries must lie in [0, 1]")
    bad = np.flatnonzero(np.abs(p.sum(axis=1) - 1.0) > SUM_TOL)
    if bad.size:
        raise InvalidDistribution(f"policy row {bad[0]} does not sum to 1")
    return p


def task_violations(actions, observations, utility, p_y) -> list[str]:
    """Return human-readable invariant violations for raw task components."""
    out = []
    try:
        acts = actions if isinstance(actions, LabelSpace) else ActionSpace(actions)
    except InvalidTask as e:
        out.append(f"actions: {e}")
        acts = None
    try:
        obs = (observations if isinstance(observations, LabelSpace)
               else ObservationSpace(observations))
    except InvalidTask as e:
        out.append(f"observations: {e}")
        obs = None
    rows = list(utility) if utility is not None else []
    if obs is not None and len(rows) != len(obs):
        out.append(f"utility: {len(rows)} rows for {len(obs)} observations")
    for i, row in enumerate(rows):
        try:
            r = np.asarray(row, dtype=float)
        except (TypeError, ValueError):
            out.append(f"utility[{i}]: entries must be numbers")
            continue
        if r.ndim != 1:
            out.append(f"utility[{i}]: must be a flat list")
            continue
        if acts is not None and r.size != len(acts):
            out.append(f"utility[{i}]: {r.size} entries for {len(acts)} actions")
        if not np.all(np.isfinite(r)):
            out.append(f"utility[{i}]: entries must be finite")
    if p_y is not None:
        try:
            py = np.asarray(p_y, dtype=float)
        except (TypeError, ValueError):
            out.append("p_y: entries must be numbers")
        else:
            if py.ndim != 1 or (obs is not None and py.size != len(obs)):
                out.append(f"p_y: length {py.size} does not match observations")
            elif not np.all(np.isfinite(py)) or np.any(py < 0) or np.any(py > 1):
                out.append("p_y: entries must lie in [0, 1]")
            elif abs(py.sum() - 1.0) > SUM_TOL:
                out.append(f"p_y: sums to {py.sum()!r}, not 1")
    return out


@dataclass(frozen=True, eq=False)
class TaskSpec:
    """A multi-task decision problem: utilities U[y, x] and task weights p(y)."""

    actions: ActionSpace
    observations: ObservationSpace
    utility: np.ndarray
    p_y: Distribution = field(default=None)

    def __post_init__(self):
        acts = self.actions
        if not isinstance(acts, ActionSpace):
            acts = ActionSpace(acts)
        obs = self.observations
        if not isinstance(obs, ObservationSpace):
            obs = ObservationSpace(obs)
        p_y = self.p_y
        if p_y is None:
            p_y = np.full(len(obs), 1.0 / len(obs))
        problems = task_violations(acts, obs, self.utility, p_y)
        if problems:
            raise InvalidTask("; ".join(problems))
        object.__setattr__(self, "actions", acts)
        object.__setattr__(self, "observations", obs)
        object.__setattr__(self, "utility", _frozen(np.asarray(self.utility, dtype=float)))
        object.__setattr__(self, "p_y", Distribution(np.asarray(p_y, dtype=float), obs.labels))

    @classmethod
    def from_loss(cls, actions, observations, loss, p_y=None) -> TaskSpec:
        """Build a task from a loss table; losses become negated utilities."""
        return cls(actions, observations, -np.asarray(loss, dtype=float), p_y)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    @property
    def n_observations(self) -> int:
        return len(self.observations)

    def __eq__(self, other):
        if not isinstance(other, TaskSpec):
            return NotImplemented
        return (self.actions == other.actions
                and self.observations == other.observations
                and np.array_equal(self.utility, other.utility)
                and self.p_y == other.p_y)

    def __repr__(self):
        return (f"TaskSpec({len(self.actions)} actions, "
                f"{len(self.observations)} observations)")


# -- information measures ---------------------------------------------------

def _plogp_ratio(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Elementwise p*ln(p/q) with 0*log(0/q) = 0."""
    out = np.zeros(np.broadcast(p, q).shape)
    pos = np.broadcast_to(p > 0, out.shape)
    pb = np.broadcast_to(p, out.shape)
    qb = np.broadcast_to(q, out.shape)
    out[pos] = pb[pos] * (np.log(pb[pos]) - np.log(qb[pos]))
    return out


def entropy_nats(p) -> float:
    p = np.asarray(p, dtype=float)
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def entropy(d) -> float:
    """Shannon entropy in bits."""
    return max(entropy_nats(d), 0.0) / LN2


def kl_divergence_nats(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise InvalidDistribution(f"misaligned distributions {p.shape} vs {q.shape}")
    bad = np.flatnonzero((p > 0) & (q <= 0))
    if bad.size:
        raise SupportViolation(f"p has mass at index {bad[0]} where q is zero")
    return max(float(_plogp_ratio(p, q).sum()), 0.0)


def kl_divergence(p, q) -> float:
    """D_KL(p || q) in bits."""
    return kl_divergence_nats(p, q) / LN2


def marginal(p_y, policy) -> np.ndarray:
    """Mixture sum_y p(y) p(x|y)."""
    p_y = np.asarray(p_y, dtype=float)
    policy = np.asarray(policy, dtype=float)
    if policy.ndim != 2 or policy.shape[0] != p_y.size:
        raise InvalidDistribution(
            f"policy shape {policy.shape} does not match {p_y.size} observations")
    m = p_y @ policy
    return m / m.sum()


def mutual_information_nats(p_y, policy) -> float:
    p_y = np.asarray(p_y, dtype=float)
    policy = np.asarray(policy, dtype=float)
    m = marginal(p_y, policy)
    live = p_y > 0
    per_row = _plogp_ratio(policy[live], m[None, :]).sum(axis=1)
    return max(float(p_y[live] @ per_row), 0.0)


def mutual_information(p_y, policy) -> float:
    """I(x;y) in bits for the joint p(y) p(x|y)."""
    return mutual_information_nats(p_y, policy) / LN2


def conditional_entropy(p_y, policy) -> float:
    """H(x|y) in bits."""
    p_y = np.asarray(p_y, dtype=float)
    policy = np.asarray(policy, dtype=float)
    return float(sum(w * entropy(row) for w, row in zip(p_y, policy) if w > 0))


def expected_utility(task: TaskSpec, policy) -> float:
    policy = np.asarray(policy, dtype=float)
    return float(np.asarray(task.p_y) @ (policy * task.utility).sum(axis=1))


def objective(task: TaskSpec, policy, beta) -> float:
    """E[U] - I(x;y)/beta, with I in nats so beta keeps units of 1/utility."""
    beta = check_beta(beta)
    return (expected_utility(task, policy)
            - mutual_information_nats(task.p_y, policy) / beta)


def total_variation(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float)).sum())


