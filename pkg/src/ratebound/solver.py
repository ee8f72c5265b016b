"""Blahut-Arimoto iteration for the rate-utility trade-off.

Alternates between the per-observation Boltzmann update

    p(x|y) ∝ p(x) exp(beta U(x, y))

and the marginal update ``p(x) = sum_y p(y) p(x|y)`` until the pair is
self-consistent. Each full sweep is a coordinate ascent step on
``E[U] - I(x;y)/beta`` so the objective never decreases.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .core import (CLAMP, Distribution, TaskSpec, check_beta, conditional_entropy,
                   entropy, expected_utility, marginal, mutual_information_nats,
                   LN2)
from .errors import InvalidDistribution, InvalidTask, NotConverged

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverOptions:
    """Stopping and initialization controls for :func:`solve`.

    ``init_prior`` is ``"uniform"`` or a strictly positive distribution over
    the actions. Iteration stops once the prior and the policy both move by
    less than ``tolerance`` in sup-norm and no action's prior mass is still
    growing by a relative factor above ``tolerance``.
    """

    init_prior: object = "uniform"
    tolerance: float = 1e-10
    max_iterations: int = 100_000
    trace: bool = False
    strict: bool = False

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance!r}")
        if int(self.max_iterations) < 1:
            raise ValueError("max_iterations must be a positive integer")
        if not (isinstance(self.init_prior, str) and self.init_prior == "uniform"):
            p = np.asarray(self.init_prior, dtype=float)
            Distribution(p)
            if np.any(p <= 0):
                raise InvalidDistribution("init_prior must be strictly positive on every action")


@dataclass(frozen=True, eq=False)
class SolveResult:
    policy: np.ndarray
    prior: Distribution
    beta: float
    iterations: int
    converged: bool
    objective: float
    expected_utility: float
    mutual_information_bits: float
    h_marginal_bits: float
    h_conditional_bits: float
    actions: tuple[str, ...] = ()
    observations: tuple[str, ...] = ()
    objective_trace: tuple[float, ...] = field(default=(), repr=False)

    def conditional(self, y) -> Distribution:
        i = self.observations.index(y) if isinstance(y, str) else int(y)
        return Distribution(self.policy[i], self.actions)


def _policy_update(prior: np.ndarray, scaled_utility: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        logits = np.log(prior)[None, :] + scaled_utility
    logits -= logits.max(axis=1, keepdims=True)
    w = np.exp(logits)
    w /= w.sum(axis=1, keepdims=True)
    w[w < CLAMP] = 0.0
    return w / w.sum(axis=1, keepdims=True)


def _marginal_update(p_y: np.ndarray, policy: np.ndarray):
    """Marginal of ``policy``; clamped columns are removed from every row."""
    prior = p_y @ policy
    dead = (prior < CLAMP) & (prior > 0)
    if dead.any():
        policy = policy.copy()
        policy[:, dead] = 0.0
        sums = policy.sum(axis=1, keepdims=True)
        empty = sums[:, 0] == 0
        sums[empty] = 1.0
        policy /= sums
        prior = p_y @ policy
        if empty.any():
            policy[empty] = prior / prior.sum()
    return prior / prior.sum(), policy


def _initial_prior(task: TaskSpec, init) -> np.ndarray:
    if isinstance(init, str):
        return np.full(task.n_actions, 1.0 / task.n_actions)
    p = np.asarray(init, dtype=float)
    if p.shape != (task.n_actions,):
        raise InvalidTask(f"init_prior has {p.size} entries for {task.n_actions} actions")
    return p / p.sum()


def iterate(task: TaskSpec, beta: float, prior: np.ndarray, tolerance: float,
            max_iterations: int, trace: bool = False):
    """Run the alternating updates from ``prior`` (zeros are kept as zeros).

    Returns ``(policy, prior, iterations, converged, objective_trace)``.
    """
    bu = beta * task.utility
    p_y = task.p_y.mass
    prior = np.asarray(prior, dtype=float)
    policy = None
    history = []
    for it in range(1, max_iterations + 1):
        new_policy = _policy_update(prior, bu)
        new_prior, new_policy = _marginal_update(p_y, new_policy)
        live = prior > 0
        step = np.abs(new_prior - prior).max()
        growth = (new_prior[live] / prior[live]).max() - 1.0
        policy_step = np.inf if policy is None else np.abs(new_policy - policy).max()
        prior, policy = new_prior, new_policy
        if trace:
            history.append(expected_utility(task, policy)
                           - mutual_information_nats(p_y, policy) / beta)
        if step < tolerance and growth < tolerance and policy_step < tolerance:
            return policy, prior, it, True, history
    return policy, prior, max_iterations, False, history


def _single_task_limit(task: TaskSpec, prior: np.ndarray):
    # With one observation the rate term vanishes and the iteration
    # converges to the initial prior restricted to the best actions.
    u = task.utility[0]
    live = prior > 0
    best = live & (u == u[live].max())
    p = np.where(best, prior, 0.0)
    p /= p.sum()
    return p[None, :], p


def solve(task: TaskSpec, beta, options: SolverOptions | None = None) -> SolveResult:
    """Find the self-consistent policy/prior pair at inverse temperature ``beta``."""
    if not isinstance(task, TaskSpec):
        raise InvalidTask(f"expected a TaskSpec, got {type(task).__name__}")
    beta = check_beta(beta)
    options = options or SolverOptions()
    prior = _initial_prior(task, options.init_prior)
    if task.n_observations == 1:
        policy, prior = _single_task_limit(task, prior)
        iterations, converged, history = 1, True, []
    else:
        policy, prior, iterations, converged, history = iterate(
            task, beta, prior, options.tolerance, int(options.max_iterations), options.trace)
    result = make_result(task, beta, policy, prior, iterations, converged, history)
    if not converged:
        log.warning("no convergence after %d iterations at beta=%g", iterations, beta)
        if options.strict:
            raise NotConverged(f"no convergence after {iterations} iterations at beta={beta!r}",
                               result)
    return result


def make_result(task, beta, policy, prior, iterations, converged, history=()) -> SolveResult:
    policy = np.array(policy, dtype=float)
    policy.setflags(write=False)
    mi = mutual_information_nats(task.p_y, policy)
    h_cond = conditional_entropy(task.p_y, policy)
    eu = expected_utility(task, policy)
    return SolveResult(
        policy=policy,
        prior=Distribution(prior / prior.sum(), task.actions.labels),
        beta=beta,
        iterations=int(iterations),
        converged=bool(converged),
        objective=eu - mi / beta,
        expected_utility=eu,
        mutual_information_bits=mi / LN2,
        h_marginal_bits=entropy(prior),
        h_conditional_bits=h_cond,
        actions=task.actions.labels,
        observations=task.observations.labels,
        objective_trace=tuple(float(v) for v in history),
    )


def fixed_point_residual(task: TaskSpec, beta, result: SolveResult) -> float:
    """Sup-norm defect of (policy, prior) in both self-consistency equations."""
    beta = check_beta(beta)
    policy = np.asarray(result.policy, dtype=float)
    prior = np.asarray(result.prior, dtype=float)
    if policy.shape != task.utility.shape or prior.shape != (task.n_actions,):
        raise InvalidTask("result shapes do not match the task")
    boltzmann = _policy_update(prior, beta * task.utility)
    r_policy = np.abs(policy - boltzmann)[task.p_y.mass > 0].max()
    r_prior = np.abs(prior - marginal(task.p_y, policy)).max()
    return float(max(r_policy, r_prior))


def kkt_gain(task: TaskSpec, beta: float, prior: np.ndarray) -> np.ndarray:
    """Per-action factor sum_y p(y) exp(beta U(x,y)) / Z_y at ``prior``.

    Equals 1 on the support of an optimal prior and is at most 1 elsewhere;
    a value above 1 off the support means that branch is unstable.
    """
    bu = beta * task.utility
    live = prior > 0
    with np.errstate(divide="ignore"):
        logits = np.log(prior)[None, :] + bu
    shift = logits[:, live].max(axis=1, keepdims=True)
    log_z = shift[:, 0] + np.log(np.exp(logits[:, live] - shift).sum(axis=1))
    return task.p_y.mass @ np.exp(bu - log_z[:, None])
