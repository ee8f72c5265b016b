"""Bounded-rational choice against a fixed prior.

A decision-maker starting from ``p0`` and maximizing
``E_q[U] - KL(q || p0) / beta`` ends up at the Boltzmann posterior
``q ∝ p0 * exp(beta * U)``. The optimal value is ``ln Z / beta``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (LN2, Distribution, check_beta, clamp, kl_divergence_nats)
from .errors import DegeneratePrior, InvalidDistribution


def _prepare(p0, utilities, beta):
    p0 = np.asarray(p0, dtype=float)
    u = np.asarray(utilities, dtype=float)
    if u.shape != p0.shape:
        raise InvalidDistribution(f"{u.size} utilities for {p0.size} outcomes")
    if not np.all(np.isfinite(u)):
        raise InvalidDistribution("utilities must be finite")
    support = p0 > 0
    if not support.any():
        raise DegeneratePrior("prior has no mass on any outcome")
    return p0, u, support, check_beta(beta)


def _shifted_log_weights(p0, u, support, beta):
    """ln p0 + beta*U on the support, shifted so the maximum is zero."""
    logw = np.full(p0.shape, -np.inf)
    logw[support] = np.log(p0[support]) + beta * u[support]
    shift = logw[support].max()
    return logw - shift, shift


def boltzmann_posterior(p0, utilities, beta) -> Distribution:
    """q(x) = p0(x) exp(beta U(x)) / Z, evaluated with a max shift."""
    labels = getattr(p0, "labels", None)
    p0, u, support, beta = _prepare(p0, utilities, beta)
    logw, _ = _shifted_log_weights(p0, u, support, beta)
    q = np.exp(logw)
    return Distribution(clamp(q / q.sum()), labels)


def log_partition(p0, utilities, beta) -> float:
    """ln Z = ln sum_x p0(x) exp(beta U(x)) in nats."""
    p0, u, support, beta = _prepare(p0, utilities, beta)
    umax = u[support].max()
    w = p0[support] * np.exp(beta * (u[support] - umax))
    return float(beta * umax + np.log(w.sum()))


def free_energy_difference(q, p0, utilities, beta) -> float:
    """E_q[U] - KL(q || p0) / beta, in utility units.

    Raises SupportViolation when q puts mass outside the support of p0.
    """
    beta = check_beta(beta)
    q = np.asarray(q, dtype=float)
    u = np.asarray(utilities, dtype=float)
    kl = kl_divergence_nats(q, p0)
    return float(q @ u) - kl / beta


@dataclass(frozen=True)
class FreeEnergyReport:
    posterior: Distribution
    log_partition: float
    delta_f: float
    expected_utility: float
    kl_cost_bits: float


def free_energy_report(p0, utilities, beta) -> FreeEnergyReport:
    q = boltzmann_posterior(p0, utilities, beta)
    u = np.asarray(utilities, dtype=float)
    kl = kl_divergence_nats(q, p0)
    eu = float(q.mass @ u)
    return FreeEnergyReport(
        posterior=q,
        log_partition=log_partition(p0, utilities, beta),
        delta_f=eu - kl / check_beta(beta),
        expected_utility=eu,
        kl_cost_bits=kl / LN2,
    )
