"""Entropic linear OT in the log domain.

Solves min <C, pi> - eps*H(pi) over couplings of (mu1, mu2) through the
dual potentials (f, g), updated with stabilized log-sum-exp sweeps. The
multiplicative kernel form is deliberately absent from the production
path; it exists only as a test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Coupling:
    """Nonnegative transport plan with prescribed marginals."""

    pi: np.ndarray
    mu1: np.ndarray
    mu2: np.ndarray


@dataclass(frozen=True)
class DualPotentials:
    f: np.ndarray
    g: np.ndarray


@dataclass(frozen=True)
class SinkhornResult:
    coupling: Coupling
    potentials: DualPotentials
    iterations: int
    marginal_err: float


def marginal_error(pi, mu1, mu2) -> float:
    """Max L1 deviation of row/column sums from the prescribed marginals."""
    pi = np.asarray(pi, dtype=float)
    mu1 = np.asarray(mu1, dtype=float)
    mu2 = np.asarray(mu2, dtype=float)
    if pi.shape != (mu1.shape[0], mu2.shape[0]):
        raise ValueError(
            f"coupling shape {pi.shape} inconsistent with marginals "
            f"({mu1.shape[0]}, {mu2.shape[0]})"
        )
    row_err = float(np.sum(np.abs(pi.sum(axis=1) - mu1)))
    col_err = float(np.sum(np.abs(pi.sum(axis=0) - mu2)))
    return max(row_err, col_err)


def round_to_feasible(pi, mu1, mu2) -> np.ndarray:
    """Project a near-feasible plan onto the transport polytope.

    Scales rows then columns down to the marginal caps and distributes the
    leftover mass as a rank-one correction, so the output has the exact
    marginals up to float rounding. Entrywise change is bounded by the
    input's marginal error.
    """
    pi = np.array(pi, dtype=float)
    mu1 = np.asarray(mu1, dtype=float)
    mu2 = np.asarray(mu2, dtype=float)
    rows = pi.sum(axis=1)
    pi *= np.minimum(1.0, mu1 / np.maximum(rows, 1e-300))[:, None]
    cols = pi.sum(axis=0)
    pi *= np.minimum(1.0, mu2 / np.maximum(cols, 1e-300))[None, :]
    err_r = np.maximum(mu1 - pi.sum(axis=1), 0.0)
    err_c = np.maximum(mu2 - pi.sum(axis=0), 0.0)
    total = err_r.sum()
    if total > 0:
        pi += np.outer(err_r, err_c) / total
    return pi


def entropy(pi) -> float:
    """H(pi) = -sum pi_ij (log pi_ij - 1), with 0*log 0 = 0."""
    pi = np.asarray(pi, dtype=float)
    if np.any(pi < 0):
        raise ValueError("coupling entries must be nonnegative")
    pos = pi[pi > 0]
    return float(-np.sum(pos * (np.log(pos) - 1.0)))


def sinkhorn_lse(
    C,
    mu1,
    mu2,
    epsilon: float,
    max_iters: int = 50,
    tol: float = 1e-6,
    f0=None,
    g0=None,
) -> SinkhornResult:
    """Stabilized log-sum-exp Sinkhorn on the dual entropic OT problem.

    Alternates
        f[i] = -eps * LSE_k(log mu2[k] + g[k]/eps - C[i,k]/eps)
        g[j] = -eps * LSE_k(log mu1[k] + f[k]/eps - C[k,j]/eps)
    and stops once the primal marginal error of the implied coupling
    drops below ``tol`` or ``max_iters`` sweeps have run. The coupling
    is pi = exp((f + g - C)/eps) * (mu1 x mu2).

    ``f0``/``g0`` warm-start the potentials (used by the FGW outer loop).
    """
    C = np.asarray(C, dtype=float)
    mu1 = np.asarray(mu1, dtype=float)
    mu2 = np.asarray(mu2, dtype=float)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if np.any(mu1 <= 0) or np.any(mu2 <= 0):
        raise ValueError("marginal must be strictly positive")
    if not np.all(np.isfinite(C)):
        raise ValueError("cost matrix contains NaN/Inf")
    n1, n2 = C.shape
    if mu1.shape != (n1,) or mu2.shape != (n2,):
        raise ValueError("marginal lengths inconsistent with cost matrix")

    log_mu1 = np.log(mu1)
    log_mu2 = np.log(mu2)
    f = np.zeros(n1) if f0 is None else np.array(f0, dtype=float)
    g = np.zeros(n2) if g0 is None else np.array(g0, dtype=float)
    C_eps = C / epsilon
    outer_mu = mu1[:, None] * mu2[None, :]

    def lse(a, axis):
        # max-subtracted log-sum-exp, inlined for the tight sweep loop
        m = np.max(a, axis=axis)
        return m + np.log(np.sum(np.exp(a - np.expand_dims(m, axis)), axis=axis))

    def plan(f, g):
        return np.exp(f[:, None] / epsilon + g[None, :] / epsilon - C_eps) * outer_mu

    iterations = 0
    err = np.inf
    for iterations in range(1, max_iters + 1):
        f = -epsilon * lse(log_mu2[None, :] + g[None, :] / epsilon - C_eps, 1)
        g = -epsilon * lse(log_mu1[:, None] + f[:, None] / epsilon - C_eps, 0)
        pi = plan(f, g)
        err = max(
            float(np.sum(np.abs(pi.sum(axis=1) - mu1))),
            float(np.sum(np.abs(pi.sum(axis=0) - mu2))),
        )
        if err < tol:
            break
    pi = plan(f, g)
    return SinkhornResult(
        coupling=Coupling(pi=pi, mu1=mu1, mu2=mu2),
        potentials=DualPotentials(f=f, g=g),
        iterations=iterations,
        marginal_err=err,
    )
