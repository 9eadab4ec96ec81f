"""Exact oracles and estimators for the Wang-Landau iteration.

Mean field and Lyapunov function, the Poisson-equation solver, the
asymptotic covariance ``U_star`` of the weight fluctuations, the CLT
constants, the ergodic and stratified estimators, Polyak averaging and the
Doeblin minorization constant.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import CLTInapplicableError, DomainError, NumericError, UnsupportedOperation
from .kernel import ProposalSpec, proposal_matrix, transition_matrix
from .model import TargetModel, WeightVector, biased_pmf, compute_theta_star
from .wl import ScheduleSpec, Trace

MAX_ORACLE_STATES = 10_000
POISSON_RESIDUAL_TOL = 1e-9


def mean_field(theta, theta_star) -> np.ndarray:
    """``h(theta) = (theta_star - theta) / sum_j theta_star(j) / theta(j)``."""
    th = np.asarray(theta, dtype=float)
    ts = np.asarray(theta_star, dtype=float)
    return (ts - th) / np.sum(ts / th)


def lyapunov(theta, theta_star) -> float:
    """Kullback-Leibler divergence ``sum_i theta_star(i) log(theta_star(i) / theta(i))``."""
    th = np.asarray(theta, dtype=float)
    ts = np.asarray(theta_star, dtype=float)
    return float(np.sum(ts * np.log(ts / th)))


def lyapunov_gradient(theta, theta_star) -> np.ndarray:
    return -np.asarray(theta_star, dtype=float) / np.asarray(theta, dtype=float)


def lyapunov_descent(theta, theta_star) -> float:
    """``<grad V(theta), h(theta)>``; non-positive and zero only at ``theta_star``."""
    th = np.asarray(theta, dtype=float)
    ts = np.asarray(theta_star, dtype=float)
    return float(-np.sum((ts - th) ** 2 / th) / np.sum(ts / th))


def field_matrix(labels: np.ndarray, theta) -> np.ndarray:
    """``H(x, theta)`` for every state ``x``, as a ``K x d`` matrix."""
    th = np.asarray(theta, dtype=float)
    onehot = np.eye(th.size)[labels]
    return th[None, :] * (onehot - th[labels][:, None])


def solve_poisson(P, g, pi) -> np.ndarray:
    """Solution of ``g_hat - P g_hat = g - pi(g)`` normalized by ``pi(g_hat) = 0``.

    ``g`` may be a vector or a ``K x m`` matrix (one column per function).
    Solves ``(I - P + 1 pi^T) g_hat = g - pi(g)`` by LU with partial pivoting.
    """
    P = np.asarray(P, dtype=float)
    pi = np.asarray(pi, dtype=float)
    g = np.asarray(g, dtype=float)
    K = P.shape[0]
    if P.shape != (K, K) or pi.shape != (K,) or g.shape[0] != K:
        raise DomainError("shape mismatch between P, g and pi")
    if K > MAX_ORACLE_STATES:
        raise DomainError(f"dense Poisson solve limited to {MAX_ORACLE_STATES} states")
    rhs = g - pi @ g
    A = np.eye(K) - P + np.outer(np.ones(K), pi)
    try:
        g_hat = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericError("Poisson system is singular; the kernel is not ergodic") from exc
    resid = np.max(np.abs(g_hat - P @ g_hat - rhs))
    if not resid < POISSON_RESIDUAL_TOL:
        raise NumericError(f"Poisson residual {resid:.3e} exceeds {POISSON_RESIDUAL_TOL}")
    return g_hat


def minorization_constant(model: TargetModel, proposal: ProposalSpec, theta_star=None) -> float:
    """``rho = inf q / sup pi * min_i theta_star(i)``.

    Both ``q`` and ``pi`` are taken as densities with respect to the uniform
    reference measure on the finite space, so ``P_theta(x, y) >= rho pi_theta(y)``
    holds entrywise for every ``theta``.
    """
    if not model.space.is_discrete:
        raise UnsupportedOperation("the minorization constant is computed on finite spaces only")
    ts = compute_theta_star(model) if theta_star is None else WeightVector(theta_star)
    K = model.space.size
    inf_q = K * proposal_matrix(proposal, model.space).min()
    sup_pi = K * model.pmf().max()
    rho = inf_q / sup_pi * ts.min
    if not 0.0 < rho <= 1.0:
        raise DomainError(f"minorization constant {rho} outside (0, 1]: the proposal "
                          "does not charge every state")
    return float(rho)


@dataclass
class ExactSolution:
    """Oracle bundle at ``theta_star`` for a finite-state model."""

    theta_star: WeightVector
    P_star: np.ndarray
    pi_star: np.ndarray
    H_hat: np.ndarray
    U_star: np.ndarray
    rho: float
    model_digest: str

    def to_json(self) -> dict:
        return {"schema": "wl/1", "theta_star": self.theta_star.tolist(),
                "U_star": self.U_star.tolist(), "rho": self.rho,
                "model_digest": self.model_digest}


def compute_U_star(model: TargetModel, proposal: ProposalSpec, theta_star=None) -> ExactSolution:
    """Asymptotic covariance ``U_star = E[H_hat H_hat^T - (P H_hat)(P H_hat)^T]``
    under ``pi_{theta_star}``, with ``H_hat`` the Poisson solution for
    ``H(., theta_star)``."""
    if not model.space.is_discrete:
        raise UnsupportedOperation("U_star is only available for finite state spaces")
    ts = compute_theta_star(model) if theta_star is None else WeightVector(theta_star)
    P = transition_matrix(model, proposal, ts)
    pi = biased_pmf(model, ts, ts)
    H = field_matrix(model.stratification.labels, ts)
    H_hat = solve_poisson(P, H, pi)
    PH = P @ H_hat
    U = (H_hat * pi[:, None]).T @ H_hat - (PH * pi[:, None]).T @ PH
    U = 0.5 * (U + U.T)
    rho = minorization_constant(model, proposal, ts)
    return ExactSolution(ts, P, pi, H_hat, U, rho, model.digest())


def _sched(schedule):
    if isinstance(schedule, ScheduleSpec):
        return schedule.gamma_star, schedule.alpha
    return float(schedule[0]), float(schedule[1])


def clt_sigma2(schedule, d: int) -> float:
    """Scalar ``sigma^2`` of the ``gamma_n``-normalized CLT.

    ``d / 2`` for ``alpha < 1``; ``gamma_star d / (2 gamma_star - d)`` for
    ``alpha = 1``, which needs ``gamma_star > d / 2``.
    """
    gstar, alpha = _sched(schedule)
    if not 0.5 < alpha <= 1.0:
        raise CLTInapplicableError(f"alpha={alpha} outside (1/2, 1]")
    if alpha < 1.0:
        return d / 2.0
    if not gstar > d / 2.0:
        raise CLTInapplicableError(f"alpha=1 needs gamma_star > d/2 = {d / 2}, got {gstar}")
    return gstar * d / (2.0 * gstar - d)


@dataclass
class AsymptoticCovariance:
    """``gamma_scaled``: limit of ``Cov(theta_n) / gamma_n``.
    ``sqrt_n_scaled``: limit of ``n Cov(theta_n)`` (``alpha = 1`` only)."""

    gamma_scaled: np.ndarray
    sqrt_n_scaled: np.ndarray | None


def asymptotic_covariance(schedule, d: int, U_star) -> AsymptoticCovariance:
    gstar, alpha = _sched(schedule)
    s2 = clt_sigma2(schedule, d)
    U = np.asarray(U_star, dtype=float)
    return AsymptoticCovariance(s2 * U, gstar * s2 * U if alpha == 1.0 else None)


def averaged_covariance(d: int, U_star) -> np.ndarray:
    """Limit of ``n Cov(mean_k theta_k)``: ``d^2 U_star``."""
    return d * d * np.asarray(U_star, dtype=float)


def _states(trace):
    xs = trace.x if isinstance(trace, Trace) else np.asarray(trace)
    if xs.size == 0:
        raise DomainError("empty trace")
    return xs


def ergodic_average(trace, f) -> float:
    """Mean of ``f`` over the recorded states (vectorized ``f``)."""
    xs = _states(trace)
    return float(np.mean(f(xs)))


def stratified_estimator(trace: Trace, f, theta=None) -> float:
    """``d sum_i theta_n(i) mean_k f(X_k) 1{X_k in stratum i}``.

    ``theta`` defaults to the last recorded weight vector.
    """
    xs = _states(trace)
    th = trace.theta[-1] if theta is None else np.asarray(theta, dtype=float)
    d = th.size
    fx = np.asarray(f(xs), dtype=float)
    per = np.bincount(trace.stratum, weights=fx, minlength=d) / xs.size
    return float(d * np.sum(th * per))


def polyak_average(theta_history) -> WeightVector:
    """Componentwise mean of the iterates (rows of ``theta_history``)."""
    h = np.asarray(theta_history, dtype=float)
    if h.ndim != 2 or h.shape[0] == 0:
        raise DomainError("need a non-empty (n, d) history")
    m = h.mean(axis=0)
    return WeightVector(m / m.sum(), normalize=False)


def replicate_covariance(samples, theta_star, normalization: float) -> np.ndarray:
    """Empirical covariance of ``sqrt(normalization) (theta^(r) - theta_star)``."""
    s = np.asarray(samples, dtype=float)
    if s.ndim != 2 or s.shape[0] < 2:
        raise DomainError("need at least two replicate endpoints")
    z = np.sqrt(normalization) * (s - np.asarray(theta_star, dtype=float))
    zc = z - z.mean(axis=0)
    C = zc.T @ zc / (s.shape[0] - 1)
    return 0.5 * (C + C.T)


def tangent_projector(d: int) -> np.ndarray:
    return np.eye(d) - np.full((d, d), 1.0 / d)


def tangent_relative_error(A, B) -> float:
    """Frobenius ``|Pi (A - B) Pi| / |Pi B Pi|`` with ``Pi`` removing the ones direction."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    Pi = tangent_projector(A.shape[0])
    den = np.linalg.norm(Pi @ B @ Pi)
    if den == 0.0:
        raise DomainError("reference matrix vanishes on the tangent space")
    return float(np.linalg.norm(Pi @ (A - B) @ Pi) / den)


def load_oracle(path) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema") != "wl/1":
        raise DomainError(f"{path}: not a wl/1 oracle file")
    return doc
