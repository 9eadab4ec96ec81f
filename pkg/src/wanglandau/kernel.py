"""Symmetric-proposal Metropolis-Hastings kernels targeting ``pi_theta``.

The proposal mixes a local move with a global uniform draw, which keeps the
proposal density bounded below on the whole space.  Every step reads exactly
three uniforms from the chain's generator, so identical seeds give identical
trajectories regardless of the accept/reject pattern.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _jit
from .errors import DomainError, UnsupportedOperation
from .model import StateSpace, TargetModel, stratum_index

UNIFORMS_PER_STEP = 3


@dataclass(frozen=True)
class ProposalSpec:
    """Global/local mixture proposal.

    With probability ``global_prob`` the proposal is uniform over the whole
    space; otherwise it is uniform over the ``2 * local`` neighbours
    ``x +- 1, ..., x +- r`` (finite space, wrapped) or over
    ``x + (-delta, delta)`` (torus, wrapped).
    """

    kind: str
    local: float
    global_prob: float = 0.05

    def __post_init__(self):
        if not 0.0 <= self.global_prob <= 1.0:
            raise DomainError("global_prob must lie in [0, 1]")
        if self.kind == "discrete":
            if self.local < 1 or int(self.local) != self.local:
                raise DomainError("local_radius must be an integer >= 1")
            object.__setattr__(self, "local", int(self.local))
        elif self.kind == "torus":
            if not 0.0 < self.local <= 0.5:
                raise DomainError("local_halfwidth must lie in (0, 0.5]")
        else:
            raise DomainError(f"unknown proposal kind {self.kind!r}")

    @classmethod
    def discrete(cls, local_radius: int = 1, global_prob: float = 0.05) -> "ProposalSpec":
        return cls("discrete", local_radius, global_prob)

    @classmethod
    def torus(cls, local_halfwidth: float = 0.1, global_prob: float = 0.05) -> "ProposalSpec":
        return cls("torus", local_halfwidth, global_prob)

    def check_space(self, space: StateSpace):
        if (self.kind == "discrete") != space.is_discrete:
            raise DomainError(f"{self.kind} proposal used on a {space.kind} space")

    def inf_density(self, space: StateSpace) -> float:
        """Lower bound of ``q(x, y)`` w.r.t. the reference measure."""
        self.check_space(space)
        if space.is_discrete:
            return float(space.size * proposal_matrix(self, space).min())
        if self.local >= 0.5:
            return 1.0
        return self.global_prob


def proposal_matrix(spec: ProposalSpec, space: StateSpace) -> np.ndarray:
    """Proposal masses ``q(x, y)`` on a finite space (rows sum to one)."""
    spec.check_space(space)
    K = space.size
    r = spec.local
    Q = np.full((K, K), spec.global_prob / K)
    rows = np.arange(K)
    for off in list(range(-r, 0)) + list(range(1, r + 1)):
        np.add.at(Q, (rows, (rows + off) % K), (1.0 - spec.global_prob) / (2 * r))
    return Q


def propose(rng: np.random.Generator, spec: ProposalSpec, x, space: StateSpace, size=None):
    """Draw ``y ~ q(x, .)``; with ``size`` set, draw that many independent
    proposals from the same ``x`` (or from an array of starting points)."""
    spec.check_space(space)
    if size is None:
        x = space.check(x)
        u = rng.random(2)
        if space.is_discrete:
            return int(_jit.decode_discrete(x, space.size, spec.local, spec.global_prob, u[0], u[1]))
        return float(_jit.decode_torus(x, spec.local, spec.global_prob, u[0], u[1]))
    u = rng.random((size, 2))
    if space.is_discrete:
        xs = np.broadcast_to(np.asarray(x, dtype=np.int64), (size,)).copy()
        return _jit.decode_discrete_many(xs, space.size, spec.local, spec.global_prob, u)
    xs = np.broadcast_to(np.asarray(x, dtype=float), (size,)).copy()
    return _jit.decode_torus_many(xs, float(spec.local), spec.global_prob, u)


def log_acceptance_ratio(model: TargetModel, theta, x, y) -> float:
    th = np.asarray(theta, dtype=float)
    return float(_jit.log_accept_ratio(model.log_weight(x), model.log_weight(y),
                                       th[stratum_index(model, x)], th[stratum_index(model, y)]))


def acceptance_prob(model: TargetModel, theta, x, y) -> float:
    """``1 ^ pi_theta(y) / pi_theta(x)``, evaluated in log space."""
    lr = log_acceptance_ratio(model, theta, x, y)
    return 1.0 if lr >= 0.0 else math.exp(lr)


def mh_step(rng: np.random.Generator, model: TargetModel, spec: ProposalSpec, theta, x):
    """One draw from ``P_theta(x, .)``."""
    spec.check_space(model.space)
    x = model.space.check(x)
    u = rng.random(UNIFORMS_PER_STEP)
    if model.space.is_discrete:
        y = int(_jit.decode_discrete(x, model.space.size, spec.local, spec.global_prob, u[0], u[1]))
        if y == x:
            return x
    else:
        y = float(_jit.decode_torus(x, spec.local, spec.global_prob, u[0], u[1]))
    return y if _jit.accept(log_acceptance_ratio(model, theta, x, y), u[2]) else x


def mh_chain(rng: np.random.Generator, model: TargetModel, spec: ProposalSpec, theta, x0,
             n_steps: int) -> np.ndarray:
    """States ``X_1, ..., X_n`` of the MH chain with ``theta`` held fixed.

    Consumes the generator exactly like ``n_steps`` calls of :func:`mh_step`.
    """
    from .wl import ScheduleSpec, run_chain, ChainState

    state = ChainState(0, x0, np.asarray(theta, dtype=float), rng)
    _, res = run_chain(state, model, spec, ScheduleSpec(0.5, 1.0), "frozen", n_steps, thinning=1)
    return res.trace.x if model.space.kind == "torus" else res.trace.x.astype(np.int64)


def transition_matrix(model: TargetModel, spec: ProposalSpec, theta) -> np.ndarray:
    """Exact ``K x K`` matrix of ``P_theta`` on a finite space."""
    if not model.space.is_discrete:
        raise UnsupportedOperation("transition matrices exist only for finite state spaces")
    spec.check_space(model.space)
    th = np.asarray(theta, dtype=float)
    lw = model.log_weights
    lt = np.log(th)[model.stratification.labels]
    # log pi_theta up to a constant
    s = lw - lt
    alpha = np.exp(np.minimum(0.0, s[None, :] - s[:, None]))
    P = proposal_matrix(spec, model.space) * alpha
    np.fill_diagonal(P, 0.0)
    np.fill_diagonal(P, 1.0 - P.sum(axis=1))
    return P
