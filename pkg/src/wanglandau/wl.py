"""Wang-Landau stochastic approximation: schedules, updates and the coupled loop.

The chain alternates one MH move under ``pi_theta`` with a weight update
that raises the weight of the stratum just visited.  Two loops are provided:
:func:`wl_iterate` is a plain Python loop with per-step observers, and
:func:`run_chain` is the compiled engine that records a thinned trace.
Both read the random stream identically and produce identical states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _jit
from .errors import DomainError, ObserverError
from .kernel import UNIFORMS_PER_STEP, ProposalSpec, mh_step
from .model import TargetModel, WeightVector, stratum_index

RULES = {"linearized": _jit.LINEARIZED, "standard": _jit.STANDARD, "frozen": _jit.FROZEN}
CHUNK = 1 << 16


@dataclass(frozen=True)
class ScheduleSpec:
    """Polynomial step sizes ``gamma_n = gamma_star / n**alpha``.

    ``alpha`` must lie in ``(1/2, 1]``.  When ``gamma_star >= 1`` the first
    steps would leave ``[0, 1)``; pass ``cap < 1`` to clip them
    (``gamma_n = min(gamma_star / n**alpha, cap)``), which keeps the sequence
    non-increasing and changes nothing once ``gamma_star / n**alpha < cap``.
    """

    gamma_star: float
    alpha: float
    cap: float | None = None

    def __post_init__(self):
        if not (self.gamma_star > 0 and math.isfinite(self.gamma_star)):
            raise DomainError("gamma_star must be positive")
        if not 0.5 < self.alpha <= 1.0:
            raise DomainError(
                f"alpha={self.alpha} outside (1/2, 1]: need sum gamma_n = inf and "
                "sum gamma_n^2 < inf")
        if self.cap is not None and not 0.0 < self.cap < 1.0:
            raise DomainError("cap must lie in (0, 1)")
        if self.cap is None and self.gamma_star >= 1.0:
            raise DomainError(
                f"gamma_star={self.gamma_star} gives gamma_1 >= 1; set cap < 1 to clip the first steps")

    @property
    def clt_case(self) -> str:
        return "i" if self.alpha < 1.0 else "ii"

    @property
    def n0(self) -> int:
        """First index from which the cap no longer binds."""
        if self.cap is None:
            return 1
        return max(1, math.ceil((self.gamma_star / self.cap) ** (1.0 / self.alpha)))

    def gamma(self, n: int) -> float:
        return gamma(self, n)

    def gammas(self, n: np.ndarray) -> np.ndarray:
        g = self.gamma_star / np.asarray(n, dtype=float) ** self.alpha
        return g if self.cap is None else np.minimum(g, self.cap)


def gamma(schedule: ScheduleSpec, n: int) -> float:
    """Step size used by the ``n``-th update (``n >= 1``)."""
    if int(n) != n or n < 1:
        raise DomainError(f"step index must be an integer >= 1, got {n!r}")
    cap = 0.0 if schedule.cap is None else schedule.cap
    return float(_jit.schedule_gamma(int(n), schedule.gamma_star, schedule.alpha, cap))


def field_H(theta, i: int) -> np.ndarray:
    """Update direction ``H_j = theta(j) * (1{j = i} - theta(i))``."""
    th = np.asarray(theta, dtype=float)
    if not 0 <= i < th.size:
        raise DomainError(f"stratum {i} outside 0..{th.size - 1}")
    ind = np.zeros_like(th)
    ind[i] = 1.0
    return th * (ind - th[i])


def update_linearized(theta, i: int, g: float) -> WeightVector:
    """``theta + g * H(theta, i)``; stays in the open simplex for ``g < 1``."""
    if not 0.0 <= g < 1.0:
        raise DomainError(f"step size {g} outside [0, 1)")
    th = np.asarray(theta, dtype=float)
    return WeightVector(th + g * field_H(th, i), normalize=False)


def update_standard(theta, i: int, g: float) -> WeightVector:
    """Multiplicative update ``theta(k) (1 + g 1{k = i}) / (1 + g theta(i))``."""
    if not 0.0 <= g < 1.0:
        raise DomainError(f"step size {g} outside [0, 1)")
    th = np.asarray(theta, dtype=float)
    if not 0 <= i < th.size:
        raise DomainError(f"stratum {i} outside 0..{th.size - 1}")
    ind = np.zeros_like(th)
    ind[i] = 1.0
    return WeightVector(th * (1.0 + g * ind) / (1.0 + g * th[i]), normalize=False)


@dataclass
class ChainState:
    """The coupled state ``(n, X_n, theta_n)`` together with its generator."""

    n: int
    x: int | float
    theta: np.ndarray
    rng: np.random.Generator = field(repr=False)

    def __post_init__(self):
        self.theta = np.array(WeightVector(self.theta).w)

    @classmethod
    def start(cls, model: TargetModel, seed_or_rng, x0=None, theta0=None) -> "ChainState":
        rng = seed_or_rng if isinstance(seed_or_rng, np.random.Generator) else make_rng(seed_or_rng)
        x0 = (0 if model.space.is_discrete else 0.0) if x0 is None else model.space.check(x0)
        th = np.full(model.d, 1.0 / model.d) if theta0 is None else theta0
        if len(th) != model.d:
            raise DomainError(f"theta0 has {len(th)} components, the model has {model.d} strata")
        return cls(0, x0, th, rng)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def wl_iterate(state: ChainState, model: TargetModel, proposal: ProposalSpec,
               schedule: ScheduleSpec, update_rule: str = "linearized", n_steps: int = 0,
               observers=(), stride: int = 1) -> ChainState:
    """Run ``n_steps`` Wang-Landau iterations in pure Python.

    Each iteration draws ``X_{n+1} ~ P_{theta_n}(X_n, .)`` and then updates
    the weights with ``gamma_{n+1}`` at the stratum of ``X_{n+1}``.  Every
    observer is called as ``obs(n, x, theta)`` after steps whose relative
    index is a multiple of ``stride`` (and after the last one).
    """
    if n_steps < 0:
        raise DomainError("n_steps must be >= 0")
    rule = _rule(update_rule)
    x = state.x
    theta = state.theta.copy()
    n = state.n
    for j in range(1, n_steps + 1):
        x = mh_step(state.rng, model, proposal, theta, x)
        n += 1
        if rule != _jit.FROZEN:
            _jit.update_inplace(theta, stratum_index(model, x), gamma(schedule, n), rule)
            if n % _jit.RENORM_EVERY == 0:
                _jit.renormalize(theta)
        if observers and (j % stride == 0 or j == n_steps):
            for obs in observers:
                try:
                    obs(n, x, theta.copy())
                except Exception as exc:
                    raise ObserverError(f"observer {obs!r} failed at step n={n}, x={x!r}") from exc
    state.n, state.x, state.theta = n, x, theta
    return state


def _rule(update_rule: str) -> int:
    try:
        return RULES[update_rule]
    except KeyError:
        raise DomainError(f"unknown update rule {update_rule!r}; use one of {sorted(RULES)}") from None


@dataclass
class Trace:
    """Thinned record of a run: one row per recorded step."""

    n: np.ndarray
    x: np.ndarray
    stratum: np.ndarray
    theta: np.ndarray
    gamma: np.ndarray

    def __len__(self):
        return self.n.size


@dataclass
class ChainResult:
    """Full-resolution statistics accumulated by :func:`run_chain`."""

    trace: Trace
    counts: np.ndarray
    theta_sum: np.ndarray
    min_theta: float
    n_steps: int

    @property
    def occupancy(self) -> np.ndarray:
        if self.n_steps == 0:
            return np.zeros_like(self.theta_sum)
        return self.counts / self.n_steps

    @property
    def polyak(self) -> WeightVector:
        from .analysis import polyak_average
        return polyak_average(self.theta_sum[None, :] / self.n_steps)


def run_chain(state: ChainState, model: TargetModel, proposal: ProposalSpec,
              schedule: ScheduleSpec, update_rule: str = "linearized", n_steps: int = 0,
              thinning: int = 1, record: bool = True, min_theta_from: int = 1):
    """Compiled Wang-Landau loop.

    Returns the advanced ``state`` and a :class:`ChainResult` holding the
    thinned trace (rows at relative steps that are multiples of ``thinning``
    plus the final step), the stratum visit counts, the running sum of
    ``theta_k`` for Polyak averaging, and ``min_k min_i theta_k(i)`` over
    ``k >= min_theta_from``.
    """
    if n_steps < 0:
        raise DomainError("n_steps must be >= 0")
    if thinning < 1:
        raise DomainError("thinning must be >= 1")
    proposal.check_space(model.space)
    rule = _rule(update_rule)
    d = model.d
    n_rec = -(-n_steps // thinning) if record else 0
    tr_n = np.zeros(n_rec, dtype=np.int64)
    tr_x = np.zeros(n_rec)
    tr_i = np.zeros(n_rec, dtype=np.int64)
    tr_theta = np.zeros((n_rec, d))
    tr_gamma = np.zeros(n_rec)
    tr_pos = np.zeros(1, dtype=np.int64)
    counts = np.zeros(d, dtype=np.int64)
    polyak = np.zeros(d)
    floor_min = np.array([np.inf])
    theta = state.theta.copy()
    x = state.x
    cap = 0.0 if schedule.cap is None else schedule.cap
    rel_total = n_steps if record else -1
    stride = thinning
    done = 0
    while done < n_steps:
        b = min(CHUNK, n_steps - done)
        u = state.rng.random((b, UNIFORMS_PER_STEP))
        if model.space.is_discrete:
            x = _jit.discrete_chunk(
                u, state.n + done, done, rel_total, int(x), theta, model.log_weights,
                model.stratification.labels, proposal.local, proposal.global_prob,
                schedule.gamma_star, schedule.alpha, cap, rule, stride, min_theta_from,
                counts, polyak, floor_min, tr_n, tr_x, tr_i, tr_theta, tr_gamma, tr_pos)
        else:
            ca, sb = model.potential.arrays()
            x = _jit.torus_chunk(
                u, state.n + done, done, rel_total, float(x), theta, model.beta, ca, sb,
                model.stratification.edges, float(proposal.local), proposal.global_prob,
                schedule.gamma_star, schedule.alpha, cap, rule, stride, min_theta_from,
                counts, polyak, floor_min, tr_n, tr_x, tr_i, tr_theta, tr_gamma, tr_pos)
        done += b
    state.n += n_steps
    state.x = int(x) if model.space.is_discrete else float(x)
    state.theta = theta
    trace = Trace(tr_n, tr_x, tr_i, tr_theta, tr_gamma)
    return state, ChainResult(trace, counts, polyak, float(floor_min[0]), n_steps)
