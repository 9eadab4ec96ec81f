"""State spaces, stratified target densities and the exact mass oracle.

Two kinds of state space are supported: a finite set ``{0, ..., K-1}`` and
the one-dimensional torus ``[0, 1)``.  A :class:`TargetModel` couples a space
with an unnormalized log-density and a partition into ``d >= 2`` strata.
On a finite space all densities are handled as probability masses; on the
torus they are densities with respect to Lebesgue measure.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _jit
from .errors import DegenerateStratumError, DomainError, ModelValidationError

MIN_STRATUM_MASS = 1e-12
TORUS_VALIDATION_POINTS = 10_000


@dataclass(frozen=True)
class StateSpace:
    """Either ``StateSpace.discrete(K)`` or ``StateSpace.torus()``."""

    kind: str
    size: int | None = None

    def __post_init__(self):
        if self.kind == "discrete":
            if self.size is None or int(self.size) != self.size or self.size < 2:
                raise ModelValidationError("discrete space needs an integer size K >= 2")
        elif self.kind == "torus":
            if self.size is not None:
                raise ModelValidationError("torus space takes no size")
        else:
            raise ModelValidationError(f"unknown state space kind {self.kind!r}")

    @classmethod
    def discrete(cls, K: int) -> "StateSpace":
        return cls("discrete", int(K))

    @classmethod
    def torus(cls) -> "StateSpace":
        return cls("torus")

    @property
    def is_discrete(self) -> bool:
        return self.kind == "discrete"

    def wrap(self, x):
        """Canonical representative of ``x`` (mod K, or mod 1 on the torus)."""
        if self.is_discrete:
            return int(x) % self.size
        y = float(x) - math.floor(x)
        return 0.0 if y >= 1.0 else y

    def check(self, x):
        """Return ``x`` as a canonical state or raise :class:`DomainError`."""
        if self.is_discrete:
            if isinstance(x, (bool, np.bool_)) or not float(x).is_integer():
                raise DomainError(f"state {x!r} is not an integer")
            xi = int(x)
            if not 0 <= xi < self.size:
                raise DomainError(f"state {xi} outside {{0, ..., {self.size - 1}}}")
            return xi
        xf = float(x)
        if not (0.0 <= xf <= 1.0):
            raise DomainError(f"torus state {x!r} outside [0, 1]; wrap it first")
        return xf

    def states(self) -> np.ndarray:
        if not self.is_discrete:
            raise DomainError("the torus has no finite state list")
        return np.arange(self.size)


@dataclass(frozen=True, eq=False)
class Stratification:
    """Partition of the state space into ``d`` strata.

    Built either from an explicit label table (finite spaces) or from bin
    edges ``0 = a_0 < a_1 < ... < a_d = 1`` (torus, last bin closed).
    """

    d: int
    labels: np.ndarray | None = None
    edges: np.ndarray | None = None

    def __post_init__(self):
        if self.d < 2:
            raise ModelValidationError(f"need at least 2 strata, got d={self.d}")
        if (self.labels is None) == (self.edges is None):
            raise ModelValidationError("give exactly one of labels or edges")
        if self.labels is not None:
            lab = np.asarray(self.labels)
            if lab.ndim != 1 or not np.issubdtype(lab.dtype, np.integer):
                raise ModelValidationError("labels must be a 1-D integer table")
            if lab.min() < 0 or lab.max() >= self.d:
                raise ModelValidationError("labels must lie in {0, ..., d-1}")
            if np.unique(lab).size != self.d:
                raise ModelValidationError("every stratum must contain at least one state")
            lab = lab.astype(np.int64)
            lab.setflags(write=False)
            object.__setattr__(self, "labels", lab)
        else:
            e = np.asarray(self.edges, dtype=float)
            if e.shape != (self.d + 1,):
                raise ModelValidationError("need d+1 bin edges")
            if e[0] != 0.0 or e[-1] != 1.0:
                raise ModelValidationError("bin edges must start at 0 and end at 1")
            if np.any(np.diff(e) <= 0):
                raise ModelValidationError("bin edges must be strictly increasing")
            e.setflags(write=False)
            object.__setattr__(self, "edges", e)

    @classmethod
    def explicit(cls, labels) -> "Stratification":
        lab = np.asarray(labels, dtype=np.int64)
        return cls(int(lab.max()) + 1 if lab.size else 0, labels=lab)

    @classmethod
    def bins(cls, edges) -> "Stratification":
        e = np.asarray(edges, dtype=float)
        return cls(e.size - 1, edges=e)

    @classmethod
    def equal_bins(cls, d: int) -> "Stratification":
        if d < 2:
            raise ModelValidationError(f"need at least 2 strata, got d={d}")
        return cls.bins(np.linspace(0.0, 1.0, d + 1))


class WeightVector:
    """A point of the open probability simplex over ``d`` strata.

    The input is renormalized on construction; every component must end up
    strictly inside ``(0, 1)``.
    """

    __slots__ = ("w",)

    def __init__(self, w, normalize: bool = True):
        arr = np.array(w, dtype=float).reshape(-1)
        if arr.size < 2:
            raise DomainError("a weight vector needs d >= 2 components")
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise DomainError(f"weights must be finite and positive, got {arr}")
        if normalize:
            arr = arr / arr.sum()
        elif abs(arr.sum() - 1.0) > 1e-12:
            raise DomainError(f"weights sum to {arr.sum()!r}, not 1")
        if np.any(arr >= 1.0):
            raise DomainError("weights must lie strictly inside (0, 1)")
        arr.setflags(write=False)
        self.w = arr

    @classmethod
    def uniform(cls, d: int) -> "WeightVector":
        return cls(np.full(d, 1.0 / d), normalize=False)

    @property
    def d(self) -> int:
        return self.w.size

    @property
    def min(self) -> float:
        return float(self.w.min())

    def __array__(self, dtype=None, copy=None):
        return self.w if dtype is None else self.w.astype(dtype)

    def __len__(self):
        return self.w.size

    def __getitem__(self, i):
        return self.w[i]

    def __iter__(self):
        return iter(self.w)

    def __eq__(self, other):
        return np.array_equal(self.w, np.asarray(other, dtype=float))

    __hash__ = None

    def tolist(self):
        return self.w.tolist()

    def __repr__(self):
        return f"WeightVector({np.array2string(self.w, precision=6)})"


@dataclass(frozen=True)
class FourierPotential:
    """Periodic potential ``U(x) = sum_k cos[k] cos(2 pi k x) + sin[k] sin(2 pi k x)``.

    Coefficients are indexed from frequency 1.
    """

    cos: tuple = ()
    sin: tuple = ()

    def __post_init__(self):
        m = max(len(self.cos), len(self.sin))
        c = tuple(float(v) for v in self.cos) + (0.0,) * (m - len(self.cos))
        s = tuple(float(v) for v in self.sin) + (0.0,) * (m - len(self.sin))
        if not all(math.isfinite(v) for v in c + s):
            raise ModelValidationError("potential coefficients must be finite")
        object.__setattr__(self, "cos", c)
        object.__setattr__(self, "sin", s)

    def arrays(self):
        return np.array(self.cos, dtype=float), np.array(self.sin, dtype=float)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        u = np.zeros_like(x)
        for k, (a, b) in enumerate(zip(self.cos, self.sin), start=1):
            w = 2.0 * np.pi * k * x
            u = u + a * np.cos(w) + b * np.sin(w)
        return u


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite trapezoid rule with doubling and Richardson extrapolation."""

    nodes: int = 1024
    tol: float = 1e-10
    max_nodes: int = 2**22

    def __post_init__(self):
        if self.nodes < 1000:
            raise DomainError("torus quadrature needs at least 1000 nodes")


@dataclass(frozen=True, eq=False)
class TargetModel:
    """Unnormalized target ``pi`` on a state space, with its stratification.

    Use :meth:`discrete` or :meth:`torus` to build one.  Validation happens
    at construction: the log-weight must be finite everywhere and every
    stratum must carry mass at least ``1e-12``.
    """

    space: StateSpace
    stratification: Stratification
    log_weights: np.ndarray | None = None
    potential: FourierPotential | None = None
    beta: float = 1.0
    name: str = "custom"
    _theta_star: np.ndarray = field(init=False, repr=False)
    _log_z: float = field(init=False, repr=False)

    def __post_init__(self):
        strat = self.stratification
        if self.space.is_discrete:
            if self.log_weights is None or self.potential is not None:
                raise ModelValidationError("a discrete model needs a log-weight table")
            lw = np.array(self.log_weights, dtype=float)
            if lw.shape != (self.space.size,):
                raise ModelValidationError("log-weight table must have one entry per state")
            if not np.all(np.isfinite(lw)):
                raise ModelValidationError("log-weight is not finite on every state")
            if strat.labels is None or strat.labels.size != self.space.size:
                raise ModelValidationError("discrete models need one stratum label per state")
            lw.setflags(write=False)
            object.__setattr__(self, "log_weights", lw)
        else:
            if self.potential is None or self.log_weights is not None:
                raise ModelValidationError("a torus model needs a Fourier potential")
            if strat.edges is None:
                raise ModelValidationError("torus models are stratified by bin edges")
            if not math.isfinite(self.beta):
                raise ModelValidationError("beta must be finite")
            grid = np.arange(TORUS_VALIDATION_POINTS) / TORUS_VALIDATION_POINTS
            if not np.all(np.isfinite(self.log_weight_array(grid))):
                raise ModelValidationError("log-weight is not finite on the validation grid")
        masses, log_z = _stratum_masses(self, QuadratureSpec())
        object.__setattr__(self, "_theta_star", masses)
        object.__setattr__(self, "_log_z", log_z)
        if np.any(masses < MIN_STRATUM_MASS):
            bad = np.flatnonzero(masses < MIN_STRATUM_MASS).tolist()
            raise DegenerateStratumError(f"strata {bad} have mass below {MIN_STRATUM_MASS}")

    @classmethod
    def discrete(cls, labels, weights=None, log_weights=None, name="custom") -> "TargetModel":
        if (weights is None) == (log_weights is None):
            raise ModelValidationError("give exactly one of weights or log_weights")
        if weights is not None:
            w = np.asarray(weights, dtype=float)
            if np.any(~np.isfinite(w)) or np.any(w <= 0):
                raise ModelValidationError("weights must be finite and positive")
            log_weights = np.log(w)
        strat = Stratification.explicit(labels)
        return cls(StateSpace.discrete(len(strat.labels)), strat,
                   log_weights=np.asarray(log_weights, dtype=float), name=name)

    @classmethod
    def torus(cls, potential: FourierPotential, beta=1.0, edges=None, d=None,
              name="custom") -> "TargetModel":
        if (edges is None) == (d is None):
            raise ModelValidationError("give exactly one of edges or d")
        strat = Stratification.bins(edges) if edges is not None else Stratification.equal_bins(d)
        return cls(StateSpace.torus(), strat, potential=potential, beta=float(beta), name=name)

    @property
    def d(self) -> int:
        return self.stratification.d

    def log_weight(self, x) -> float:
        x = self.space.check(x)
        if self.space.is_discrete:
            return float(self.log_weights[x])
        ca, sb = self.potential.arrays()
        return float(_jit.trig_log_weight(x, self.beta, ca, sb))

    def log_weight_array(self, xs) -> np.ndarray:
        if self.space.is_discrete:
            return self.log_weights[np.asarray(xs, dtype=np.int64)]
        return -self.beta * self.potential(xs)

    def pmf(self) -> np.ndarray:
        """Normalized target masses on a finite space."""
        if not self.space.is_discrete:
            raise DomainError("pmf() is only defined on finite spaces")
        lw = self.log_weights - self.log_weights.max()
        p = np.exp(lw)
        return p / p.sum()

    def describe(self) -> dict:
        """JSON-able description; its hash identifies the model."""
        if self.space.is_discrete:
            return {"space": "discrete", "log_weights": self.log_weights.tolist(),
                    "labels": self.stratification.labels.tolist()}
        return {"space": "torus", "beta": self.beta, "cos": list(self.potential.cos),
                "sin": list(self.potential.sin),
                "edges": self.stratification.edges.tolist()}

    def digest(self) -> str:
        blob = json.dumps(self.describe(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def stratum_index(model: TargetModel, x) -> int:
    """Index ``i`` of the stratum containing ``x``."""
    x = model.space.check(x)
    strat = model.stratification
    if strat.labels is not None:
        return int(strat.labels[x])
    return int(_jit.bin_index(x, strat.edges))


def stratum_indices(model: TargetModel, xs) -> np.ndarray:
    """Vectorized :func:`stratum_index` (no domain checks)."""
    strat = model.stratification
    if strat.labels is not None:
        return strat.labels[np.asarray(xs, dtype=np.int64)]
    idx = np.searchsorted(strat.edges, np.asarray(xs, dtype=float), side="right") - 1
    return np.clip(idx, 0, strat.d - 1)


def unnormalized_density(model: TargetModel, x) -> float:
    val = math.exp(model.log_weight(x))
    if not (val > 0 and math.isfinite(val)):
        raise ModelValidationError(f"density at {x!r} is {val!r}")
    return val


def _torus_bin_trapezoid(model, a, b, m, shift):
    xs = np.linspace(a, b, m + 1)
    f = np.exp(model.log_weight_array(xs) - shift)
    h = (b - a) / m
    return h * (f.sum() - 0.5 * (f[0] + f[-1]))


def _stratum_masses(model: TargetModel, quad: QuadratureSpec):
    """Normalized stratum masses and log of the total (unnormalized) mass."""
    if model.space.is_discrete:
        lw = model.log_weights
        shift = lw.max()
        p = np.exp(lw - shift)
        masses = np.bincount(model.stratification.labels, weights=p,
                             minlength=model.d)
        total = masses.sum()
        # counting measure weighted 1/K
        return masses / total, float(shift + math.log(total / model.space.size))

    edges = model.stratification.edges
    grid = np.arange(TORUS_VALIDATION_POINTS) / TORUS_VALIDATION_POINTS
    shift = float(model.log_weight_array(grid).max())
    M = quad.nodes

    def level(M):
        return np.array([
            _torus_bin_trapezoid(model, a, b, max(2, int(math.ceil(M * (b - a)))), shift)
            for a, b in zip(edges[:-1], edges[1:])
        ])

    coarse = level(M)
    prev = None
    while True:
        fine = level(2 * M)
        extrap = (4.0 * fine - coarse) / 3.0
        theta = extrap / extrap.sum()
        # sup-norm stop, also required per stratum relative to its mass so
        # that light strata get the same relative accuracy
        if prev is not None:
            change = np.abs(theta - prev)
            if change.max() < quad.tol and np.all(change < quad.tol * theta):
                break
        if 2 * M >= quad.max_nodes:
            warnings.warn("torus quadrature hit its node cap before reaching tolerance",
                          RuntimeWarning, stacklevel=3)
            break
        prev, coarse, M = theta, fine, 2 * M
    return theta, float(shift + math.log(extrap.sum()))


def compute_theta_star(model: TargetModel, quad: QuadratureSpec | None = None) -> WeightVector:
    """Stratum masses ``theta_star(i) = pi(X_i) / pi(X)``.

    Exact summation on finite spaces; extrapolated trapezoid quadrature,
    refined until two successive doublings agree to ``quad.tol`` in sup norm
    and relative to each stratum mass, on the torus.
    """
    if quad is None:
        theta = model._theta_star
    else:
        theta, _ = _stratum_masses(model, quad)
    if np.any(theta < MIN_STRATUM_MASS):
        raise DegenerateStratumError("a stratum has mass below 1e-12")
    return WeightVector(theta)


def normalized_density(model: TargetModel, x) -> float:
    """``pi(x)`` after normalization (a probability mass on finite spaces)."""
    lw = model.log_weight(x)
    if model.space.is_discrete:
        return float(model.pmf()[x])
    return math.exp(lw - model._log_z)


def biased_density(model: TargetModel, theta, theta_star, x) -> float:
    """Value at ``x`` of the stratum-reweighted density ``pi_theta``.

    ``pi_theta(x) = pi(x) / theta(I(x)) / sum_i theta_star(i) / theta(i)``.
    Only the oracles need this; the sampler works with unnormalized ratios.
    """
    th = np.asarray(theta, dtype=float)
    ts = np.asarray(theta_star, dtype=float)
    norm = float(np.sum(ts / th))
    return normalized_density(model, x) / th[stratum_index(model, x)] / norm


def biased_pmf(model: TargetModel, theta, theta_star=None) -> np.ndarray:
    """The full vector of ``pi_theta`` masses on a finite space."""
    p = model.pmf()
    th = np.asarray(theta, dtype=float)
    ts = model._theta_star if theta_star is None else np.asarray(theta_star, dtype=float)
    q = p / th[model.stratification.labels]
    return q / np.sum(ts / th)


def builtin_model(name: str, **params) -> TargetModel:
    """Named benchmark models.

    ``discrete-flat``
        Flat target on ``K`` states (default 4) cut into ``d`` contiguous
        equal blocks (default 2).
    ``discrete-skew``
        ``K=4``: weights (1, 1, 1, 5) with strata {0,1}, {2,3}.
        ``K=12``: weights (1,1,1,5, 2,2,2,10, 4,4,4,20) with strata of four
        consecutive states.
    ``torus-doublewell``
        ``U(x) = cos(4 pi x)`` on the torus at inverse temperature ``beta``
        (default 4) with ``d`` equal bins (default 6).
    """
    if name == "discrete-flat":
        K = int(params.pop("K", 4))
        d = int(params.pop("d", 2))
        _no_extra(name, params)
        if d < 2 or K < d:
            raise ModelValidationError("discrete-flat needs 2 <= d <= K")
        labels = (np.arange(K) * d) // K
        return TargetModel.discrete(labels, weights=np.ones(K), name=name)
    if name == "discrete-skew":
        K = int(params.pop("K", 4))
        _no_extra(name, params)
        if K == 4:
            return TargetModel.discrete([0, 0, 1, 1], weights=[1, 1, 1, 5], name=name)
        if K == 12:
            w = np.array([1, 1, 1, 5], dtype=float)
            weights = np.concatenate([w, 2 * w, 4 * w])
            return TargetModel.discrete(np.arange(12) // 4, weights=weights, name=name)
        raise ModelValidationError("discrete-skew is defined for K=4 and K=12")
    if name == "torus-doublewell":
        beta = float(params.pop("beta", 4.0))
        d = int(params.pop("d", 6))
        _no_extra(name, params)
        return TargetModel.torus(FourierPotential(cos=(0.0, 1.0)), beta=beta, d=d, name=name)
    raise ModelValidationError(f"unknown builtin model {name!r}")


def _no_extra(name, params):
    if params:
        raise ModelValidationError(f"{name} does not take parameters {sorted(params)}")
