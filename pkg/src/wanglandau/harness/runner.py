"""Seeded runs, replicate ensembles and the files they write.

Seed derivation: replicate ``r`` of an experiment with master seed ``s``
draws from ``PCG64(mix64(s, r))`` where ``mix64`` is the SplitMix64
finalizer applied to ``s + (r + 1) * 0x9E3779B97F4A7C15 (mod 2**64)``.
A single run uses replicate index 0.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import __version__
from ..analysis import (asymptotic_covariance, averaged_covariance, compute_U_star,
                        load_oracle, lyapunov, replicate_covariance, tangent_relative_error)
from ..errors import CLTInapplicableError, UnsupportedOperation
from ..model import compute_theta_star
from ..wl import ChainState, make_rng, run_chain
from .config import ConfigError, ExperimentConfig, build_components

log = logging.getLogger(__name__)

SCHEMA = "wl/1"
MASK64 = (1 << 64) - 1
GOLDEN64 = 0x9E3779B97F4A7C15


def mix64(master_seed: int, index: int) -> int:
    z = (master_seed + (index + 1) * GOLDEN64) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _dump(path: Path, doc: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _provenance(cfg: ExperimentConfig) -> dict:
    return {"schema": SCHEMA, "config_digest": cfg.digest(), "code_version": __version__}


@dataclass
class RunSummary:
    theta: np.ndarray
    l1_error: float
    V: float
    min_theta: float | None
    occupancy: np.ndarray
    polyak: np.ndarray
    seed: int
    n_steps: int
    wall_clock: float

    def to_json(self) -> dict:
        # wall-clock goes to timing.json so the summary stays reproducible
        return {"theta": self.theta.tolist(), "l1_error": self.l1_error, "V": self.V,
                "min_theta": self.min_theta, "occupancy": self.occupancy.tolist(),
                "polyak": self.polyak.tolist(), "seed": self.seed, "n_steps": self.n_steps}


def _finite_or_none(v):
    # the floor window is empty when n_steps < min_theta_from
    return None if v is None or not np.isfinite(v) else float(v)


def _start(cfg, comps, seed):
    return ChainState.start(comps.model, make_rng(seed), x0=cfg.x0, theta0=cfg.theta0)


def write_trace(path: Path, trace, theta_star, discrete: bool):
    """CSV with columns ``n, x, stratum, theta_0..theta_{d-1}, min_theta, V, gamma``."""
    d = theta_star.size
    header = ",".join(["n", "x", "stratum"] + [f"theta_{i}" for i in range(d)]
                      + ["min_theta", "V", "gamma"])
    th = trace.theta
    cols = np.zeros((0, d + 6))
    if len(trace):
        V = np.sum(theta_star * np.log(theta_star / th), axis=1)
        cols = np.column_stack([trace.n, trace.x, trace.stratum, th, th.min(axis=1), V,
                                trace.gamma])
    fmt = ["%d", "%d" if discrete else "%.17g", "%d"] + ["%.17g"] * (d + 3)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, cols, fmt=fmt, delimiter=",", header=header, comments="")


def run_single(cfg: ExperimentConfig, out=None):
    """One chain from replicate seed 0; writes ``trace.csv``, ``summary.json``
    and ``timing.json`` under ``out`` (default ``cfg.outputs``).

    Returns ``(RunSummary, ChainResult)``.
    """
    if cfg.replicates != 1:
        raise ConfigError("replicates: run expects replicates == 1; use run_replicates")
    comps = build_components(cfg)
    out = Path(cfg.outputs if out is None else out)
    seed = mix64(cfg.master_seed, 0)
    ts = np.asarray(compute_theta_star(comps.model), dtype=float)
    t0 = time.perf_counter()
    state = _start(cfg, comps, seed)
    state, res = run_chain(state, comps.model, comps.proposal, comps.schedule, cfg.update_rule,
                           cfg.n_steps, thinning=cfg.stride, min_theta_from=cfg.min_theta_from)
    wall = time.perf_counter() - t0
    theta = state.theta
    polyak = res.theta_sum / cfg.n_steps if cfg.n_steps else theta.copy()
    summary = RunSummary(theta, float(np.abs(theta - ts).sum()), lyapunov(theta, ts),
                         _finite_or_none(res.min_theta), res.occupancy.astype(float), polyak,
                         seed, cfg.n_steps, wall)
    write_trace(out / "trace.csv", res.trace, ts, comps.model.space.is_discrete)
    _dump(out / "summary.json", {**_provenance(cfg), "theta_star": ts.tolist(), **summary.to_json()})
    _dump(out / "timing.json", {"wall_clock_seconds": wall})
    log.info("run finished: %d steps in %.2fs, |theta - theta_star|_1 = %.3g",
             cfg.n_steps, wall, summary.l1_error)
    return summary, res


def _replicate(cfg, comps, r, seed):
    state = _start(cfg, comps, seed)
    state, res = run_chain(state, comps.model, comps.proposal, comps.schedule, cfg.update_rule,
                           cfg.n_steps, record=False, min_theta_from=cfg.min_theta_from)
    polyak = res.theta_sum / cfg.n_steps if cfg.n_steps else state.theta.copy()
    return {"replicate": r, "seed": seed, "theta": state.theta.tolist(),
            "polyak": polyak.tolist(), "min_theta": _finite_or_none(res.min_theta)}


def run_replicates(cfg: ExperimentConfig, out=None, oracle=None, seeds=None, order=None,
                   workers=None) -> dict:
    """``R`` independent chains; returns (and writes) the ensemble document.

    ``oracle`` is an oracle dict or path; when given, the empirical
    covariances are compared with their predicted limits.  ``seeds``
    overrides the derived per-replicate seeds; ``order`` permutes the
    execution order (the reduction is by replicate index either way).
    """
    comps = build_components(cfg)
    R = cfg.replicates
    out = Path(cfg.outputs if out is None else out)
    if R < 2:
        raise ConfigError("replicates: an ensemble needs at least 2 replicates")
    seeds = [mix64(cfg.master_seed, r) for r in range(R)] if seeds is None else list(seeds)
    if len(seeds) != R:
        raise ConfigError("replicates: seed override must list one seed per replicate")
    order = range(R) if order is None else list(order)
    if sorted(order) != list(range(R)):
        raise ValueError("order must be a permutation of the replicate indices")
    if isinstance(oracle, (str, Path)):
        oracle = load_oracle(oracle)
    if oracle is not None and oracle.get("model_digest") != comps.model.digest():
        raise ConfigError("oracle: model digest does not match the configured model")

    results = {}
    n_workers = cfg.workers if workers is None else workers
    t0 = time.perf_counter()
    if n_workers > 1:
        with ThreadPoolExecutor(n_workers) as pool:
            futs = {r: pool.submit(_replicate, cfg, comps, r, seeds[r]) for r in order}
            results = {r: f.result() for r, f in futs.items()}
    else:
        for r in order:
            results[r] = _replicate(cfg, comps, r, seeds[r])
    wall = time.perf_counter() - t0
    if cfg.write_replicates:
        for r in range(R):
            _dump(out / "replicates" / f"r{r:05d}.json", results[r])

    ts = np.asarray(compute_theta_star(comps.model), dtype=float)
    ends = np.array([results[r]["theta"] for r in range(R)])
    pol = np.array([results[r]["polyak"] for r in range(R)])
    n = cfg.n_steps
    doc = {**_provenance(cfg), "model_digest": comps.model.digest(), "replicates": R,
           "n_steps": n, "theta_star": ts.tolist(), "mean_theta": ends.mean(axis=0).tolist(),
           "min_theta": _finite_or_none(min((results[r]["min_theta"] for r in range(R)
                                             if results[r]["min_theta"] is not None),
                                            default=None))}
    if n > 0:
        g_n = comps.schedule.gamma(n)
        doc["gamma_n"] = g_n
        doc["cov_gamma"] = replicate_covariance(ends, ts, 1.0 / g_n).tolist()
        doc["cov_sqrt_n"] = replicate_covariance(ends, ts, float(n)).tolist()
        doc["cov_polyak_sqrt_n"] = replicate_covariance(pol, ts, float(n)).tolist()
    if oracle is not None and n > 0:
        doc["comparison"] = compare_with_oracle(doc, oracle, comps.schedule, comps.model.d)
    _dump(out / "ensemble.json", doc)
    _dump(out / "timing.json", {"wall_clock_seconds": wall})
    return doc


def compare_with_oracle(doc: dict, oracle: dict, schedule, d: int) -> dict:
    """Predicted limiting covariances and their tangent-space relative errors."""
    U = np.asarray(oracle["U_star"], dtype=float)
    cmp = {}
    try:
        ac = asymptotic_covariance(schedule, d, U)
    except CLTInapplicableError as exc:
        cmp["clt"] = f"not applicable: {exc}"
    else:
        cmp["pred_gamma"] = ac.gamma_scaled.tolist()
        cmp["err_gamma"] = tangent_relative_error(doc["cov_gamma"], ac.gamma_scaled)
        if ac.sqrt_n_scaled is not None:
            cmp["pred_sqrt_n"] = ac.sqrt_n_scaled.tolist()
            cmp["err_sqrt_n"] = tangent_relative_error(doc["cov_sqrt_n"], ac.sqrt_n_scaled)
    pa = averaged_covariance(d, U)
    cmp["pred_polyak_sqrt_n"] = pa.tolist()
    cmp["err_polyak_sqrt_n"] = tangent_relative_error(doc["cov_polyak_sqrt_n"], pa)
    return cmp


def compute_oracle(cfg: ExperimentConfig, out=None, clt=None) -> dict:
    """Write ``oracle.json`` for the configured model.

    ``clt=None`` computes ``U_star`` and ``rho`` when the model is finite and
    leaves them null on the torus; ``clt=True`` on the torus raises.
    """
    comps = build_components(cfg)
    out = Path(cfg.outputs if out is None else out)
    model = comps.model
    if clt is None:
        clt = model.space.is_discrete
    if clt and not model.space.is_discrete:
        raise UnsupportedOperation("U_star and rho need a finite state space; the torus "
                                   "oracle provides theta_star only")
    if clt:
        doc = compute_U_star(model, comps.proposal).to_json()
    else:
        doc = {"schema": SCHEMA, "theta_star": compute_theta_star(model).tolist(),
               "U_star": None, "rho": None, "model_digest": model.digest()}
    _dump(out / "oracle.json", doc)
    return doc
