"""Experiment configuration: strict JSON schema and component construction."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Annotated, Any, Literal, Union

import numpy as np
from pydantic import (BaseModel, ConfigDict, Discriminator, Field, Tag,
                      ValidationError)

from ..kernel import ProposalSpec
from ..model import FourierPotential, TargetModel, builtin_model
from ..wl import ScheduleSpec

AUTO_TRACE_ROWS = 100_000


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field path."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class BuiltinModelConfig(_Strict):
    builtin: Literal["discrete-flat", "discrete-skew", "torus-doublewell"]
    K: int | None = None
    d: int | None = None
    beta: float | None = None


class DiscreteModelConfig(_Strict):
    space: Literal["discrete"]
    labels: list[int]
    weights: list[float] | None = None
    log_weights: list[float] | None = None


class TorusModelConfig(_Strict):
    space: Literal["torus"]
    beta: float = 1.0
    cos: list[float] = []
    sin: list[float] = []
    edges: list[float] | None = None
    d: int | None = None


def _model_tag(v: Any) -> str:
    if isinstance(v, str):
        return "name"
    if isinstance(v, dict):
        if "builtin" in v:
            return "builtin"
        return str(v.get("space", "builtin"))
    return "builtin" if isinstance(v, BuiltinModelConfig) else getattr(v, "space", "builtin")


ModelField = Annotated[
    Union[
        Annotated[Literal["discrete-flat", "discrete-skew", "torus-doublewell"], Tag("name")],
        Annotated[BuiltinModelConfig, Tag("builtin")],
        Annotated[DiscreteModelConfig, Tag("discrete")],
        Annotated[TorusModelConfig, Tag("torus")],
    ],
    Discriminator(_model_tag),
]


class ProposalConfig(_Strict):
    local_radius: int | None = None
    local_halfwidth: float | None = None
    global_prob: float = 0.05


class ScheduleConfig(_Strict):
    gamma_star: float
    alpha: float
    cap: float | None = None


class ExperimentConfig(_Strict):
    """Validated experiment description.

    ``thinning=None`` records at most ``AUTO_TRACE_ROWS`` trace rows.
    ``outputs`` and ``workers`` do not affect results and are left out of
    the config digest.
    """

    model: ModelField
    proposal: ProposalConfig = ProposalConfig()
    schedule: ScheduleConfig
    update_rule: Literal["linearized", "standard"] = "linearized"
    n_steps: int = Field(ge=0)
    replicates: int = Field(default=1, ge=1)
    master_seed: int = Field(default=0, ge=0, lt=2**64)
    thinning: int | None = Field(default=None, ge=1)
    outputs: str = "wl-out"
    x0: float | None = None
    theta0: list[float] | None = None
    min_theta_from: int = Field(default=1, ge=1)
    workers: int = Field(default=1, ge=1)
    write_replicates: bool = True

    @property
    def stride(self) -> int:
        if self.thinning is not None:
            return self.thinning
        return max(1, -(-self.n_steps // AUTO_TRACE_ROWS))

    def digest(self) -> str:
        doc = self.model_dump(mode="json", exclude={"outputs", "workers"})
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def with_overrides(self, **kw) -> "ExperimentConfig":
        data = self.model_dump(mode="json")
        data.update({k: v for k, v in kw.items() if v is not None})
        return parse_config(data)


@dataclass(frozen=True)
class Components:
    model: TargetModel
    proposal: ProposalSpec
    schedule: ScheduleSpec


def _format_validation(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{loc}: {err['msg']}")
    return "; ".join(lines)


def parse_config(data: dict) -> ExperimentConfig:
    try:
        cfg = ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_validation(exc)) from None
    build_components(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    """Read, schema-check and fail-fast construct an experiment config."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: JSON parse error at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return parse_config(data)


def _build_model(m) -> TargetModel:
    if isinstance(m, str):
        return builtin_model(m)
    if isinstance(m, BuiltinModelConfig):
        params = {k: v for k, v in (("K", m.K), ("d", m.d), ("beta", m.beta)) if v is not None}
        return builtin_model(m.builtin, **params)
    if isinstance(m, DiscreteModelConfig):
        return TargetModel.discrete(m.labels, weights=m.weights, log_weights=m.log_weights)
    return TargetModel.torus(FourierPotential(cos=tuple(m.cos), sin=tuple(m.sin)), beta=m.beta,
                             edges=m.edges, d=m.d)


def _build_proposal(p: ProposalConfig, discrete: bool) -> ProposalSpec:
    if discrete:
        if p.local_halfwidth is not None:
            raise ValueError("local_halfwidth applies to torus models; use local_radius")
        return ProposalSpec.discrete(1 if p.local_radius is None else p.local_radius, p.global_prob)
    if p.local_radius is not None:
        raise ValueError("local_radius applies to discrete models; use local_halfwidth")
    return ProposalSpec.torus(0.1 if p.local_halfwidth is None else p.local_halfwidth, p.global_prob)


def build_components(cfg: ExperimentConfig) -> Components:
    """Run every domain constructor; errors carry the offending section."""
    try:
        model = _build_model(cfg.model)
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from None
    try:
        proposal = _build_proposal(cfg.proposal, model.space.is_discrete)
    except ValueError as exc:
        raise ConfigError(f"proposal: {exc}") from None
    try:
        schedule = ScheduleSpec(cfg.schedule.gamma_star, cfg.schedule.alpha, cfg.schedule.cap)
    except ValueError as exc:
        raise ConfigError(f"schedule: {exc}") from None
    if cfg.theta0 is not None:
        th = np.asarray(cfg.theta0, dtype=float)
        if th.size != model.d or np.any(th <= 0):
            raise ConfigError(f"theta0: need {model.d} positive weights")
    if cfg.x0 is not None:
        try:
            model.space.check(cfg.x0)
        except ValueError as exc:
            raise ConfigError(f"x0: {exc}") from None
    return Components(model, proposal, schedule)
