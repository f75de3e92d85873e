"""Run configuration: a YAML document validated into typed models.

Validation errors carry the path to the offending field, e.g.
``permutation.alpha: Input should be less than 1``.
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .series import TailSet, parse_duration

__all__ = ["ConfigError", "RunConfig", "load_config"]


class ConfigError(ValueError):
    pass


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class InputSpec(_Model):
    path: str
    step: str = "30min"
    timestamp: str = "timestamp"
    value: str = "value"
    delimiter: str = ","
    timestamp_format: Literal["auto", "iso", "epoch"] = "auto"
    label: Literal["ending", "beginning"] = "ending"
    offset: str = "0s"

    @field_validator("step", "offset")
    @classmethod
    def _duration(cls, v):
        parse_duration(v)
        return v


class TailSpec(_Model):
    kind: Literal["absolute_upper", "absolute_lower", "quantile_upper", "quantile_lower"] = "absolute_upper"
    level: float
    strict: bool = True

    @model_validator(mode="after")
    def _check(self):
        TailSet(self.kind, self.level, self.strict)
        return self

    def tailset(self) -> TailSet:
        return TailSet(self.kind, self.level, self.strict)


class LagSpec(_Model):
    max: int = Field(50, ge=0)
    min: Optional[int] = Field(None, ge=0)


class PermutationSpec(_Model):
    replicates: int = Field(1000, ge=100)
    alpha: float = Field(0.01, gt=0, lt=1)
    mode: Optional[Literal["univariate", "cross_joint", "cross_independent"]] = None
    band_convention: Literal["per_lag", "lag1_flat"] = "lag1_flat"
    two_sided: bool = False


class AnalysisSpec(_Model):
    series: list[str] = Field(default_factory=list)
    pairs: list[tuple[str, str]] = Field(default_factory=list)
    directions: Literal["forward", "both"] = "forward"


class ProcessEntry(_Model):
    name: str
    kind: Literal["iid_pareto", "markov_regime", "max_moving_average", "seasonal_spike"]
    n: int = Field(gt=0)
    seed: Optional[int] = None
    params: dict[str, Union[float, int, list[float]]] = Field(default_factory=dict)
    start: str = "2000-01-01T00:30:00"
    step: str = "30min"


class SimulateSpec(_Model):
    processes: list[ProcessEntry] = Field(min_length=1)


class EventStudySpec(_Model):
    series: str
    event_time: str
    window: str = "2y"
    agg_step: str = "30min"
    events_csv: Optional[str] = None
    region: Optional[str] = None


class StatsSpec(_Model):
    series: list[str] = Field(default_factory=list)
    thresholds: list[float] = Field(default_factory=lambda: [150.0, 300.0, 5000.0])


class CapSpec(_Model):
    series: list[str] = Field(default_factory=list)
    quarters: list[str] = Field(min_length=1)
    cap_level: float = 300.0


class RunConfig(_Model):
    seed: int = 0
    threads: int = Field(1, ge=1)
    out: str = "out"
    inputs: dict[str, InputSpec] = Field(default_factory=dict)
    tailsets: dict[str, TailSpec] = Field(default_factory=dict)
    lags: LagSpec = Field(default_factory=LagSpec)
    permutation: PermutationSpec = Field(default_factory=PermutationSpec)
    analysis: AnalysisSpec = Field(default_factory=AnalysisSpec)
    simulate: Optional[SimulateSpec] = None
    event_study: Optional[EventStudySpec] = None
    stats: Optional[StatsSpec] = None
    settle_cap: Optional[CapSpec] = None

    base_dir: Path = Field(default=Path("."), exclude=True)

    def tailset_for(self, series_id: str) -> TailSet:
        spec = self.tailsets.get(series_id) or self.tailsets.get("default")
        if spec is None:
            raise ConfigError(f"tailsets: no entry for {series_id!r} and no 'default'")
        return spec.tailset()

    def resolve_path(self, p: str) -> Path:
        path = Path(p)
        return path if path.is_absolute() else self.base_dir / path

    def echo(self) -> dict:
        """Config as embedded in outputs; omits settings that must not change results."""
        return self.model_dump(mode="json", exclude={"threads", "out", "base_dir"}, exclude_none=True)


class _Loader(yaml.SafeLoader):
    """SafeLoader that leaves timestamps as strings."""


_Loader.yaml_implicit_resolvers = {
    k: [(tag, rx) for tag, rx in v if tag != "tag:yaml.org,2002:timestamp"]
    for k, v in yaml.SafeLoader.yaml_implicit_resolvers.items()
}


def _format(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{loc}: {e['msg']}")
    return "\n".join(lines)


def parse_config(data: dict, base_dir: Path | str = ".") -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>: config must be a mapping")
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format(exc)) from None
    cfg.base_dir = Path(base_dir)
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        data = yaml.load(path.read_text(encoding="utf-8"), Loader=_Loader)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    return parse_config(data or {}, path.parent)
