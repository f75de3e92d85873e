"""Synthetic price processes whose extremogram is known in closed form."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta

import numpy as np

from .extremogram import ExtremogramCurve
from .rng import substream
from .series import PriceSeries, TailSet, parse_duration

__all__ = ["BURN_IN", "KINDS", "ProcessSpec", "generate", "oracle_extremogram"]

BURN_IN = 10_000

KINDS = {
    "iid_pareto": {"alpha_tail": 2.0},
    "markov_regime": {
        "p_stay": 0.9,
        "p_enter": 0.01,
        "spike_level": 1000.0,
        "base_level": 50.0,
        "noise_scale": 10.0,
    },
    "max_moving_average": {"weights": [1.0, 0.5], "alpha_tail": 2.0},
    "seasonal_spike": {
        "period": 48,
        "p_in": 0.5,
        "p_off": 0.001,
        "spike_level": 1000.0,
        "base_level": 50.0,
        "noise_scale": 10.0,
        "phase": 0,
    },
}


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class ProcessSpec:
    """A generative law plus length and seed.

    ``params`` override the per-kind defaults in ``KINDS``; unknown keys are
    rejected.
    """

    kind: str
    n: int
    seed: int = 0
    params: dict = field(default_factory=dict)
    start: datetime = datetime(2000, 1, 1, 0, 30)
    step: timedelta = timedelta(minutes=30)
    series_id: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError(f"unknown process kind {self.kind!r}; expected one of {sorted(KINDS)}")
        unknown = set(self.params) - set(KINDS[self.kind])
        if unknown:
            raise SpecError(f"unknown parameters for {self.kind}: {sorted(unknown)}")
        if int(self.n) != self.n or self.n < 1:
            raise SpecError(f"n must be a positive integer, got {self.n}")
        merged = {**KINDS[self.kind], **self.params}
        object.__setattr__(self, "params", merged)
        object.__setattr__(self, "step", parse_duration(self.step))
        self._validate()

    def _validate(self):
        p = self.params
        for key in ("p_stay", "p_enter", "p_in", "p_off"):
            if key in p and not 0.0 <= p[key] <= 1.0:
                raise SpecError(f"{key} must lie in [0, 1], got {p[key]}")
        if "alpha_tail" in p and p["alpha_tail"] <= 0:
            raise SpecError("alpha_tail must be positive")
        if "noise_scale" in p:
            if p["noise_scale"] < 0:
                raise SpecError("noise_scale must be non-negative")
            if p["spike_level"] - p["base_level"] <= 2 * p["noise_scale"]:
                raise SpecError("spike_level - base_level must exceed 2 * noise_scale")
        if self.kind == "seasonal_spike":
            if int(p["period"]) != p["period"] or p["period"] < 2:
                raise SpecError(f"period must be an integer >= 2, got {p['period']}")
        if self.kind == "max_moving_average":
            w = np.asarray(p["weights"], dtype=float)
            if w.ndim != 1 or w.size == 0 or np.any(w < 0) or not np.any(w > 0):
                raise SpecError("weights must be a non-empty list of non-negative numbers, not all zero")

    @property
    def split_level(self) -> float:
        """A threshold that separates calm from spike values exactly."""
        p = self.params
        return 0.5 * (p["spike_level"] + p["base_level"])

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "seed": self.seed,
            "params": dict(self.params),
            "start": self.start.isoformat(),
            "step_seconds": self.step.total_seconds(),
        }


def _two_state_path(g: np.random.Generator, total: int, p_enter: float, p_stay: float) -> np.ndarray:
    """Latent spike state of a two-state chain started calm, built from sojourn lengths."""
    state = np.zeros(total, dtype=bool)
    t, spiking = 0, False
    while t < total:
        p_leave = (1.0 - p_stay) if spiking else p_enter
        if p_leave <= 0.0:
            length = total - t
        else:
            length = int(g.geometric(p_leave))
        if spiking:
            state[t : t + length] = True
        t += length
        spiking = not spiking
    return state


def _levels(g, state, p) -> np.ndarray:
    noise = g.uniform(-p["noise_scale"], p["noise_scale"], state.size)
    return np.where(state, p["spike_level"], p["base_level"]) + noise


def generate(spec: ProcessSpec) -> PriceSeries:
    """Draw a series of length ``spec.n`` after discarding ``BURN_IN`` steps."""
    g = substream(spec.seed, 0)
    total = spec.n + BURN_IN
    p = spec.params
    if spec.kind == "iid_pareto":
        x = g.pareto(p["alpha_tail"], total) + 1.0
    elif spec.kind == "markov_regime":
        state = _two_state_path(g, total, p["p_enter"], p["p_stay"])
        x = _levels(g, state, p)
    elif spec.kind == "seasonal_spike":
        period = int(p["period"])
        in_slot = (np.arange(total) % period) == int(p["phase"]) % period
        prob = np.where(in_slot, p["p_in"], p["p_off"])
        state = g.random(total) < prob
        x = _levels(g, state, p)
    else:
        w = np.asarray(p["weights"], dtype=float)
        z = g.pareto(p["alpha_tail"], total + w.size - 1) + 1.0
        # X_t = max_i w_i Z_{t-i}
        x = np.max(
            np.stack([w[i] * z[w.size - 1 - i : w.size - 1 - i + total] for i in range(w.size)]),
            axis=0,
        )
    return PriceSeries(
        id=spec.series_id or spec.kind,
        start=spec.start,
        step=spec.step,
        values=x[BURN_IN:],
    )


def _markov_power(p_enter, p_stay, lags) -> np.ndarray:
    T = np.array([[1.0 - p_enter, p_enter], [1.0 - p_stay, p_stay]])
    out = np.empty(len(lags))
    for j, h in enumerate(lags):
        out[j] = np.linalg.matrix_power(T, int(h))[1, 1]
    return out


def _iid_tail_prob(tailset: TailSet, alpha: float) -> float:
    lvl = tailset.level
    if tailset.kind == "quantile_upper":
        return 1.0 - lvl
    if tailset.kind == "quantile_lower":
        return lvl
    survival = 1.0 if lvl < 1.0 else lvl ** (-alpha)
    return survival if tailset.kind == "absolute_upper" else 1.0 - survival


def _aligned(spec: ProcessSpec, tailset: TailSet) -> bool:
    p = spec.params
    return (
        tailset.kind == "absolute_upper"
        and p["base_level"] + p["noise_scale"] <= tailset.level < p["spike_level"] - p["noise_scale"]
    )


def oracle_extremogram(
    spec: ProcessSpec, tailset: TailSet, max_lag: int, min_lag: int = 1
) -> ExtremogramCurve:
    """Theoretical extremogram for lags ``min_lag..max_lag``.

    Supported combinations:

    * ``markov_regime`` / ``seasonal_spike`` with an ``absolute_upper`` level
      between the calm and spike bands (indicator equals the latent state);
    * ``iid_pareto`` with any tail set;
    * ``max_moving_average`` with ``quantile_upper``, giving the tail limit
      ``sum_i min(w_i^a, w_{i+h}^a) / sum_i w_i^a`` (approached as q -> 1).
    """
    lags = np.arange(min_lag, max_lag + 1)
    p = spec.params
    meta = {"kind": "oracle", "process": spec.to_dict(), "tailset": tailset.to_dict()}
    if spec.kind == "markov_regime":
        if not _aligned(spec, tailset):
            raise SpecError("markov_regime oracle needs an absolute_upper level between the state bands")
        values = _markov_power(p["p_enter"], p["p_stay"], lags)
    elif spec.kind == "seasonal_spike":
        if not _aligned(spec, tailset):
            raise SpecError("seasonal_spike oracle needs an absolute_upper level between the state bands")
        period = int(p["period"])
        prob = np.full(period, p["p_off"])
        prob[int(p["phase"]) % period] = p["p_in"]
        marginal = prob.mean()
        if marginal == 0:
            raise SpecError("process never spikes; extremogram undefined")
        values = np.array(
            [1.0 if h == 0 else float(np.mean(prob * np.roll(prob, -h))) / marginal for h in lags]
        )
    elif spec.kind == "iid_pareto":
        prob = _iid_tail_prob(tailset, p["alpha_tail"])
        values = np.where(lags == 0, 1.0, prob)
        if prob == 0:
            raise SpecError("tail set has zero probability; extremogram undefined")
    else:
        if tailset.kind != "quantile_upper":
            raise SpecError("max_moving_average oracle is defined for quantile_upper tail sets")
        wa = np.asarray(p["weights"], dtype=float) ** p["alpha_tail"]
        q = wa.size
        values = np.array(
            [np.minimum(wa[: q - h], wa[h:]).sum() / wa.sum() if h < q else 0.0 for h in lags]
        )
        meta["limit"] = "tail limit as q -> 1"
    return ExtremogramCurve(lags.astype(np.int64), np.asarray(values, dtype=float), None, meta)
