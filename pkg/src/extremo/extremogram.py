"""Exceedance indicators and empirical (cross-)extremograms.

For an indicator ``I`` of length ``n`` the univariate estimate at lag ``h`` is::

    sum_{t < n-h} I[t] * I[t+h]  /  sum_{t < n} I[t]

i.e. the numerator runs over ``n - h`` terms while the denominator always
counts every exceedance. The cross version conditions on the first series
and looks ``h`` steps ahead in the second.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._kernels import joint_counts
from .series import PriceSeries, SeriesError, TailSet

__all__ = [
    "ExtremogramCurve",
    "ExtremogramError",
    "IndicatorSeries",
    "BRUTEFORCE_MAX_N",
    "cross_extremogram",
    "extremogram",
    "extremogram_bruteforce",
    "make_indicator",
]

BRUTEFORCE_MAX_N = 10_000


class ExtremogramError(ValueError):
    pass


@dataclass(frozen=True)
class IndicatorSeries:
    """Exceedance bits of one series for one resolved tail set.

    Missing observations are never exceedances.
    """

    source_id: str
    bits: np.ndarray
    tailset: TailSet | None = None
    threshold: float | None = None
    n_missing: int = 0

    def __post_init__(self):
        bits = np.array(self.bits, dtype=bool)
        if bits.ndim != 1:
            raise ExtremogramError("indicator bits must be one-dimensional")
        bits.flags.writeable = False
        object.__setattr__(self, "bits", bits)

    @property
    def n(self) -> int:
        return self.bits.size

    @property
    def exceed_count(self) -> int:
        return int(np.count_nonzero(self.bits))

    @property
    def positions(self) -> np.ndarray:
        return np.flatnonzero(self.bits)

    def with_bits(self, bits) -> "IndicatorSeries":
        return IndicatorSeries(self.source_id, bits, self.tailset, self.threshold, self.n_missing)

    def meta(self) -> dict:
        return {
            "series": self.source_id,
            "tailset": None if self.tailset is None else self.tailset.to_dict(),
            "threshold": self.threshold,
            "n": self.n,
            "exceed_count": self.exceed_count,
            "n_missing": self.n_missing,
        }


def make_indicator(series: PriceSeries | np.ndarray, tailset: TailSet) -> IndicatorSeries:
    """Flag observations strictly beyond the resolved threshold."""
    if isinstance(series, PriceSeries):
        values, missing, sid = series.values, series.missing, series.id
    else:
        values = np.asarray(series, dtype=np.float64)
        missing, sid = ~np.isfinite(values), "x"
    try:
        threshold = tailset.resolve(series)
    except SeriesError as exc:
        raise ExtremogramError(f"cannot resolve {tailset.kind} on series {sid!r}: {exc}") from None
    with np.errstate(invalid="ignore"):
        if tailset.is_upper:
            hit = values > threshold if tailset.strict else values >= threshold
        else:
            hit = values < threshold if tailset.strict else values <= threshold
    bits = hit & ~missing
    return IndicatorSeries(sid, bits, tailset, float(threshold), int(np.count_nonzero(missing)))


@dataclass(frozen=True)
class ExtremogramCurve:
    """Estimates per lag plus the integer numerators they came from.

    ``joint_counts`` is None for theoretical curves.
    """

    lags: np.ndarray
    values: np.ndarray
    joint_counts: np.ndarray | None
    meta: dict = field(default_factory=dict)

    @property
    def defined(self) -> np.ndarray:
        return np.isfinite(self.values)

    @property
    def min_lag(self) -> int:
        return int(self.lags[0])

    @property
    def max_lag(self) -> int:
        return int(self.lags[-1])

    def __len__(self) -> int:
        return self.lags.size

    def at(self, h: int) -> float:
        j = h - self.min_lag
        if not 0 <= j < self.lags.size:
            raise KeyError(h)
        return float(self.values[j])

    def to_csv(self, path: str | Path, header_comment: str | None = None) -> Path:
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["lag", "value", "defined"])
            for h, v, d in zip(self.lags.tolist(), self.values.tolist(), self.defined.tolist()):
                w.writerow([h, repr(v) if d else "", int(d)])
        return path

    def to_dict(self) -> dict:
        return {
            "lags": self.lags.tolist(),
            "values": [v if np.isfinite(v) else None for v in self.values.tolist()],
            "joint_counts": None if self.joint_counts is None else self.joint_counts.tolist(),
            "meta": self.meta,
        }

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            Path(path).write_text(text + "\n", encoding="utf-8")
        return text

    @classmethod
    def from_dict(cls, d: dict) -> "ExtremogramCurve":
        values = np.array([np.nan if v is None else v for v in d["values"]], dtype=np.float64)
        return cls(
            np.asarray(d["lags"], dtype=np.int64),
            values,
            None if d.get("joint_counts") is None else np.asarray(d["joint_counts"], dtype=np.int64),
            d.get("meta", {}),
        )


def _check_lags(n: int, max_lag: int, min_lag: int) -> None:
    if min_lag < 0:
        raise ExtremogramError(f"min_lag must be >= 0, got {min_lag}")
    if max_lag < min_lag:
        raise ExtremogramError(f"max_lag {max_lag} < min_lag {min_lag}")
    if max_lag >= n:
        raise ExtremogramError(f"max_lag {max_lag} must be below the series length {n}")


def _curve(counts: np.ndarray, denom: int, min_lag: int, meta: dict) -> ExtremogramCurve:
    lags = np.arange(min_lag, min_lag + counts.size, dtype=np.int64)
    values = counts / float(denom)
    return ExtremogramCurve(lags, values, counts.astype(np.int64), meta)


def extremogram(ind: IndicatorSeries, max_lag: int, min_lag: int = 1) -> ExtremogramCurve:
    """Univariate extremogram for lags ``min_lag..max_lag``."""
    _check_lags(ind.n, max_lag, min_lag)
    k = ind.exceed_count
    if k == 0:
        raise ExtremogramError(f"series {ind.source_id!r} has no exceedances; extremogram undefined")
    counts = joint_counts(ind.bits, ind.bits, min_lag, max_lag)
    meta = {"kind": "univariate", "x": ind.meta(), "max_lag": max_lag, "min_lag": min_lag}
    return _curve(counts, k, min_lag, meta)


def cross_extremogram(
    ind_x: IndicatorSeries, ind_y: IndicatorSeries, max_lag: int, min_lag: int = 0
) -> ExtremogramCurve:
    """P(extreme in Y at t+h | extreme in X at t), estimated empirically."""
    if ind_x.n != ind_y.n:
        raise ExtremogramError(f"length mismatch: {ind_x.n} vs {ind_y.n}; align the series first")
    _check_lags(ind_x.n, max_lag, min_lag)
    k = ind_x.exceed_count
    if k == 0:
        raise ExtremogramError(
            f"conditioning series {ind_x.source_id!r} has no exceedances; extremogram undefined"
        )
    counts = joint_counts(ind_x.bits, ind_y.bits, min_lag, max_lag)
    meta = {
        "kind": "cross",
        "x": ind_x.meta(),
        "y": ind_y.meta(),
        "max_lag": max_lag,
        "min_lag": min_lag,
    }
    return _curve(counts, k, min_lag, meta)


def extremogram_bruteforce(
    ind: IndicatorSeries | tuple[IndicatorSeries, IndicatorSeries],
    max_lag: int,
    min_lag: int | None = None,
) -> ExtremogramCurve:
    """Naive O(n * H) reference used to check the fast kernels.

    Pass a single indicator for the univariate curve or an ``(x, y)`` pair for
    the cross curve. Refuses series longer than ``BRUTEFORCE_MAX_N``.
    """
    if isinstance(ind, tuple):
        x, y = ind
        if min_lag is None:
            min_lag = 0
        if x.n != y.n:
            raise ExtremogramError(f"length mismatch: {x.n} vs {y.n}")
    else:
        x = y = ind
        if min_lag is None:
            min_lag = 1
    n = x.n
    if n > BRUTEFORCE_MAX_N:
        raise ExtremogramError(f"brute force limited to n <= {BRUTEFORCE_MAX_N}, got {n}")
    _check_lags(n, max_lag, min_lag)
    xb = x.bits.astype(np.int64)
    yb = y.bits.astype(np.int64)
    denom = int(xb.sum())
    if denom == 0:
        raise ExtremogramError("no exceedances in the conditioning series")
    counts = np.zeros(max_lag - min_lag + 1, dtype=np.int64)
    for j, h in enumerate(range(min_lag, max_lag + 1)):
        counts[j] = int(np.dot(xb[: n - h], yb[h:]))
    kind = "univariate" if x is y else "cross"
    return _curve(counts, denom, min_lag, {"kind": kind, "bruteforce": True})
