"""Permutation confidence bands for extremograms.

Shuffling an indicator destroys serial (and cross) extremal dependence while
keeping its exceedance count. Re-estimating the curve on many shuffles gives
a per-lag null distribution; its ``alpha/2`` and ``1 - alpha/2`` nearest-rank
quantiles form the band. The flat band is the per-lag band at lag 1.

Shuffles act on indicators rather than prices. The extremogram only sees
the indicator, so the null distribution is the same, and a uniform shuffle
of a ``k``-of-``n`` bit vector is just a uniform ``k``-subset of positions,
which is what replicates draw.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ._kernels import joint_counts_packed, joint_counts_positions, pack_bits, prefer_positions
from .extremogram import (
    ExtremogramCurve,
    ExtremogramError,
    IndicatorSeries,
    cross_extremogram,
    extremogram,
)
from .rng import STREAM, as_generator, substream

__all__ = [
    "PermutationBands",
    "PermutationConfig",
    "SignificanceReport",
    "bands_from_samples",
    "nearest_rank",
    "permutation_bands",
    "permutation_samples",
    "permute_series",
    "significance_report",
]

MODES = ("univariate", "cross_joint", "cross_independent")
CONVENTIONS = ("per_lag", "lag1_flat")


@dataclass(frozen=True)
class PermutationConfig:
    replicates: int = 1000
    alpha: float = 0.01
    seed: int = 0
    mode: str = "univariate"
    band_convention: str = "lag1_flat"
    two_sided: bool = False

    def __post_init__(self):
        if int(self.replicates) != self.replicates or self.replicates < 100:
            raise ValueError(f"replicates must be an integer >= 100, got {self.replicates}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.band_convention not in CONVENTIONS:
            raise ValueError(f"band_convention must be one of {CONVENTIONS}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stream"] = STREAM
        return d


@dataclass(frozen=True)
class PermutationBands:
    lags: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    flat_lower: float
    flat_upper: float
    config: PermutationConfig
    samples: np.ndarray | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "lags": self.lags.tolist(),
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
            "flat_lower": self.flat_lower,
            "flat_upper": self.flat_upper,
            "config": self.config.to_dict(),
        }

    def to_csv(self, path, header_comment: str | None = None):
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["lag", "lower", "upper", "flat_lower", "flat_upper"])
            for h, lo, hi in zip(self.lags.tolist(), self.lower.tolist(), self.upper.tolist()):
                w.writerow([h, repr(lo), repr(hi), repr(self.flat_lower), repr(self.flat_upper)])
        return path


def nearest_rank(sorted_samples: np.ndarray, q: float) -> np.ndarray:
    """Row ``ceil(q * R)`` (1-based) of samples sorted along axis 0."""
    r = sorted_samples.shape[0]
    # guard against 0.995 * 1000 = 994.9999... style rounding
    rank = min(r, max(1, math.ceil(q * r - 1e-9)))
    return sorted_samples[rank - 1]


def permute_series(ind: IndicatorSeries, rng) -> IndicatorSeries:
    """Uniformly shuffle the bit positions (Fisher-Yates via ``Generator.permutation``)."""
    g = as_generator(rng)
    return ind.with_bits(g.permutation(ind.bits))


def _counts_from_positions(px, py, n, min_lag, max_lag, same):
    if prefer_positions(px.size, py.size, n, max_lag - min_lag + 1):
        return joint_counts_positions(px, py, min_lag, max_lag)
    xb = np.zeros(n, dtype=bool)
    xb[px] = True
    xw = pack_bits(xb)
    if same:
        yw = xw
    else:
        yb = np.zeros(n, dtype=bool)
        yb[py] = True
        yw = pack_bits(yb)
    return joint_counts_packed(xw, yw, min_lag, max_lag)


class _Replicator:
    """Draws one shuffled replicate's joint counts from its own substream."""

    def __init__(self, x: IndicatorSeries, y: IndicatorSeries | None, mode, min_lag, max_lag, seed):
        self.n = x.n
        self.px = x.positions
        self.py = None if y is None else y.positions
        self.mode = mode
        self.min_lag = min_lag
        self.max_lag = max_lag
        self.seed = seed
        if mode == "cross_joint":
            self.union = np.union1d(self.px, self.py)
            self.ix = np.searchsorted(self.union, self.px)
            self.iy = np.searchsorted(self.union, self.py)

    def __call__(self, r: int) -> np.ndarray:
        g = substream(self.seed, r)
        n = self.n
        if self.mode == "univariate":
            px = np.sort(g.choice(n, self.px.size, replace=False))
            return _counts_from_positions(px, px, n, self.min_lag, self.max_lag, True)
        if self.mode == "cross_joint":
            # one permutation of indices applied to both series
            image = g.choice(n, self.union.size, replace=False)
            px = np.sort(image[self.ix])
            py = np.sort(image[self.iy])
        else:
            px = np.sort(g.choice(n, self.px.size, replace=False))
            py = np.sort(g.choice(n, self.py.size, replace=False))
        return _counts_from_positions(px, py, n, self.min_lag, self.max_lag, False)


def permutation_samples(
    x: IndicatorSeries,
    max_lag: int,
    config: PermutationConfig,
    y: IndicatorSeries | None = None,
    min_lag: int | None = None,
    n_jobs: int = 1,
) -> tuple[ExtremogramCurve, np.ndarray]:
    """Observed curve plus a ``(replicates, n_lags)`` array of shuffled curves."""
    if config.mode == "univariate":
        if y is not None:
            raise ValueError("univariate mode takes a single indicator")
        min_lag = 1 if min_lag is None else min_lag
        observed = extremogram(x, max_lag, min_lag)
    else:
        if y is None:
            raise ValueError(f"{config.mode} mode needs two indicators")
        min_lag = 0 if min_lag is None else min_lag
        observed = cross_extremogram(x, y, max_lag, min_lag)

    rep = _Replicator(x, y, config.mode, min_lag, max_lag, config.seed)
    denom = float(x.exceed_count)
    out = np.empty((config.replicates, max_lag - min_lag + 1), dtype=np.float64)

    def run(chunk):
        for r in chunk:
            counts = rep(r)
            if counts.shape[0] != out.shape[1]:
                raise ExtremogramError(f"replicate {r} produced a malformed curve")
            out[r] = counts / denom

    idx = np.arange(config.replicates)
    if n_jobs <= 1:
        run(idx)
    else:
        chunks = np.array_split(idx, n_jobs * 4)
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            list(pool.map(run, chunks))  # re-raises the first replicate failure
    return observed, out


def permutation_bands(
    x: IndicatorSeries,
    max_lag: int,
    config: PermutationConfig | None = None,
    y: IndicatorSeries | None = None,
    min_lag: int | None = None,
    n_jobs: int = 1,
    keep_samples: bool = False,
) -> PermutationBands:
    """Per-lag and flat (lag-1) permutation bands."""
    config = config or PermutationConfig()
    observed, samples = permutation_samples(x, max_lag, config, y, min_lag, n_jobs)
    return bands_from_samples(observed.lags, samples, config, keep_samples)


def bands_from_samples(lags, samples, config: PermutationConfig, keep_samples=False) -> PermutationBands:
    lags = np.asarray(lags)
    if not lags[0] <= 1 <= lags[-1]:
        raise ExtremogramError("lag range must include lag 1 for the flat band")
    ordered = np.sort(samples, axis=0)
    lower = nearest_rank(ordered, config.alpha / 2).copy()
    upper = nearest_rank(ordered, 1 - config.alpha / 2).copy()
    j1 = int(np.flatnonzero(lags == 1)[0])
    return PermutationBands(
        lags=lags.copy(),
        lower=lower,
        upper=upper,
        flat_lower=float(lower[j1]),
        flat_upper=float(upper[j1]),
        config=config,
        samples=samples if keep_samples else None,
    )


@dataclass(frozen=True)
class SignificanceReport:
    lags: np.ndarray
    values: np.ndarray
    per_lag: np.ndarray
    flat: np.ndarray
    convention: str
    two_sided: bool

    @property
    def flags(self) -> np.ndarray:
        """Verdicts under the configured band convention."""
        return self.flat if self.convention == "lag1_flat" else self.per_lag

    @property
    def flagged_lags(self) -> list[int]:
        return self.lags[self.flags].tolist()

    def first_insignificant_lag(self) -> int | None:
        """Smallest lag >= 1 that is not flagged (None if all are)."""
        for h, f in zip(self.lags.tolist(), self.flags.tolist()):
            if h >= 1 and not f:
                return h
        return None

    def to_dict(self) -> dict:
        return {
            "convention": self.convention,
            "sided": "two-sided" if self.two_sided else "one-sided upper",
            "lags": self.lags.tolist(),
            "values": self.values.tolist(),
            "flag_per_lag": self.per_lag.tolist(),
            "flag_flat": self.flat.tolist(),
            "flagged_lags": self.flagged_lags,
            "n_flagged": int(self.flags.sum()),
            "first_insignificant_lag": self.first_insignificant_lag(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def significance_report(
    curve: ExtremogramCurve, bands: PermutationBands, two_sided: bool | None = None
) -> SignificanceReport:
    """Flag lags whose estimate lies above the band (or outside it, two-sided)."""
    if curve.lags.shape != bands.lags.shape or not np.array_equal(curve.lags, bands.lags):
        raise ExtremogramError(
            f"lag ranges differ: curve {curve.min_lag}..{curve.max_lag}, "
            f"bands {int(bands.lags[0])}..{int(bands.lags[-1])}"
        )
    if two_sided is None:
        two_sided = bands.config.two_sided
    v = curve.values
    per_lag = v > bands.upper
    flat = v > bands.flat_upper
    if two_sided:
        per_lag |= v < bands.lower
        flat |= v < bands.flat_lower
    return SignificanceReport(curve.lags, v, per_lag, flat, bands.config.band_convention, two_sided)
