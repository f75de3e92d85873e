"""Electricity-market spike analytics.

Exceedance is strict everywhere ("greater than $300"), matching
``make_indicator``.
"""

from __future__ import annotations

import calendar
import csv
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from fractions import Fraction
from pathlib import Path

import numpy as np

from .extremogram import ExtremogramCurve, make_indicator
from .permutation import (
    PermutationBands,
    PermutationConfig,
    SignificanceReport,
    bands_from_samples,
    permutation_samples,
    significance_report,
)
from .series import PriceSeries, SeriesError, TailSet, parse_duration, parse_timestamp, slice_window

__all__ = [
    "CapSettlement",
    "DescriptiveStats",
    "EventAnalysis",
    "EventComparison",
    "MarketError",
    "MarketEvent",
    "SpikeRunStats",
    "cap_settlement",
    "count_events",
    "descriptive_stats",
    "event_window_compare",
    "load_events",
    "quarter_bounds",
    "shift_calendar",
    "spike_run_stats",
]

DEFAULT_THRESHOLDS = (150.0, 300.0, 5000.0)


class MarketError(ValueError):
    pass


def _tailset(threshold) -> TailSet:
    return threshold if isinstance(threshold, TailSet) else TailSet.upper(float(threshold))


# --------------------------------------------------------------------------
# spikes per interval


@dataclass(frozen=True)
class SpikeRunStats:
    spike_count: int
    agg_intervals: int
    agg_factor: int
    threshold: float

    @property
    def spikes_per_interval(self) -> float:
        if self.agg_intervals == 0:
            raise MarketError("no spiky intervals; spikes per interval undefined")
        return self.spike_count / self.agg_intervals

    def to_dict(self) -> dict:
        return {
            "spike_count": self.spike_count,
            "agg_intervals": self.agg_intervals,
            "spikes_per_interval": self.spikes_per_interval if self.agg_intervals else None,
            "agg_factor": self.agg_factor,
            "threshold": self.threshold,
        }


def _clock_offset(t: datetime, step: timedelta) -> timedelta:
    midnight = t.replace(hour=0, minute=0, second=0, microsecond=0)
    return (t - midnight) % step


def spike_counts(series: PriceSeries, threshold, agg_step="30min") -> SpikeRunStats:
    """Like ``spike_run_stats`` but returns ``hh = 0`` instead of raising."""
    agg_step = parse_duration(agg_step)
    factor, rem = divmod(agg_step, series.step)
    if rem or factor < 1:
        raise MarketError(f"aggregation step {agg_step} is not a multiple of the series step {series.step}")
    if _clock_offset(series.interval_begin(0), agg_step):
        raise MarketError(f"series does not start on a {agg_step} clock boundary")
    if len(series) % factor:
        raise MarketError(f"series length {len(series)} is not a whole number of {agg_step} intervals")
    ind = make_indicator(series, _tailset(threshold))
    per_interval = ind.bits.reshape(-1, factor).any(axis=1)
    return SpikeRunStats(ind.exceed_count, int(per_interval.sum()), int(factor), ind.threshold)


def spike_run_stats(series: PriceSeries, threshold, agg_step="30min") -> SpikeRunStats:
    """Fine-step spike count, number of clock-aligned intervals holding a spike, and their ratio."""
    stats = spike_counts(series, threshold, agg_step)
    if stats.agg_intervals == 0:
        raise MarketError(f"no prices beyond {stats.threshold} in series {series.id!r}")
    return stats


# --------------------------------------------------------------------------
# cap futures


@dataclass(frozen=True)
class CapSettlement:
    cap_level: float
    C: float
    D: int
    E: int
    exact: Fraction = field(repr=False)

    @property
    def settlement(self) -> float:
        return float(self.exact)

    def to_dict(self) -> dict:
        return {
            "cap_level": self.cap_level,
            "C": self.C,
            "D": self.D,
            "E": self.E,
            "settlement": self.settlement,
            "settlement_exact": f"{self.exact.numerator}/{self.exact.denominator}",
        }


def quarter_bounds(quarter, tzinfo=None) -> tuple[datetime, datetime]:
    """``"2016Q3"`` or ``(2016, 3)`` -> [first day, first day of next quarter)."""
    if isinstance(quarter, str):
        try:
            year_s, q_s = quarter.upper().split("Q")
            year, q = int(year_s), int(q_s)
        except ValueError:
            raise MarketError(f"cannot parse quarter {quarter!r}; use e.g. '2016Q3'") from None
    else:
        year, q = quarter
    if q not in (1, 2, 3, 4):
        raise MarketError(f"quarter must be 1..4, got {q}")
    start = datetime(year, 3 * q - 2, 1, tzinfo=tzinfo)
    end = datetime(year + 1, 1, 1, tzinfo=tzinfo) if q == 4 else datetime(year, 3 * q + 1, 1, tzinfo=tzinfo)
    return start, end


def cap_settlement(series: PriceSeries, quarter, cap_level: float = 300.0) -> CapSettlement:
    """Quarterly cap payout ``(C - cap * D) / E``.

    ``E`` counts every half-hour of the quarter, including missing ones,
    which add nothing to ``C`` or ``D``.
    """
    if series.step != timedelta(minutes=30):
        raise MarketError(f"cap settlement needs half-hourly prices, got step {series.step}")
    start, end = quarter_bounds(quarter, series.start.tzinfo)
    try:
        window = slice_window(series, start, end)
    except SeriesError as exc:
        raise MarketError(f"quarter {start:%Y-%m-%d}..{end:%Y-%m-%d} not covered: {exc}") from None
    E = (end - start) // series.step
    if len(window) != E:
        raise MarketError(f"quarter not fully covered ({len(window)} of {E} intervals)")
    v = window.valid_values
    hits = v[v > cap_level]
    C_exact = sum((Fraction(x) for x in hits.tolist()), Fraction(0))
    D = int(hits.size)
    exact = (C_exact - Fraction(cap_level) * D) / E
    return CapSettlement(float(cap_level), math.fsum(hits.tolist()), D, int(E), exact)


# --------------------------------------------------------------------------
# descriptive statistics


@dataclass(frozen=True)
class DescriptiveStats:
    n: int
    n_missing: int
    mean: float
    median: float
    max: float
    min: float
    std: float
    skew: float | None
    kurtosis: float | None
    excess_kurtosis: float | None
    spikes: dict

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "spikes"}
        d["spikes"] = {f"{k:g}": v for k, v in self.spikes.items()}
        d["degenerate_moments"] = self.skew is None
        return d


def descriptive_stats(series: PriceSeries, thresholds=DEFAULT_THRESHOLDS) -> DescriptiveStats:
    """Moments over non-missing values plus spike counts above each threshold.

    Median is nearest-rank; std uses ``ddof=1``; skewness and kurtosis are
    the moment ratios ``m3 / m2**1.5`` and ``m4 / m2**2`` (excess = raw - 3).
    Spike percentages are relative to the non-missing count.
    """
    x = series.valid_values
    if x.size < 2:
        raise MarketError("descriptive statistics need at least two observations")
    mean = float(x.mean())
    d = x - mean
    m2 = float(np.mean(d**2))
    constant = bool(x.max() == x.min())
    if not constant:
        skew = float(np.mean(d**3) / m2**1.5)
        kurt = float(np.mean(d**4) / m2**2)
        excess = kurt - 3.0
    else:
        skew = kurt = excess = None
    rank = math.ceil(0.5 * x.size)
    median = float(np.partition(x, rank - 1)[rank - 1])
    spikes = {}
    for thr in thresholds:
        count = make_indicator(series, TailSet.upper(float(thr))).exceed_count
        spikes[float(thr)] = {"count": count, "percentage": 100.0 * count / x.size}
    return DescriptiveStats(
        n=len(series),
        n_missing=len(series) - x.size,
        mean=mean,
        median=median,
        max=float(x.max()),
        min=float(x.min()),
        std=0.0 if constant else float(x.std(ddof=1)),
        skew=skew,
        kurtosis=kurt,
        excess_kurtosis=excess,
        spikes=spikes,
    )


def format_stats_table(stats: dict[str, DescriptiveStats]) -> str:
    """Plain-text table, one column per series."""
    names = list(stats)
    rows = [
        ("Mean", lambda s: f"{s.mean:.2f}"),
        ("Med.", lambda s: f"{s.median:.2f}"),
        ("Max.", lambda s: f"{s.max:.2f}"),
        ("Min.", lambda s: f"{s.min:.2f}"),
        ("Std. dev.", lambda s: f"{s.std:.2f}"),
        ("Skew.", lambda s: "n/a" if s.skew is None else f"{s.skew:.2f}"),
        ("Kurt.", lambda s: "n/a" if s.kurtosis is None else f"{s.kurtosis:.2f}"),
        ("Excess kurt.", lambda s: "n/a" if s.excess_kurtosis is None else f"{s.excess_kurtosis:.2f}"),
    ]
    thresholds = list(next(iter(stats.values())).spikes)
    for thr in thresholds:
        rows.append((f"Spike obs. (>{thr:g})", lambda s, t=thr: str(s.spikes[t]["count"])))
        rows.append(("Percentage", lambda s, t=thr: f"{s.spikes[t]['percentage']:.2f}%"))
    width = max(len(r[0]) for r in rows) + 2
    lines = [" " * width + "".join(f"{n:>12}" for n in names)]
    for label, fmt in rows:
        lines.append(f"{label:<{width}}" + "".join(f"{fmt(stats[n]):>12}" for n in names))
    return "\n".join(lines)


# --------------------------------------------------------------------------
# market events


@dataclass(frozen=True)
class MarketEvent:
    timestamp: datetime
    region: str
    category: str


def load_events(path: str | Path) -> list[MarketEvent]:
    """Read a ``timestamp,region,category`` CSV of market notices."""
    path = Path(path)
    events = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"timestamp", "region", "category"} - set(reader.fieldnames or [])
        if missing:
            raise MarketError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            try:
                ts = parse_timestamp(row["timestamp"])
            except ValueError:
                raise MarketError(f"{path}:{reader.line_num}: bad timestamp {row['timestamp']!r}") from None
            events.append(MarketEvent(ts, row["region"].strip(), row["category"].strip()))
    return events


def count_events(events, region: str, start: datetime, end: datetime, categories=None) -> int:
    return sum(
        1
        for e in events
        if e.region == region
        and start <= e.timestamp < end
        and (categories is None or e.category in categories)
    )


# --------------------------------------------------------------------------
# event windows


def shift_calendar(t: datetime, spec) -> datetime:
    """Add a duration; ``"2y"`` / ``"6mo"`` shift by calendar months, keeping the day."""
    if isinstance(spec, str):
        s = spec.strip().lower()
        sign = -1 if s.startswith("-") else 1
        body = s.lstrip("+-")
        months = None
        if body.endswith("mo") and body[:-2].isdigit():
            months = sign * int(body[:-2])
        elif body.endswith("y") and body[:-1].isdigit():
            months = sign * 12 * int(body[:-1])
        if months is not None:
            total = t.year * 12 + (t.month - 1) + months
            year, month = divmod(total, 12)
            day = min(t.day, calendar.monthrange(year, month + 1)[1])
            return t.replace(year=year, month=month + 1, day=day)
        if s.startswith("-"):
            return t - parse_duration(body)
    return t + parse_duration(spec)


def _negate(spec):
    if isinstance(spec, str):
        return "-" + spec.strip() if not spec.strip().startswith("-") else spec.strip()[1:]
    return -parse_duration(spec)


@dataclass(frozen=True)
class EventAnalysis:
    tailset: TailSet
    max_lag: int = 50
    min_lag: int = 1
    permutation: PermutationConfig = field(default_factory=PermutationConfig)
    agg_step: timedelta | str = "30min"
    n_jobs: int = 1


@dataclass
class WindowResult:
    label: str
    start: datetime
    end: datetime
    series: PriceSeries
    curve: ExtremogramCurve | None = None
    bands: PermutationBands | None = None
    report: SignificanceReport | None = None
    spikes: SpikeRunStats | None = None
    events: int | None = None
    unavailable: str | None = None

    @property
    def rho1(self) -> float | None:
        if self.curve is None or not self.curve.min_lag <= 1 <= self.curve.max_lag:
            return None
        return self.curve.at(1)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "start": self.start.isoformat(),
            "end": self.end.isoformat(),
            "n": len(self.series),
            "unavailable": self.unavailable,
            "rho1": self.rho1,
            "first_insignificant_lag": None if self.report is None else self.report.first_insignificant_lag(),
            "all_lags_flagged": None if self.report is None else self.report.first_insignificant_lag() is None,
            "spike_stats": None if self.spikes is None else self.spikes.to_dict(),
            "events_count": self.events,
            "curve": None if self.curve is None else self.curve.to_dict(),
            "bands": None if self.bands is None else self.bands.to_dict(),
            "significance": None if self.report is None else self.report.to_dict(),
        }


@dataclass
class EventComparison:
    event_time: datetime
    pre: WindowResult
    post: WindowResult
    rho1_z: float | None
    rho1_p_value: float | None
    alpha: float

    @property
    def verdict(self) -> str:
        if self.rho1_p_value is None:
            return "unavailable"
        return "significant difference" if self.rho1_p_value < self.alpha else "no significant difference"

    @property
    def lag_shift(self) -> int | None:
        """Post minus pre first-insignificant lag."""
        if self.pre.report is None or self.post.report is None:
            return None
        return _run_end(self.post.report) - _run_end(self.pre.report)

    def to_dict(self) -> dict:
        return {
            "event_time": self.event_time.isoformat(),
            "pre": self.pre.to_dict(),
            "post": self.post.to_dict(),
            "diagnostics": {
                "rho1_pre": self.pre.rho1,
                "rho1_post": self.post.rho1,
                "rho1_z": self.rho1_z,
                "rho1_p_value": self.rho1_p_value,
                "first_insignificant_lag_shift": self.lag_shift,
                "verdict": self.verdict,
            },
        }


def _run_end(report) -> int:
    # every lag flagged: the run is at least one past the last lag examined
    h = report.first_insignificant_lag()
    return int(report.lags[-1]) + 1 if h is None else h


def _analyse_window(label, series, start, end, analysis: EventAnalysis, events, region) -> WindowResult:
    window = slice_window(series, start, end)
    res = WindowResult(label, start, end, window)
    if events is not None:
        res.events = count_events(events, region or series.id, start, end)
    try:
        res.spikes = spike_counts(window, analysis.tailset, analysis.agg_step)
    except MarketError as exc:
        res.unavailable = str(exc)
    ind = make_indicator(window, analysis.tailset)
    if ind.exceed_count == 0:
        res.unavailable = f"no exceedances of {ind.threshold} in the {label} window"
        res.spikes = None
        return res
    curve, samples = permutation_samples(
        ind, analysis.max_lag, analysis.permutation, min_lag=analysis.min_lag, n_jobs=analysis.n_jobs
    )
    res.curve = curve
    res.bands = bands_from_samples(curve.lags, samples, analysis.permutation)
    res.report = significance_report(curve, res.bands)
    return res


def _two_proportion(a: ExtremogramCurve, b: ExtremogramCurve) -> tuple[float, float] | tuple[None, None]:
    x1, n1 = int(a.joint_counts[1 - a.min_lag]), a.meta["x"]["exceed_count"]
    x2, n2 = int(b.joint_counts[1 - b.min_lag]), b.meta["x"]["exceed_count"]
    pooled = (x1 + x2) / (n1 + n2)
    se = math.sqrt(pooled * (1 - pooled) * (1 / n1 + 1 / n2))
    if se == 0:
        return None, None
    z = (x2 / n2 - x1 / n1) / se
    return z, math.erfc(abs(z) / math.sqrt(2))


def event_window_compare(
    series: PriceSeries,
    event_time,
    window_len,
    analysis: EventAnalysis,
    events: list[MarketEvent] | None = None,
    region: str | None = None,
) -> EventComparison:
    """Run the same analysis on ``[event - len, event)`` and ``[event, event + len)``.

    ``window_len`` may be a timedelta, a duration string, or a calendar span
    such as ``"2y"``. A window with no spikes is reported as unavailable
    rather than raising.
    """
    if isinstance(event_time, str):
        event_time = parse_timestamp(event_time)
    pre_start = shift_calendar(event_time, _negate(window_len))
    post_end = shift_calendar(event_time, window_len)
    begin0 = series.interval_begin(0)
    stop = begin0 + len(series) * series.step
    if pre_start < begin0 or post_end > stop:
        raise MarketError(
            f"event windows [{pre_start}, {post_end}) do not fit inside the series range [{begin0}, {stop})"
        )
    pre = _analyse_window("pre", series, pre_start, event_time, analysis, events, region)
    post = _analyse_window("post", series, event_time, post_end, analysis, events, region)
    z = p = None
    if pre.curve is not None and post.curve is not None and pre.rho1 is not None:
        z, p = _two_proportion(pre.curve, post.curve)
    return EventComparison(event_time, pre, post, z, p, analysis.permutation.alpha)
