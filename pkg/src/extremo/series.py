"""Regularly-sampled price series: ingestion, export, quantiles and slicing.

Timestamps only matter at the edges (ingestion, export, calendar slicing).
Internally everything is a grid index ``i`` whose label is
``start + i * step``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "CsvSchema",
    "PriceSeries",
    "SeriesError",
    "SeriesPanel",
    "TailSet",
    "align_panel",
    "empirical_quantile",
    "export_csv",
    "ingest_csv",
    "parse_duration",
    "parse_timestamp",
    "slice_window",
]

LABELS = ("ending", "beginning")


class SeriesError(ValueError):
    """Raised for invalid series data or out-of-range requests."""


@dataclass(frozen=True)
class PriceSeries:
    """Prices on a regular grid.

    ``values[i]`` is labelled ``start + i * step``. With ``label="ending"``
    (the default, as for settlement-interval data) that label is the end of
    the interval the price covers. Missing entries hold NaN and are flagged
    in ``missing``.
    """

    id: str
    start: datetime
    step: timedelta
    values: np.ndarray
    missing: np.ndarray = None
    label: str = "ending"

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise SeriesError(f"series {self.id!r}: values must be a non-empty 1-D sequence")
        if self.missing is None:
            missing = ~np.isfinite(values)
        else:
            missing = np.array(self.missing, dtype=bool)
            if missing.shape != values.shape:
                raise SeriesError(
                    f"series {self.id!r}: missing mask length {missing.size} != {values.size}"
                )
            if not np.all(np.isfinite(values[~missing])):
                raise SeriesError(f"series {self.id!r}: NaN/Inf among non-missing values")
        if self.step <= timedelta(0):
            raise SeriesError(f"series {self.id!r}: step must be positive")
        if self.label not in LABELS:
            raise SeriesError(f"label must be one of {LABELS}, got {self.label!r}")
        values = values.copy()
        values[missing] = np.nan
        values.flags.writeable = False
        missing.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "missing", missing)

    def __len__(self) -> int:
        return self.values.size

    @property
    def n_valid(self) -> int:
        return int(self.values.size - np.count_nonzero(self.missing))

    @property
    def valid_values(self) -> np.ndarray:
        return self.values[~self.missing]

    @property
    def end(self) -> datetime:
        """Label of the last observation."""
        return self.start + (len(self) - 1) * self.step

    def timestamp(self, i: int) -> datetime:
        return self.start + i * self.step

    def timestamps(self) -> list[datetime]:
        return [self.start + i * self.step for i in range(len(self))]

    def interval_begin(self, i: int = 0) -> datetime:
        """Beginning of the interval covered by observation ``i``."""
        t = self.start + i * self.step
        return t - self.step if self.label == "ending" else t

    def with_values(self, values, missing=None, id: str | None = None) -> "PriceSeries":
        return PriceSeries(
            id=self.id if id is None else id,
            start=self.start,
            step=self.step,
            values=values,
            missing=missing,
            label=self.label,
        )


@dataclass(frozen=True)
class TailSet:
    """What counts as extreme: an absolute level or a quantile, in either tail.

    Exceedance is strict (``value > level`` for upper tails, ``value < level``
    for lower tails) unless ``strict=False``.
    """

    kind: str
    level: float
    strict: bool = True

    KINDS = ("absolute_upper", "absolute_lower", "quantile_upper", "quantile_lower")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown tail set kind {self.kind!r}; expected one of {self.KINDS}")
        level = float(self.level)
        if math.isnan(level):
            raise ValueError("tail set level must not be NaN")
        if self.is_quantile and not 0.0 < level < 1.0:
            raise ValueError(f"quantile tail sets require 0 < q < 1, got {level}")
        object.__setattr__(self, "level", level)

    @classmethod
    def upper(cls, u: float, strict: bool = True) -> "TailSet":
        return cls("absolute_upper", u, strict)

    @classmethod
    def lower(cls, l: float, strict: bool = True) -> "TailSet":
        return cls("absolute_lower", l, strict)

    @classmethod
    def quantile_upper(cls, q: float, strict: bool = True) -> "TailSet":
        return cls("quantile_upper", q, strict)

    @classmethod
    def quantile_lower(cls, q: float, strict: bool = True) -> "TailSet":
        return cls("quantile_lower", q, strict)

    @property
    def is_quantile(self) -> bool:
        return self.kind.startswith("quantile")

    @property
    def is_upper(self) -> bool:
        return self.kind.endswith("upper")

    def resolve(self, series: "PriceSeries | np.ndarray") -> float:
        """Concrete price threshold for ``series``."""
        if not self.is_quantile:
            return self.level
        return empirical_quantile(series, self.level)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "level": self.level, "strict": self.strict}

    @classmethod
    def from_dict(cls, d: dict) -> "TailSet":
        return cls(d["kind"], d["level"], d.get("strict", True))


@dataclass(frozen=True)
class SeriesPanel:
    """Series aligned index-for-index; ``missing`` is the union of member gaps."""

    series: tuple
    missing: np.ndarray = field(default=None)

    def __post_init__(self):
        members = tuple(self.series)
        if not members:
            raise SeriesError("panel needs at least one series")
        first = members[0]
        for s in members[1:]:
            if s.step != first.step or s.start != first.start or len(s) != len(first):
                raise SeriesError(f"series {s.id!r} is not aligned with {first.id!r}")
        missing = np.zeros(len(first), dtype=bool)
        for s in members:
            missing |= s.missing
        missing.flags.writeable = False
        object.__setattr__(self, "series", members)
        object.__setattr__(self, "missing", missing)

    def __len__(self) -> int:
        return len(self.series[0])

    def __getitem__(self, key: str | int) -> PriceSeries:
        if isinstance(key, int):
            return self.series[key]
        for s in self.series:
            if s.id == key:
                return s
        raise KeyError(key)

    @property
    def ids(self) -> list[str]:
        return [s.id for s in self.series]


# --------------------------------------------------------------------------
# parsing helpers

_UNITS = {"s": 1, "sec": 1, "min": 60, "m": 60, "h": 3600, "hr": 3600, "hour": 3600, "d": 86400, "day": 86400}


def parse_duration(text: str | int | float | timedelta) -> timedelta:
    """Parse ``"30min"``, ``"5m"``, ``"1h"``, ``"2y"`` style durations.

    A bare number is seconds. ``y`` means 365 days, so calendar-exact windows
    should be given as timestamps instead.
    """
    if isinstance(text, timedelta):
        return text
    if isinstance(text, (int, float)):
        return timedelta(seconds=text)
    s = text.strip().lower()
    num = s.rstrip("abcdefghijklmnopqrstuvwxyz")
    unit = s[len(num):].strip() or "s"
    if unit in ("y", "yr", "year", "years"):
        return timedelta(days=365 * float(num))
    unit = unit.rstrip("s") if unit not in _UNITS else unit
    if unit not in _UNITS or not num:
        raise ValueError(f"cannot parse duration {text!r}")
    return timedelta(seconds=float(num) * _UNITS[unit])


def parse_timestamp(text: str, fmt: str = "auto") -> datetime:
    """ISO-8601 or epoch seconds (``fmt`` in ``auto``/``iso``/``epoch``).

    ``YYYY/MM/DD hh:mm:ss`` (the layout of AEMO price files) is read as ISO.
    """
    s = text.strip()
    if len(s) >= 10 and s[4] == "/" and s[7] == "/":
        s = s[:10].replace("/", "-") + s[10:]
    if fmt not in ("auto", "iso", "epoch"):
        raise ValueError(f"unknown timestamp format {fmt!r}")
    if fmt == "epoch" or (fmt == "auto" and _looks_numeric(s)):
        return datetime.fromtimestamp(float(s), tz=timezone.utc)
    if s.endswith("Z"):
        s = s[:-1] + "+00:00"
    return datetime.fromisoformat(s)


def _looks_numeric(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def _as_datetime(t) -> datetime:
    if isinstance(t, datetime):
        return t
    return parse_timestamp(str(t))


@dataclass(frozen=True)
class CsvSchema:
    timestamp: str = "timestamp"
    value: str = "value"


def ingest_csv(
    path: str | Path,
    schema: CsvSchema | None = None,
    step: timedelta | str = "30min",
    *,
    series_id: str | None = None,
    delimiter: str = ",",
    timestamp_format: str = "auto",
    label: str = "ending",
    offset: timedelta | str = timedelta(0),
) -> PriceSeries:
    """Read a price CSV onto a regular grid.

    Rows may arrive in any order. Grid points with no row, or with an empty
    value cell, become missing. ``offset`` is added to every file timestamp,
    e.g. ``-step`` to turn interval-ending labels into interval-beginning ones.
    """
    schema = schema or CsvSchema()
    step = parse_duration(step)
    offset = parse_duration(offset)
    path = Path(path)
    if step <= timedelta(0):
        raise SeriesError("step must be positive")

    rows: list[tuple[datetime, float | None, int]] = []
    with path.open(newline="", encoding="utf-8") as fh:
        # '#' lines are comments (outputs embed their config that way)
        lines = ("\n" if line.startswith("#") else line for line in fh)
        reader = csv.reader(lines, delimiter=delimiter)
        header = next((r for r in reader if r), None)
        if header is None:
            raise SeriesError(f"{path}: empty file")
        try:
            ts_col = header.index(schema.timestamp)
            val_col = header.index(schema.value)
        except ValueError:
            raise SeriesError(
                f"{path}: header must contain {schema.timestamp!r} and {schema.value!r}, got {header}"
            ) from None
        for row in reader:
            line = reader.line_num
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise SeriesError(f"{path}:{line}: expected {len(header)} fields, got {len(row)}")
            try:
                ts = parse_timestamp(row[ts_col], timestamp_format) + offset
            except ValueError as exc:
                raise SeriesError(f"{path}:{line}: bad timestamp {row[ts_col]!r} ({exc})") from None
            cell = row[val_col].strip()
            if cell == "":
                value = None
            else:
                try:
                    value = float(cell)
                except ValueError:
                    raise SeriesError(f"{path}:{line}: bad value {cell!r}") from None
                if not math.isfinite(value):
                    raise SeriesError(f"{path}:{line}: non-finite value {cell!r}")
            rows.append((ts, value, line))
    if not rows:
        raise SeriesError(f"{path}: no data rows")

    rows.sort(key=lambda r: r[0])
    start = rows[0][0]
    n = (rows[-1][0] - start) // step + 1
    values = np.full(n, np.nan)
    missing = np.ones(n, dtype=bool)
    prev = None
    for ts, value, line in rows:
        if ts == prev:
            raise SeriesError(f"{path}:{line}: duplicate timestamp {ts.isoformat()}")
        prev = ts
        k, rem = divmod(ts - start, step)
        if rem:
            raise SeriesError(f"{path}:{line}: timestamp {ts.isoformat()} is not on the {step} grid")
        if value is not None:
            values[k] = value
            missing[k] = False
    return PriceSeries(
        id=series_id or path.stem,
        start=start,
        step=step,
        values=values,
        missing=missing,
        label=label,
    )


def export_csv(
    series: PriceSeries,
    path: str | Path,
    schema: CsvSchema | None = None,
    *,
    delimiter: str = ",",
    timestamp_format: str = "iso",
    header_comment: str | None = None,
) -> Path:
    """Write every grid point; missing entries get an empty value cell."""
    schema = schema or CsvSchema()
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow([schema.timestamp, schema.value])
        for i, (v, m) in enumerate(zip(series.values.tolist(), series.missing.tolist())):
            t = series.timestamp(i)
            stamp = repr(t.timestamp()) if timestamp_format == "epoch" else t.isoformat()
            w.writerow([stamp, "" if m else repr(v)])
    return path


# --------------------------------------------------------------------------
# operations


def empirical_quantile(series: PriceSeries | np.ndarray | Sequence[float], q: float) -> float:
    """Nearest-rank quantile: the ``ceil(q * n)``-th smallest non-missing value."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"quantile level must lie in (0, 1), got {q}")
    if isinstance(series, PriceSeries):
        x = series.valid_values
    else:
        x = np.asarray(series, dtype=np.float64)
        x = x[np.isfinite(x)]
    if x.size == 0:
        raise SeriesError("cannot take a quantile of an all-missing series")
    rank = max(1, math.ceil(q * x.size))
    return float(np.partition(x, rank - 1)[rank - 1])


def slice_window(series: PriceSeries, start, end) -> PriceSeries:
    """Sub-series of intervals lying inside ``[start, end)``.

    Bounds are compared against interval beginnings, so a half-hourly
    interval-ending series sliced on ``2014-07-01`` starts with the price
    labelled 00:30. Off-grid bounds snap inwards.
    """
    start, end = _as_datetime(start), _as_datetime(end)
    if end <= start:
        raise SeriesError(f"window end {end} is not after start {start}")
    if end - start < series.step:
        raise SeriesError("window is shorter than one step")
    begin0 = series.interval_begin(0)
    stop = begin0 + len(series) * series.step
    if start < begin0 or end > stop:
        raise SeriesError(
            f"window [{start}, {end}) is outside series {series.id!r} range [{begin0}, {stop})"
        )
    lo = -((begin0 - start) // series.step)  # ceil((start - begin0) / step)
    hi = (end - begin0) // series.step
    if hi <= lo:
        raise SeriesError("window contains no complete interval")
    return PriceSeries(
        id=series.id,
        start=series.timestamp(lo),
        step=series.step,
        values=series.values[lo:hi],
        missing=series.missing[lo:hi],
        label=series.label,
    )


def align_panel(series_list: Iterable[PriceSeries]) -> SeriesPanel:
    """Trim series to their common index range."""
    members = list(series_list)
    if not members:
        raise SeriesError("no series to align")
    step = members[0].step
    label = members[0].label
    for s in members:
        if s.step != step:
            raise SeriesError(f"series {s.id!r} has step {s.step}, expected {step}")
        if s.label != label:
            raise SeriesError(f"series {s.id!r} uses {s.label!r} labels, expected {label!r}")
        if (s.start - members[0].start) % step:
            raise SeriesError(f"series {s.id!r} is not on the same grid")
    start = max(s.start for s in members)
    end = min(s.end for s in members)
    if end < start:
        raise SeriesError("series do not overlap")
    n = (end - start) // step + 1
    trimmed = []
    for s in members:
        lo = (start - s.start) // step
        trimmed.append(
            PriceSeries(
                id=s.id,
                start=start,
                step=step,
                values=s.values[lo : lo + n],
                missing=s.missing[lo : lo + n],
                label=label,
            )
        )
    return SeriesPanel(tuple(trimmed))
