"""Extremograms, permutation bands and spike analytics for price series."""

__version__ = "0.1.0"

from .estimators import CrossExtremogram, ExceedanceIndicator, Extremogram
from .extremogram import (
    ExtremogramCurve,
    ExtremogramError,
    IndicatorSeries,
    cross_extremogram,
    extremogram,
    extremogram_bruteforce,
    make_indicator,
)
from .market import (
    CapSettlement,
    DescriptiveStats,
    EventAnalysis,
    MarketError,
    SpikeRunStats,
    cap_settlement,
    descriptive_stats,
    event_window_compare,
    spike_run_stats,
)
from .permutation import (
    PermutationBands,
    PermutationConfig,
    bands_from_samples,
    permutation_bands,
    permutation_samples,
    permute_series,
    significance_report,
)
from .series import (
    CsvSchema,
    PriceSeries,
    SeriesError,
    SeriesPanel,
    TailSet,
    align_panel,
    empirical_quantile,
    export_csv,
    ingest_csv,
    slice_window,
)
from .synthetic import ProcessSpec, generate, oracle_extremogram

__all__ = [
    "CapSettlement",
    "CrossExtremogram",
    "CsvSchema",
    "DescriptiveStats",
    "EventAnalysis",
    "ExceedanceIndicator",
    "Extremogram",
    "ExtremogramCurve",
    "ExtremogramError",
    "IndicatorSeries",
    "MarketError",
    "PermutationBands",
    "PermutationConfig",
    "PriceSeries",
    "ProcessSpec",
    "SeriesError",
    "SeriesPanel",
    "SpikeRunStats",
    "TailSet",
    "align_panel",
    "bands_from_samples",
    "cap_settlement",
    "cross_extremogram",
    "descriptive_stats",
    "empirical_quantile",
    "event_window_compare",
    "export_csv",
    "extremogram",
    "extremogram_bruteforce",
    "generate",
    "ingest_csv",
    "make_indicator",
    "oracle_extremogram",
    "permutation_bands",
    "permutation_samples",
    "permute_series",
    "significance_report",
    "slice_window",
    "spike_run_stats",
]
