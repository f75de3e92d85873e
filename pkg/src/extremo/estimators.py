"""scikit-learn style wrappers around the functional API.

These accept plain arrays (NaN marks a missing observation) or
``PriceSeries``/``SeriesPanel`` objects, so they slot into pipelines,
``clone`` and ``get_params``/``set_params`` like any other estimator.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .extremogram import IndicatorSeries, cross_extremogram, extremogram, make_indicator
from .permutation import PermutationConfig, bands_from_samples, permutation_samples, significance_report
from .series import PriceSeries, SeriesPanel, TailSet

__all__ = ["CrossExtremogram", "ExceedanceIndicator", "Extremogram"]


def _tailset(threshold, quantile, tail, strict) -> TailSet:
    if (threshold is None) == (quantile is None):
        raise ValueError("set exactly one of threshold or quantile")
    if tail not in ("upper", "lower"):
        raise ValueError(f"tail must be 'upper' or 'lower', got {tail!r}")
    if threshold is not None:
        return TailSet(f"absolute_{tail}", threshold, strict)
    return TailSet(f"quantile_{tail}", quantile, strict)


def _pick(param, j):
    if param is None or np.isscalar(param):
        return param
    return param[j]


def _as_columns(X) -> list[PriceSeries | np.ndarray]:
    if isinstance(X, PriceSeries):
        return [X]
    if isinstance(X, SeriesPanel):
        return list(X.series)
    if isinstance(X, (tuple, list)) and X and all(isinstance(s, PriceSeries) for s in X):
        return list(X)
    arr = check_array(X, ensure_2d=False, ensure_all_finite="allow-nan", dtype=np.float64)
    if arr.ndim == 1:
        return [arr]
    return [arr[:, j] for j in range(arr.shape[1])]


class ExceedanceIndicator(TransformerMixin, BaseEstimator):
    """Turn prices into exceedance flags.

    ``fit`` resolves the threshold (a fixed price, or the nearest-rank
    ``quantile`` of each column); ``transform`` flags values strictly beyond
    it. Missing values (NaN) are never flagged.
    """

    def __init__(self, threshold=None, quantile=None, tail="upper", strict=True):
        self.threshold = threshold
        self.quantile = quantile
        self.tail = tail
        self.strict = strict

    def fit(self, X, y=None):
        cols = _as_columns(X)
        self.tailsets_ = [
            _tailset(_pick(self.threshold, j), _pick(self.quantile, j), self.tail, self.strict)
            for j in range(len(cols))
        ]
        self.thresholds_ = np.array([ts.resolve(c) for ts, c in zip(self.tailsets_, cols)])
        self.n_features_in_ = len(cols)
        return self

    def indicators(self, X) -> list[IndicatorSeries]:
        check_is_fitted(self, "thresholds_")
        cols = _as_columns(X)
        if len(cols) != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {len(cols)}")
        out = []
        for j, (col, thr) in enumerate(zip(cols, self.thresholds_)):
            kind = "absolute_upper" if self.tail == "upper" else "absolute_lower"
            ind = make_indicator(col, TailSet(kind, thr, self.strict))
            # keep the requested tail set so quantile runs stay traceable
            out.append(IndicatorSeries(ind.source_id if isinstance(col, PriceSeries) else f"x{j}",
                                       ind.bits, self.tailsets_[j], float(thr), ind.n_missing))
        return out

    def transform(self, X):
        inds = self.indicators(X)
        bits = np.column_stack([i.bits for i in inds])
        return bits[:, 0] if bits.shape[1] == 1 and np.ndim(X) == 1 else bits


class Extremogram(BaseEstimator):
    """Univariate extremogram with optional permutation bands.

    After ``fit``: ``curve_`` (an ``ExtremogramCurve``), ``lags_``, ``rho_``,
    and when ``n_permutations > 0`` also ``bands_`` and ``report_``.
    """

    def __init__(
        self,
        max_lag=50,
        min_lag=1,
        threshold=None,
        quantile=0.99,
        tail="upper",
        strict=True,
        n_permutations=1000,
        alpha=0.01,
        random_state=0,
        band_convention="lag1_flat",
        two_sided=False,
        n_jobs=1,
    ):
        self.max_lag = max_lag
        self.min_lag = min_lag
        self.threshold = threshold
        self.quantile = quantile
        self.tail = tail
        self.strict = strict
        self.n_permutations = n_permutations
        self.alpha = alpha
        self.random_state = random_state
        self.band_convention = band_convention
        self.two_sided = two_sided
        self.n_jobs = n_jobs

    def _indicator(self):
        quantile = None if self.threshold is not None else self.quantile
        return ExceedanceIndicator(self.threshold, quantile, self.tail, self.strict)

    def _config(self, mode) -> PermutationConfig:
        return PermutationConfig(
            replicates=self.n_permutations,
            alpha=self.alpha,
            seed=int(self.random_state),
            mode=mode,
            band_convention=self.band_convention,
            two_sided=self.two_sided,
        )

    def _finish(self, curve, samples, config):
        self.curve_ = curve
        self.lags_ = curve.lags
        self.rho_ = curve.values
        if samples is not None:
            self.bands_ = bands_from_samples(curve.lags, samples, config)
            self.report_ = significance_report(curve, self.bands_)
        else:
            self.bands_ = self.report_ = None
        return self

    def fit(self, X, y=None):
        cols = _as_columns(X)
        if len(cols) != 1:
            raise ValueError(f"Extremogram expects a single series, got {len(cols)} columns")
        ind = self._indicator().fit(cols[0]).indicators(cols[0])[0]
        self.indicator_ = ind
        if self.n_permutations:
            config = self._config("univariate")
            curve, samples = permutation_samples(ind, self.max_lag, config, min_lag=self.min_lag, n_jobs=self.n_jobs)
            return self._finish(curve, samples, config)
        return self._finish(extremogram(ind, self.max_lag, self.min_lag), None, None)

    @property
    def significant_lags_(self) -> list[int]:
        check_is_fitted(self, "curve_")
        return [] if self.report_ is None else self.report_.flagged_lags


class CrossExtremogram(Extremogram):
    """Cross-extremogram from column 0 (conditioning) to column 1.

    ``threshold`` / ``quantile`` may be scalars or ``(x, y)`` pairs since the
    two series need not share a threshold.
    """

    def __init__(
        self,
        max_lag=50,
        min_lag=0,
        threshold=None,
        quantile=0.99,
        tail="upper",
        strict=True,
        n_permutations=1000,
        alpha=0.01,
        random_state=0,
        mode="cross_independent",
        band_convention="lag1_flat",
        two_sided=False,
        n_jobs=1,
    ):
        super().__init__(
            max_lag=max_lag,
            min_lag=min_lag,
            threshold=threshold,
            quantile=quantile,
            tail=tail,
            strict=strict,
            n_permutations=n_permutations,
            alpha=alpha,
            random_state=random_state,
            band_convention=band_convention,
            two_sided=two_sided,
            n_jobs=n_jobs,
        )
        self.mode = mode

    def fit(self, X, y=None):
        cols = _as_columns(X)
        if y is not None:
            cols = cols + _as_columns(y)
        if len(cols) != 2:
            raise ValueError(f"CrossExtremogram expects two series, got {len(cols)}")
        ind_x, ind_y = self._pair(cols)
        self.indicator_, self.target_indicator_ = ind_x, ind_y
        if self.n_permutations:
            config = self._config(self.mode)
            curve, samples = permutation_samples(
                ind_x, self.max_lag, config, y=ind_y, min_lag=self.min_lag, n_jobs=self.n_jobs
            )
            return self._finish(curve, samples, config)
        return self._finish(cross_extremogram(ind_x, ind_y, self.max_lag, self.min_lag), None, None)

    def _pair(self, cols):
        out = []
        for j, col in enumerate(cols):
            threshold = _pick(self.threshold, j)
            quantile = None if threshold is not None else _pick(self.quantile, j)
            est = ExceedanceIndicator(threshold, quantile, self.tail, self.strict).fit(col)
            ind = est.indicators(col)[0]
            if not isinstance(col, PriceSeries):
                ind = IndicatorSeries(f"x{j}", ind.bits, ind.tailset, ind.threshold, ind.n_missing)
            out.append(ind)
        return out
