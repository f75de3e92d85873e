import numpy as np
import pytest
from scipy import stats

from extremo.extremogram import ExtremogramError, IndicatorSeries, cross_extremogram, extremogram
from extremo.permutation import (
    PermutationConfig,
    nearest_rank,
    permutation_bands,
    permutation_samples,
    permute_series,
    significance_report,
)
from extremo.rng import substream


def ind(bits, name="x"):
    return IndicatorSeries(name, np.asarray(bits, dtype=bool))


def test_config_validation():
    with pytest.raises(ValueError, match="replicates"):
        PermutationConfig(replicates=99)
    with pytest.raises(ValueError, match="alpha"):
        PermutationConfig(alpha=1.5)
    with pytest.raises(ValueError, match="mode"):
        PermutationConfig(mode="blocks")


def test_substreams_are_independent_of_order():
    a = [substream(9, r).random() for r in range(5)]
    b = [substream(9, r).random() for r in reversed(range(5))][::-1]
    assert a == b
    assert len(set(a)) == 5
    assert substream(9, 0).random() != substream(10, 0).random()


def test_nearest_rank():
    col = np.arange(1, 1001, dtype=float)[:, None]
    assert nearest_rank(col, 0.005)[0] == 5
    assert nearest_rank(col, 0.995)[0] == 995


# ------------------------------------------------------------ permute_series


def test_permute_all_true_unchanged():
    i = ind(np.ones(50))
    assert np.array_equal(permute_series(i, 3).bits, i.bits)


def test_permute_preserves_count(rng):
    i = ind(rng.random(1000) < 0.1)
    for r in range(20):
        assert permute_series(i, substream(1, r)).exceed_count == i.exceed_count


def test_single_bit_lands_uniformly():
    base = ind([1] + [0] * 9)
    counts = np.zeros(10, dtype=int)
    for r in range(10_000):
        p = permute_series(base, substream(42, r))
        assert p.exceed_count == 1
        counts[np.flatnonzero(p.bits)[0]] += 1
    assert stats.chisquare(counts).pvalue > 0.001


def test_replicate_subset_sampling_is_uniform():
    # the fast path draws k-subsets; check one bit's landing index the same way
    from extremo.permutation import _Replicator

    rep = _Replicator(ind([1] + [0] * 9), None, "univariate", 1, 1, 7)
    counts = np.zeros(10, dtype=int)
    for r in range(10_000):
        g = substream(7, r)
        counts[g.choice(10, 1, replace=False)[0]] += 1
    assert stats.chisquare(counts).pvalue > 0.001
    assert rep(0).shape == (1,)


# ------------------------------------------------------------ bands


def test_bands_deterministic_and_thread_independent(rng):
    i = ind(rng.random(20_000) < 0.02)
    cfg = PermutationConfig(replicates=300, seed=123)
    a = permutation_bands(i, 40, cfg)
    b = permutation_bands(i, 40, cfg)
    c = permutation_bands(i, 40, cfg, n_jobs=8)
    for other in (b, c):
        assert a.lower.tobytes() == other.lower.tobytes()
        assert a.upper.tobytes() == other.upper.tobytes()
        assert a.flat_upper == other.flat_upper
    assert np.all(a.lower <= a.upper)
    assert a.flat_upper == a.upper[0] and a.flat_lower == a.lower[0]


def test_dense_indicator_bands_use_word_kernel_consistently(rng):
    i = ind(rng.random(4000) < 0.4)
    cfg = PermutationConfig(replicates=100, seed=5, mode="univariate")
    obs, samples = permutation_samples(i, 30, cfg)
    # each replicate curve is an exact extremogram of some k-of-n indicator
    k = i.exceed_count
    assert np.array_equal(np.rint(samples * k), samples * k)
    assert abs(samples.mean() - k / 4000) < 0.01


def test_bands_invariant_to_input_order(rng):
    bits = np.zeros(50_000, dtype=bool)
    bits[rng.choice(50_000, 600, replace=False)] = True
    bits_sorted = np.sort(bits)[::-1].copy()  # all exceedances at the start
    a = permutation_bands(ind(bits), 20, PermutationConfig(1000, seed=1))
    b = permutation_bands(ind(bits_sorted), 20, PermutationConfig(1000, seed=2))
    step = 1 / 600
    assert np.all(np.abs(a.upper - b.upper) <= 3 * step)
    assert np.all(np.abs(a.lower - b.lower) <= 3 * step)


def test_every_replicate_preserves_count(rng):
    x = ind(rng.random(5000) < 0.05)
    y = ind(rng.random(5000) < 0.03, "y")
    from extremo.permutation import _Replicator

    for mode in ("cross_joint", "cross_independent"):
        rep = _Replicator(x, y, mode, 0, 0, 3)
        # lag-0 joint count of a replicate can never exceed min(kx, ky)
        for r in range(50):
            assert rep(r)[0] <= min(x.exceed_count, y.exceed_count)
    # joint mode keeps contemporaneous co-exceedances exactly
    both = x.bits & y.bits
    rep = _Replicator(x, y, "cross_joint", 0, 0, 3)
    assert all(rep(r)[0] == both.sum() for r in range(50))


def test_perfect_pair_modes(rng):
    bits = rng.random(20_000) < 0.01
    x, y = ind(bits), ind(bits.copy(), "y")
    obs = cross_extremogram(x, y, 10)
    indep = permutation_bands(x, 10, PermutationConfig(500, seed=4, mode="cross_independent"), y=y)
    joint = permutation_bands(x, 10, PermutationConfig(500, seed=4, mode="cross_joint"), y=y)
    assert obs.at(0) == 1.0
    assert obs.at(0) > 10 * indep.upper[0]
    assert joint.lower[0] <= obs.at(0) <= joint.upper[0]


def test_estimator_errors_propagate():
    with pytest.raises(ExtremogramError, match="no exceedances"):
        permutation_bands(ind(np.zeros(100)), 5, PermutationConfig(100))
    with pytest.raises(ValueError, match="two indicators"):
        permutation_bands(ind(np.ones(100)), 5, PermutationConfig(100, mode="cross_joint"))


def test_iid_null_coverage_small():
    rng = np.random.default_rng(77)
    i = ind(rng.random(100_000) < 0.01)
    cfg = PermutationConfig(1000, 0.01, seed=8)
    bands = permutation_bands(i, 200, cfg)
    report = significance_report(extremogram(i, 200), bands)
    assert report.flat.sum() <= 6


# ------------------------------------------------------------ significance


def test_report_flags_and_lag_mismatch(rng):
    i = ind(rng.random(10_000) < 0.02)
    curve = extremogram(i, 10)
    bands = permutation_bands(i, 10, PermutationConfig(200, seed=0))
    flat_curve = type(curve)(curve.lags, np.full(10, 0.02), curve.joint_counts, curve.meta)
    wide = type(bands)(bands.lags, np.zeros(10), np.ones(10), 0.0, 1.0, bands.config)
    assert not significance_report(flat_curve, wide).flags.any()
    with pytest.raises(ExtremogramError, match="lag ranges differ"):
        significance_report(extremogram(i, 11), bands)


def test_daily_lag_flag():
    n, period = 48 * 2000, 48
    rng = np.random.default_rng(3)
    bits = rng.random(n) < 0.005
    bits[::period] |= rng.random(n // period) < 0.5
    i = ind(bits)
    curve = extremogram(i, 60)
    rep = significance_report(curve, permutation_bands(i, 60, PermutationConfig(500, seed=1)))
    assert 48 in rep.flagged_lags
    assert rep.to_dict()["sided"] == "one-sided upper"


def test_two_sided_option(rng):
    i = ind(rng.random(10_000) < 0.02)
    curve = extremogram(i, 5)
    bands = permutation_bands(i, 5, PermutationConfig(200, seed=0, two_sided=True))
    low = type(curve)(curve.lags, np.full(5, -1.0), curve.joint_counts, curve.meta)
    assert significance_report(low, bands).flags.all()
    assert not significance_report(low, bands, two_sided=False).flags.any()


def test_markov_flags_initial_run_growing_with_persistence():
    from extremo.synthetic import ProcessSpec, generate
    from extremo.extremogram import make_indicator
    from extremo.series import TailSet

    runs = []
    for p_stay in (0.5, 0.8, 0.95):
        spec = ProcessSpec("markov_regime", 100_000, seed=2, params={"p_stay": p_stay, "p_enter": 0.005})
        i = make_indicator(generate(spec), TailSet.upper(spec.split_level))
        curve = extremogram(i, 100)
        rep = significance_report(curve, permutation_bands(i, 100, PermutationConfig(300, seed=1)))
        first = rep.first_insignificant_lag()
        assert all(rep.flags[: first - 1])
        runs.append(first)
    assert runs[0] < runs[1] < runs[2]
