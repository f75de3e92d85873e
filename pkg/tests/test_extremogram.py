import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from extremo._kernels import joint_counts_packed, joint_counts_positions, pack_bits
from extremo.extremogram import (
    ExtremogramCurve,
    ExtremogramError,
    IndicatorSeries,
    cross_extremogram,
    extremogram,
    extremogram_bruteforce,
    make_indicator,
)
from extremo.series import TailSet

from conftest import make_series


def ind(bits, name="x"):
    return IndicatorSeries(name, np.asarray(bits, dtype=bool))


def markov_states(rng, n, p_enter, p_stay):
    state = np.empty(n, dtype=bool)
    s = False
    u = rng.random(n)
    for t in range(n):
        s = u[t] < (p_stay if s else p_enter)
        state[t] = s
    return state


# ------------------------------------------------------------ indicators


def test_make_indicator_strict_threshold():
    s = make_series([100, 300, 300.01, np.nan, 5000])
    i = make_indicator(s, TailSet.upper(300))
    assert i.bits.tolist() == [False, False, True, False, True]
    assert i.exceed_count == 2 and i.threshold == 300 and i.n_missing == 1
    weak = make_indicator(s, TailSet.upper(300, strict=False))
    assert weak.exceed_count == 3


def test_make_indicator_lower_and_quantile():
    s = make_series([-1000, -50, 20, 40, 60])
    assert make_indicator(s, TailSet.lower(0)).bits.tolist() == [True, True, False, False, False]
    q = make_indicator(s, TailSet.quantile_upper(0.6))
    assert q.threshold == 20 and q.exceed_count == 2


def test_indicator_above_max_is_empty():
    s = make_series(np.linspace(0, 100, 50))
    assert make_indicator(s, TailSet.upper(1e300)).exceed_count == 0


def test_unresolvable_tailset():
    s = make_series([np.nan, np.nan])
    with pytest.raises(ExtremogramError, match="cannot resolve"):
        make_indicator(s, TailSet.quantile_upper(0.9))


@settings(max_examples=50, deadline=None)
@given(
    xs=arrays(np.float64, st.integers(1, 200), elements=st.floats(-1000, 15000, allow_nan=False)),
    u1=st.floats(-1000, 15000),
    u2=st.floats(-1000, 15000),
)
def test_raising_threshold_never_adds_exceedances(xs, u1, u2):
    s = make_series(xs)
    lo, hi = sorted((u1, u2))
    assert make_indicator(s, TailSet.upper(hi)).exceed_count <= make_indicator(s, TailSet.upper(lo)).exceed_count


# ------------------------------------------------------------ estimator


@pytest.mark.parametrize("n", [9, 10, 101])
def test_alternating_bits(n):
    bits = np.arange(n) % 2 == 0
    c = extremogram(ind(bits), 2)
    half = math.ceil(n / 2)
    assert c.at(1) == 0.0
    assert c.at(2) == (half - 1) / half


def test_lag_zero_is_one():
    c = extremogram(ind([0, 1, 1, 0, 1]), 3, min_lag=0)
    assert c.at(0) == 1.0
    assert c.lags.tolist() == [0, 1, 2, 3]


def test_all_true_bits():
    n = 37
    c = extremogram_bruteforce(ind(np.ones(n)), 10, min_lag=0)
    assert c.values.tolist() == [(n - h) / n for h in range(11)]
    assert np.array_equal(extremogram(ind(np.ones(n)), 10, min_lag=0).values, c.values)


def test_zero_exceedances_is_an_error():
    with pytest.raises(ExtremogramError, match="no exceedances"):
        extremogram(ind(np.zeros(10)), 3)
    with pytest.raises(ExtremogramError, match="no exceedances"):
        cross_extremogram(ind(np.zeros(10)), ind(np.ones(10)), 3)


def test_lag_validation():
    with pytest.raises(ExtremogramError, match="below the series length"):
        extremogram(ind([1, 0, 1]), 3)
    with pytest.raises(ExtremogramError, match="min_lag"):
        extremogram(ind([1, 0, 1]), 1, min_lag=-1)
    with pytest.raises(ExtremogramError, match="length mismatch"):
        cross_extremogram(ind([1, 0]), ind([1, 0, 1]), 1)


def test_markov_chain_against_transition_powers():
    rng = np.random.default_rng(5)
    p_enter, p_stay = 0.01, 0.9
    bits = markov_states(rng, 500_000, p_enter, p_stay)
    c = extremogram(ind(bits), 50)
    # two-state chain: [T^h]_{ss} = pi + (1 - pi) * lambda^h
    pi = p_enter / (p_enter + 1 - p_stay)
    lam = p_stay - p_enter
    oracle = np.array([pi + (1 - pi) * lam**h for h in range(1, 51)])
    assert np.max(np.abs(c.values - oracle)) <= 0.02


def test_iid_indicator_converges_to_rate(rng):
    n, p = 100_000, 0.02
    bits = rng.random(n) < p
    c = extremogram(ind(bits), 50)
    assert abs(c.values.mean() - p) <= 3 * math.sqrt(p / (n * p))


# ------------------------------------------------------------ cross


def test_self_cross_equals_univariate(rng):
    i = ind(rng.random(3000) < 0.05)
    a = extremogram(i, 80, min_lag=0)
    b = cross_extremogram(i, i, 80, min_lag=0)
    assert a.values.tobytes() == b.values.tobytes()


def test_cross_empty_target(rng):
    x = ind(rng.random(500) < 0.1)
    c = cross_extremogram(x, ind(np.zeros(500)), 20)
    assert not c.values.any()


def test_cross_delayed_copy():
    rng = np.random.default_rng(11)
    n, p = 50_000, 0.05
    x = rng.random(n) < p
    y = np.zeros(n, dtype=bool)
    y[2:] = x[:-2]
    c = cross_extremogram(ind(x), ind(y, "y"), 5)
    # brute-force count
    k = int(x.sum())
    for h in range(6):
        direct = sum(1 for t in np.flatnonzero(x) if t + h < n and y[t + h])
        assert c.at(h) == direct / k
    assert c.at(2) > 0.999
    assert abs(c.at(0) - p) < 0.01


def test_cross_thresholds_may_differ():
    x = make_series([1, 500, 2, 3], id="x")
    y = make_series([7000, 2, 6000, 2], id="y")
    c = cross_extremogram(make_indicator(x, TailSet.upper(300)), make_indicator(y, TailSet.upper(5000)), 2)
    assert c.values.tolist() == [0.0, 1.0, 0.0]
    assert c.meta["x"]["threshold"] == 300 and c.meta["y"]["threshold"] == 5000


# ------------------------------------------------------------ oracle equivalence


def test_bruteforce_size_guard():
    with pytest.raises(ExtremogramError, match="brute force"):
        extremogram_bruteforce(ind(np.ones(10_001)), 3)


def test_bruteforce_alternating_closed_form():
    n = 41
    c = extremogram_bruteforce(ind(np.arange(n) % 2 == 0), 2)
    assert c.values.tolist() == [0.0, 20 / 21]


@st.composite
def indicator_pairs(draw):
    n = draw(st.integers(2, 1500))
    p = draw(st.floats(0.001, 0.9))
    seed = draw(st.integers(0, 2**32 - 1))
    r = np.random.default_rng(seed)
    x = r.random(n) < p
    x[draw(st.integers(0, n - 1))] = True
    y = r.random(n) < draw(st.floats(0.0, 0.9))
    h = draw(st.integers(0, n - 1))
    return x, y, h


@settings(max_examples=150, deadline=None)
@given(indicator_pairs())
def test_fast_matches_bruteforce(pair):
    x, y, h = pair
    xi, yi = ind(x), ind(y, "y")
    uni_min = 0 if h == 0 else 1
    fast = extremogram(xi, h, uni_min)
    slow = extremogram_bruteforce(xi, h, uni_min)
    assert fast.values.tobytes() == slow.values.tobytes()
    fast = cross_extremogram(xi, yi, h)
    slow = extremogram_bruteforce((xi, yi), h)
    assert fast.values.tobytes() == slow.values.tobytes()
    # invariants
    assert np.all((fast.values >= 0) & (fast.values <= 1))
    k = xi.exceed_count
    assert np.array_equal(np.rint(fast.values * k).astype(np.int64), fast.joint_counts)


@settings(max_examples=80, deadline=None)
@given(indicator_pairs())
def test_kernel_routes_agree(pair):
    x, y, h = pair
    a = joint_counts_packed(pack_bits(x), pack_bits(y), 0, h)
    b = joint_counts_positions(np.flatnonzero(x), np.flatnonzero(y), 0, h)
    assert np.array_equal(a, b)


# ------------------------------------------------------------ serialization


def test_curve_csv_and_json(tmp_path):
    c = extremogram(ind([1, 1, 0, 1, 0, 0, 1]), 3)
    path = c.to_csv(tmp_path / "c.csv", header_comment="cfg")
    lines = path.read_text().splitlines()
    assert lines[0] == "# cfg"
    assert lines[1] == "lag,value,defined"
    assert lines[2] == "1,0.25,1"
    back = ExtremogramCurve.from_dict(json.loads(c.to_json(tmp_path / "c.json")))
    assert np.array_equal(back.values, c.values)
    assert back.meta["x"]["exceed_count"] == 4
