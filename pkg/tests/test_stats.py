import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats as sps

from contagion.process import FiniteDiscreteDistribution
from contagion.stats import (Check, WeightedSample, ks_1d, ks_threshold, mean_band, normality_check, report_json,
                             sample_moments, tv_distance, two_sample_ks, variance_band)

samples = st.lists(st.integers(-20, 20).map(lambda v: v / 4), min_size=1, max_size=60)


def test_ks_matches_scipy(rng):
    x = rng.normal(size=500)
    assert ks_1d(x, sps.norm.cdf) == pytest.approx(sps.kstest(x, "norm").statistic, abs=1e-14)
    y = rng.normal(0.3, 1.0, size=300)
    assert two_sample_ks(x, y) == pytest.approx(sps.ks_2samp(x, y).statistic, abs=1e-14)


def test_ks_with_ties_and_weights():
    # all mass at 0 against the uniform cdf on [-1, 1]: the jump sits at F = 1/2
    assert ks_1d(np.zeros(10), lambda v: (v + 1) / 2) == pytest.approx(0.5)
    w = np.array([1.0, 3.0])
    assert ks_1d([0.0, 1.0], lambda v: np.clip(v, 0, 1), weights=w) == pytest.approx(0.75)


@given(samples, samples)
def test_two_sample_ks_symmetric_and_bounded(a, b):
    d = two_sample_ks(a, b)
    assert d == two_sample_ks(b, a)
    assert 0 <= d <= 1
    assert two_sample_ks(a, a) == 0


def test_thresholds():
    assert ks_threshold(100) == pytest.approx(0.1358)
    assert ks_threshold(100, 100, factor=2) == pytest.approx(2 * 1.358 * math.sqrt(0.02))


def law(d, scale=1):
    return FiniteDiscreteDistribution({(k,): v for k, v in d.items()}, scale)


@given(st.lists(st.floats(0.01, 1.0), min_size=3, max_size=3), st.lists(st.floats(0.01, 1.0), min_size=3, max_size=3))
def test_tv_metric_properties(p, q):
    P = law({k: v / sum(p) for k, v in enumerate(p)})
    Q = law({k + 1: v / sum(q) for k, v in enumerate(q)})
    assert tv_distance(P, Q) == pytest.approx(tv_distance(Q, P))
    assert tv_distance(P, P) == 0
    assert 0 <= tv_distance(P, Q) <= 1 + 1e-12


def test_tv_examples():
    assert tv_distance(law({0: 0.5, 1: 0.5}), law({1: 0.5, 2: 0.5})) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        tv_distance(law({0: 1.0}), law({0: 1.0}, scale=2))


def test_weighted_moments():
    ws = WeightedSample(np.array([0.0, 2.0]), np.array([1.0, 3.0]))
    mean, cov = sample_moments(ws)
    assert mean[0] == 1.5 and cov[0, 0] == pytest.approx(0.75)
    with pytest.raises(ValueError):
        WeightedSample(np.zeros(2), np.array([-1.0, 2.0]))
    with pytest.raises(ValueError):
        sample_moments(WeightedSample.unweighted([1.0]))


def test_normality_accepts_and_rejects(rng):
    T = np.array([[1.0, 0.5], [0.5, 2.0]])
    x = rng.multivariate_normal([0, 0], T, size=5000)
    rep = normality_check(x, T)
    assert rep.passed and len(rep.checks) == 3 and rep.cov_rel_error < 0.05
    bad = normality_check(2 * x, T)
    assert not bad.passed and bad.cov_rel_error > 1
    shifted = normality_check(x + [1.0, 0.0], T)
    assert not shifted.checks[0].passed


def test_normality_degenerate_target():
    with pytest.raises(ValueError):
        normality_check(np.zeros((50, 1)), [[1.0]])
    assert normality_check(np.zeros((200, 1)), [[0.0]]).checks[0].value == 0.0
    with pytest.raises(ValueError):
        normality_check(np.arange(200.0), [[0.0]])


def test_bands_cover_truth(rng):
    x = rng.normal(1.0, 2.0, size=(20_000, 1))
    m, hw = mean_band(x)
    assert abs(m[0] - 1.0) <= hw[0]
    v, hv = variance_band(x)
    assert abs(v[0] - 4.0) <= hv[0]


def test_check_line_and_report():
    c = Check.at_most("demo", 0.01, 0.02, sample_sizes={"n": 3})
    assert c.passed and c.line() == "[PASS] demo: 0.01 <= 0.02"
    f = Check.at_most("demo", 0.03, 0.02, detail="note")
    assert f.line().startswith("[FAIL]") and f.line().endswith("(note)")
    body = json.loads(report_json([c, f], command="x"))
    assert body["passed"] is False and body["command"] == "x" and len(body["checks"]) == 2
