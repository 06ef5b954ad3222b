import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from contagion.asymptotics import (RegimePrediction, RegimeViolationError, ZeroMassError, ZetaTruncationError,
                                   b_summable_estimate, beta_diagnostic, cesaro_mean, g_estimate, kappa_n,
                                   kappa_series, nu_n, segment_measure, stolz_diagnostic, thm2_cov, thm2_drift,
                                   thm2_prediction, thm3_cov, thm3_drift, thm3_prediction, zeta_series, zeta_tilde,
                                   zeta_truncation)
from contagion.displacement import Gaussian, PointMass
from contagion.env import (DisplacementSpec, Exponential, IidFiniteSupport, Initial, Periodic, PowerLaw,
                           TwoStateMarkov, materialize, scalar_series)

ORIGIN = Initial(np.zeros((1, 1)), [1.0], [1.0])
NORMAL = DisplacementSpec([Gaussian([0.0], [[1.0]])])


def test_cesaro_and_b_summable():
    assert cesaro_mean([1.0, 2.0, 3.0, 4.0], 4) == 2.5
    assert b_summable_estimate([1.0, 3.0], [3.0, 1.0], 2) == 1.5
    with pytest.raises(ZeroMassError):
        b_summable_estimate([1.0, 2.0], [0.0, 0.0], 2)
    with pytest.raises(ValueError):
        cesaro_mean([1.0], 3)


def test_stolz_constant_sequence():
    n = 10**6
    want = 2.0 * math.fsum(1.0 / k for k in range(1, n + 1)) / math.log(n)
    assert stolz_diagnostic(2.0, n) == pytest.approx(want, rel=1e-12)
    assert abs(stolz_diagnostic(2.0, n) - 2.0) < 0.1


@pytest.mark.parametrize("alpha", [0.0, 1.0, 2.5])
def test_beta_diagnostic_tends_to_alpha_plus_one(alpha):
    n = 20_000
    envs = materialize(PowerLaw(1.0, alpha), n, seed=0, d=1, displacement=NORMAL)
    assert beta_diagnostic(scalar_series(envs, ORIGIN), n) == pytest.approx(alpha + 1, rel=2e-3 * (alpha + 1))


def test_power_law_constants_by_hand():
    assert np.allclose(thm2_drift(1.0, 1.0, [2.0, 0.0]), [4.0, 0.0])
    # cycle xi = (1, 3), mu = (0, 2): C(xi mu) = 3, C(xi) = 2
    assert thm2_drift(0.0, [1.0, 3.0], [[0.0], [2.0]], horizon=1000)[0] == pytest.approx(1.5)
    assert thm2_cov(0.5, 1.0, 1.0)[0, 0] == pytest.approx(1.5)
    c = thm2_cov(0.0, Periodic((1.0, 3.0)), [[[1.0, 0.0], [0.0, 2.0]], [[3.0, 1.0], [1.0, 2.0]]], horizon=1000)
    assert np.allclose(c, [[2.5, 0.75], [0.75, 2.0]])


def test_power_law_random_xi():
    xi = IidFiniteSupport((1.0, 3.0), (0.5, 0.5))
    assert thm2_drift(1.0, xi, 1.0, horizon=10**6)[0] == pytest.approx(2.0, rel=1e-12)
    with pytest.raises(ZeroMassError):
        thm2_drift(0.0, 0.0, 1.0, horizon=10)


def test_nu_and_kappa():
    n = 1000
    envs = materialize(PowerLaw(), n, seed=0, d=1, displacement=DisplacementSpec([PointMass([1.0])]))
    s = scalar_series(envs, ORIGIN)
    mu = np.ones(n + 1)
    nu, raw = nu_n(s, mu, n)
    assert raw[0] == pytest.approx(math.fsum(1.0 / (r + 1) for r in range(1, n)), rel=1e-13)
    assert nu[0] == pytest.approx(raw[0] / math.log(n))
    ks = kappa_series(s, mu, n)
    assert kappa_n(s, mu, n)[0] == pytest.approx(raw[0] + 1.0 / (n + 1), rel=1e-13)
    assert ks[599, 0] - ks[299, 0] == pytest.approx(math.fsum(1.0 / (r + 1) for r in range(301, 601)), rel=1e-12)


def test_zeta_tilde_doubling():
    n = 200
    val, bound = zeta_tilde(np.ones(n + 1), np.full(n + 1, math.log(2.0)), n)
    assert val == pytest.approx(2.0, abs=1e-11) and bound < 1e-12
    assert zeta_series(np.ones(n + 1), np.full(n + 1, math.log(2.0)))[-1] == pytest.approx(2.0, abs=1e-12)


def test_zeta_errors():
    with pytest.raises(ZetaTruncationError):
        zeta_tilde(np.ones(11), np.full(11, 0.1), 10)
    with pytest.raises(RegimeViolationError):
        zeta_tilde(np.ones(50), np.full(50, -0.1), 40, M=20)
    with pytest.raises(RegimeViolationError):
        zeta_truncation(0.0, 1.0)
    M = zeta_truncation(math.log(2.0), 1.0, 1e-12)
    assert 2.0 ** -M / 0.5 < 1e-12 <= 2.0 ** -(M - 1) / 0.5


@given(st.lists(st.tuples(st.floats(0.0, 5.0), st.floats(0.2, 3.0)), min_size=2, max_size=40))
def test_zeta_recursion_matches_direct_sum(pairs):
    xi = np.array([p[0] for p in pairs])
    tau = np.array([p[1] for p in pairs])
    n = len(pairs) - 1
    direct = sum(xi[n - m] * math.exp(-tau[n - m + 1 : n + 1].sum()) for m in range(n + 1))
    assert zeta_series(xi, tau)[-1] == pytest.approx(direct, rel=1e-12, abs=1e-300)


def test_exponential_constants_constant_environment():
    c = 3.0
    lam = thm3_drift(Exponential(1.0, math.log(2.0)), DisplacementSpec([PointMass([c])]), K=2000)
    assert lam.value[0] == pytest.approx(c / 2, rel=1e-10)
    cov = thm3_cov(Exponential(1.0, math.log(2.0)), NORMAL, K=2000)
    assert cov.value[0, 0] == pytest.approx(0.5, rel=1e-10)
    cov_c = thm3_cov(Exponential(1.0, math.log(2.0)), DisplacementSpec([PointMass([c])]), K=2000)
    assert cov_c.value[0, 0] == pytest.approx(c * c / 4, rel=1e-10)


MARKOV = Exponential(1.0, TwoStateMarkov((0.1, 0.2), (0.3, 1.5)))
SHIFTED = DisplacementSpec([Gaussian([1.0], [[1.0]])])


def test_markov_environment_regression():
    drift = thm3_drift(MARKOV, SHIFTED, K=100_000, seed=0)
    cov = thm3_cov(MARKOV, SHIFTED, K=100_000, seed=0)
    assert drift.value[0] == pytest.approx(0.45086752, abs=1e-7)
    assert cov.value[0, 0] == pytest.approx(0.65534078, abs=1e-7)
    other = thm3_drift(MARKOV, SHIFTED, K=100_000, seed=1)
    assert abs(other.value[0] - drift.value[0]) <= 4 * math.hypot(other.stderr[0], drift.stderr[0])


def test_exponential_needs_positive_drift():
    with pytest.raises(RegimeViolationError):
        thm3_drift(Exponential(1.0, -0.5), NORMAL, K=100)
    with pytest.raises(RegimeViolationError):
        thm3_drift(PowerLaw(), NORMAL, K=100)


def test_g_estimate_shapes():
    n = 10_000
    v = np.linspace(0, 1, 11)
    assert np.allclose(g_estimate(np.ones(n + 1), n, v), v, atol=2e-4)
    assert np.allclose(g_estimate(np.arange(n + 1.0), n, v), v**2, atol=2e-4)
    with pytest.raises(ValueError):
        g_estimate(np.zeros(11), 10, v)


def test_predictions_serialize():
    n = 500
    envs = materialize(PowerLaw(1.0, 1.0), n, seed=0, d=1, displacement=NORMAL)
    s = scalar_series(envs, ORIGIN)
    p = thm2_prediction(1.0, 1.0, 0.0, 1.0, horizon=100, series=s, mu_series=np.zeros(n + 1), at=[100, 500])
    body = json.loads(p.to_json())
    assert body["regime"] == "Thm2" and body["scaling"] == "sqrt(ln n)"
    assert body["covariance"] == [[2.0]] and set(body["centering_values"]) == {"100", "500"}
    q = thm3_prediction(Exponential(1.0, math.log(2.0)), NORMAL, K=500)
    assert q.scaling == "sqrt(n)" and q.covariance[0, 0] == pytest.approx(0.5)
    seg = segment_measure([2.0], [0.0, 0.5, 1.0], [0.0, 0.5, 1.0])
    assert json.loads(seg.to_json())["segment"]["G"] == [0.0, 0.5, 1.0]


def test_prediction_validation():
    with pytest.raises(ValueError):
        RegimePrediction("Thm4", None, None)
    with pytest.raises(ValueError):
        RegimePrediction("Thm2", [0.0], [[-1.0]])
    with pytest.raises(ValueError):
        segment_measure([1.0], [0.0, 0.7, 0.5], [0.0, 0.5, 1.0])
