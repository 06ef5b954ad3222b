import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from contagion.displacement import FiniteDiscrete, Gaussian, PointMass
from contagion.env import (DisplacementSpec, Explicit, Exponential, IidFiniteSupport, Initial,
                           Periodic, PowerLaw, StepSpec, TwoStateMarkov, check_uep,
                           materialize, scalar_series)

ORIGIN = Initial(np.zeros((1, 1)), [1.0], [1.0])
COIN = DisplacementSpec([FiniteDiscrete([[-1.0], [1.0]], [0.5, 0.5])])


def env(regime, n, **kw):
    return materialize(regime, n, seed=0, d=1, displacement=COIN, **kw)


def test_constant_weights_give_harmonic_pi():
    s = scalar_series(env(PowerLaw(1.0, 0.0), 50), ORIGIN)
    n = np.arange(51)
    assert np.allclose(s.pi, 1.0 / (n + 1), rtol=1e-14, atol=0)


def test_halving_weights():
    s = scalar_series(env(Exponential(1.0, -math.log(2.0)), 30), ORIGIN)
    assert s.pi[1] == pytest.approx(1.0 / 3.0, rel=1e-14)
    assert np.allclose(s.W, 2.0 - 2.0 ** -np.arange(31), rtol=1e-13)


def test_doubling_weights_tend_to_half():
    s = scalar_series(env(Exponential(1.0, math.log(2.0)), 60), ORIGIN)
    assert abs(s.pi[60] - 0.5) <= 1e-6
    assert np.all(np.isfinite(s.log_W))


def test_huge_log_scale_does_not_overflow():
    s = scalar_series(env(Exponential(1.0, 5.0), 2000), ORIGIN)
    assert np.all(np.isfinite(s.pi)) and np.all(np.isfinite(s.log_W))
    assert s.pi[-1] == pytest.approx(1.0 - math.exp(-5.0), rel=1e-12)


def test_linear_weights_pi():
    s = scalar_series(env(PowerLaw(1.0, 1.0), 100), ORIGIN)
    n = 100
    assert s.pi[n] == pytest.approx(n / (1.0 + n * (n + 1) / 2.0), rel=1e-13)
    assert n * s.pi[n] == pytest.approx(2.0, rel=0.02)


def test_zero_initial_weight_rejected():
    with pytest.raises(ValueError):
        Initial(np.zeros((1, 1)), [0.0], [1.0])


def test_zero_step_weights_still_selectable():
    s = scalar_series(env(PowerLaw(0.0, 0.0), 10), ORIGIN)
    assert s.pi[0] == 1.0 and np.all(s.pi[1:] == 0.0)


def test_explicit_steps_and_offspring():
    joint = COIN.joint(0, 2)
    envs = materialize(Explicit([StepSpec((1.0, 3.0), (1.0, 1.0), joint), StepSpec((), ())]), 2, seed=0, d=1)
    assert envs.k.tolist()[1:] == [2, 0]
    assert envs[1].total_weight == 4.0
    s = scalar_series(envs, ORIGIN)
    assert s.pi[1] == pytest.approx(0.8) and s.pi[2] == 0.0
    assert s.U[-1] == 3.0


def test_offspring_generator_and_weight_resource():
    envs = env(PowerLaw(1.0, 0.0), 200, offspring=IidFiniteSupport((0, 1, 3), (0.2, 0.5, 0.3)), resource="weight")
    assert set(np.unique(envs.k[1:])) <= {0, 1, 3}
    for n in range(1, 201):
        e = envs[n]
        if e.k:
            assert np.allclose(e.w_scaled, 1.0 / e.k) and np.allclose(e.u, e.w_scaled)


def test_weight_resource_with_exponential_rejected():
    with pytest.raises(ValueError):
        env(Exponential(), 5, resource="weight")


def test_negative_xi_rejected():
    with pytest.raises(ValueError):
        PowerLaw(IidFiniteSupport((-1.0, 1.0), (0.5, 0.5)))
    with pytest.raises(ValueError):
        PowerLaw(1.0, -1.5)


def test_materialize_is_deterministic():
    reg = Exponential(IidFiniteSupport((0.5, 2.0), (0.5, 0.5)), TwoStateMarkov((0.1, 0.2), (0.3, 1.5)))
    a, b = env(reg, 500), env(reg, 500)
    assert np.array_equal(a.w_scaled, b.w_scaled) and np.array_equal(a.log_scale, b.log_scale)
    c = materialize(reg, 500, seed=1, d=1, displacement=COIN)
    assert not np.array_equal(a.log_scale, c.log_scale)


def test_truncate_keeps_prefix():
    envs = env(Exponential(IidFiniteSupport((0.5, 2.0), (0.5, 0.5)), 0.3), 100)
    t = envs.truncate(40)
    assert len(t) == 40
    assert np.array_equal(scalar_series(t, ORIGIN).pi, scalar_series(envs, ORIGIN).pi[:41])


def test_periodic_generator():
    g = Periodic((1.0, 2.0, 3.0))
    assert g.sample(7, None).tolist() == [1, 2, 3, 1, 2, 3, 1]
    assert g.mean() == 2.0
    assert Periodic((1.0, 2.0), phase=1).sample(3, None).tolist() == [2, 1, 2]


def test_markov_stationary_frequency():
    g = TwoStateMarkov((0.1, 0.3), (0.0, 1.0))
    p0, p1 = g.stationary
    assert p1 == pytest.approx(0.25)
    x = g.sample(200_000, np.random.default_rng(0))
    assert abs(x.mean() - 0.25) < 0.01


def test_iid_support_frequencies():
    g = IidFiniteSupport((1.0, 4.0), (0.25, 0.75))
    N = 100_000
    x = g.sample(N, np.random.default_rng(0))
    assert abs((x == 4.0).mean() - 0.75) <= 4 * math.sqrt(0.75 * 0.25 / N)
    assert g.mean() == 3.25


def test_selector_picks_law():
    disp = DisplacementSpec([PointMass([1.0]), PointMass([-1.0])], selector=Periodic((0, 1)))
    envs = materialize(PowerLaw(), 4, seed=0, d=1, displacement=disp)
    mu, _ = envs.mixture_moments()
    assert mu[1:, 0].tolist() == [1.0, -1.0, 1.0, -1.0]


def test_mixture_moments_unequal_split():
    steps = [StepSpec((1.0, 3.0), (1.0, 1.0), DisplacementSpec([Gaussian([2.0], [[1.0]])]).joint(0, 2))]
    envs = materialize(Explicit(steps), 1, seed=0, d=1)
    mu, m = envs.mixture_moments()
    assert mu[1, 0] == pytest.approx(2.0) and m[1, 0, 0] == pytest.approx(5.0)


def test_check_uep_examples():
    n = 1000
    r = check_uep(np.ones(n + 1), n, [0.1, 0.5])
    assert r[0.1] == pytest.approx(101 / 1001) and r[0.5] == pytest.approx(501 / 1001)
    geo = 2.0 ** np.arange(n + 1, dtype=float) / 2.0**n
    assert check_uep(geo, n, [0.5])[0.5] < 1e-100
    with pytest.raises(ValueError):
        check_uep(np.ones(5), 4, [0.5])


@given(st.lists(st.floats(0.0, 10.0), min_size=1, max_size=30), st.floats(0.01, 10.0))
def test_pi_in_unit_interval_and_W_monotone(ws, w0):
    steps = [StepSpec((w,), (1.0,), COIN.joint(0, 1)) for w in ws]
    envs = materialize(Explicit(steps), len(ws), seed=0, d=1)
    s = scalar_series(envs, Initial(np.zeros((1, 1)), [w0], [1.0]))
    assert np.all((s.pi >= 0) & (s.pi <= 1))
    # compensated summation may move the running sum by an ulp
    assert np.all(np.diff(s.W) >= -4e-16 * s.W[1:])
    assert s.W[-1] == pytest.approx(w0 + math.fsum(ws), rel=1e-12)
