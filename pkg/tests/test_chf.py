import math

import numpy as np
import pytest

from contagion.chf import (NonSummableError, NotStabilizedError, big_pi, comparison_csv, default_grid, empirical_chf,
                           mean_measure_chf, phi_point, phi_product, replicate_band, thm1_limit_chf, u_average_f)
from contagion.displacement import FiniteDiscrete, Gaussian, PointMass
from contagion.env import (DisplacementSpec, Explicit, Exponential, StepSpec, IidFiniteSupport, Initial, Periodic, PowerLaw,
                           materialize, scalar_series)
from contagion.process import backward_sample_mother

ORIGIN = Initial(np.zeros((1, 1)), [1.0], [1.0])
COIN = DisplacementSpec([FiniteDiscrete([[-1.0], [1.0]], [0.5, 0.5])])
NORMAL = DisplacementSpec([Gaussian([0.0], [[1.0]])])
T = np.linspace(-3, 3, 25)


def test_gaussian_product_closed_form():
    n = 30
    envs = materialize(PowerLaw(), n, seed=0, d=1, displacement=NORMAL)
    f = np.exp(-T**2 / 2)
    want = np.prod([1 + (f - 1) / (r + 1) for r in range(1, n + 1)], axis=0)
    assert np.max(np.abs(phi_product(envs, ORIGIN, n, T) - want)) < 1e-14


def test_product_recursion():
    envs = materialize(PowerLaw(IidFiniteSupport((0.5, 3.0), (0.5, 0.5)), 0.7), 40, seed=2, d=1, displacement=COIN)
    s = scalar_series(envs, ORIGIN)
    for n in (1, 10, 40):
        f = envs.mixture(n).chf(T)
        lhs = phi_product(envs, ORIGIN, n, T)
        rhs = phi_product(envs, ORIGIN, n - 1, T) * (1 + s.pi[n] * (f - 1))
        assert np.max(np.abs(lhs - rhs)) < 1e-13


def test_point_chf_is_marginal_times_product():
    envs = materialize(PowerLaw(), 10, seed=0, d=1, displacement=DisplacementSpec([PointMass([2.0])]))
    v = phi_point(envs, ORIGIN, 10, 1, T)
    assert np.max(np.abs(v - np.exp(2j * T) * phi_product(envs, ORIGIN, 9, T))) < 1e-14
    assert phi_point(envs, ORIGIN, 0, 1, 1.3) == 1.0
    with pytest.raises(IndexError):
        phi_point(envs, ORIGIN, 3, 2, T)


def test_product_matches_backward_samples(rng):
    n, N = 100, 50_000
    envs = materialize(PowerLaw(1.0, 0.5), n, seed=0, d=1, displacement=COIN)
    x = backward_sample_mother(envs, ORIGIN, n, rng, size=N)
    assert np.max(np.abs(empirical_chf(x, T) - phi_product(envs, ORIGIN, n, T))) < 4.5 / math.sqrt(N)


def test_mean_measure_at_zero_and_by_brute_force():
    n = 12
    envs = materialize(PowerLaw(1.0, 1.0), n, seed=0, d=1, displacement=COIN, offspring=2, resource="weight")
    assert mean_measure_chf(envs, ORIGIN, n, 0.0) == pytest.approx(1.0)
    s = scalar_series(envs, ORIGIN)
    acc = ORIGIN.u.sum() * np.ones_like(T, dtype=complex)
    for r in range(1, n + 1):
        for j, uj in enumerate(envs.step_resources(r), start=1):
            acc += uj * phi_point(envs, ORIGIN, r, j, T)
    assert np.max(np.abs(mean_measure_chf(envs, ORIGIN, n, T) - acc / s.U[n])) < 1e-13


def test_big_pi_matches_high_precision_product():
    # w_0 = 1, w_r = 2^-r, coin flips, t = 1; reference from a 200-factor product in 40-digit arithmetic
    envs = materialize(Exponential(1.0, -math.log(2.0)), 400, seed=0, d=1, displacement=COIN)
    val, bound = big_pi(envs, ORIGIN, 1.0)
    assert abs(val.imag) < 1e-15
    assert bound < 1e-11
    assert abs(val.real - 0.7446249471208926737) <= bound


def test_big_pi_bound_is_honest():
    envs = materialize(Exponential(1.0, -0.5), 2000, seed=0, d=1, displacement=NORMAL)
    ref, _ = big_pi(envs, ORIGIN, T, tail_tol=1e-15)
    for tol in (1e-3, 1e-6, 1e-9):
        val, bound = big_pi(envs, ORIGIN, T, tail_tol=tol)
        assert bound <= 2 * tol
        assert np.max(np.abs(val - ref)) <= bound


def test_big_pi_power_tail_extrapolation():
    joint = NORMAL.joint(0, 1)
    steps = [StepSpec((r**-3.0,), (1.0,), joint) for r in range(1, 2001)]
    envs = materialize(Explicit(steps), 2000, seed=0, d=1)
    with pytest.raises(NonSummableError):
        big_pi(envs, ORIGIN, T, tail_tol=1e-12)
    val, bound = big_pi(envs, ORIGIN, T, tail_tol=1e-5)
    assert bound < 2e-5 and np.all(np.abs(val) <= 1)


def test_big_pi_rejects_infinite_total_weight():
    envs = materialize(PowerLaw(), 1000, seed=0, d=1, displacement=NORMAL)
    with pytest.raises(NonSummableError):
        big_pi(envs, ORIGIN, T)


def test_u_average_single_law():
    envs = materialize(Exponential(1.0, -1.0), 200, seed=0, d=1, displacement=NORMAL)
    assert np.allclose(u_average_f(envs, T), np.exp(-T**2 / 2), atol=1e-15)


def test_u_average_periodic_laws():
    disp = DisplacementSpec([PointMass([1.0]), PointMass([-1.0])], selector=Periodic((0, 1)))
    envs = materialize(Exponential(1.0, -1.0), 1000, seed=0, d=1, displacement=disp)
    assert np.allclose(u_average_f(envs, T), np.cos(T), atol=1e-14)
    disp3 = DisplacementSpec([PointMass([1.0]), PointMass([-1.0]), PointMass([0.0])], selector=Periodic((0, 1, 2)))
    envs3 = materialize(Exponential(1.0, -1.0), 20, seed=0, d=1, displacement=disp3)
    with pytest.raises(NotStabilizedError):
        u_average_f(envs3, T)


def test_limit_chf_is_product_times_average():
    envs = materialize(Exponential(1.0, -math.log(2.0)), 400, seed=0, d=1, displacement=NORMAL)
    lim = thm1_limit_chf(envs, ORIGIN, T)
    val, _ = big_pi(envs, ORIGIN, T)
    assert np.allclose(lim, val * np.exp(-T**2 / 2), atol=1e-15)
    assert thm1_limit_chf(envs, ORIGIN, 0.0) == pytest.approx(1.0)


def test_empirical_chf_weights():
    x = np.array([0.0, 1.0])
    assert empirical_chf(x, math.pi, weights=[3.0, 1.0]) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        empirical_chf(x, 1.0, weights=[0.0, 0.0])


def test_band_and_csv():
    v = np.array([[1 + 1j, 0], [1 - 1j, 2]])
    mean, se = replicate_band(v)
    assert np.allclose(mean, [1, 1])
    assert np.allclose(se, [math.sqrt(2 / 2), math.sqrt(2 / 2)])
    text = comparison_csv(T[:2], np.ones(2), np.ones(2), np.zeros(2))
    assert text.splitlines()[0] == "t_0,analytic_re,analytic_im,empirical_re,empirical_im,abs_diff,mc_band"
    assert len(text.splitlines()) == 3


def test_default_grid_shape():
    assert default_grid(2, per_axis=5).shape == (25, 2)
    assert default_grid(1).shape == (25, 1)
