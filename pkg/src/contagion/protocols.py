"""Verification protocols: each builds an instance, runs it and returns pass/fail checks.

The generic protocols take an :class:`Instance` (weights, displacement,
initial points) so that ``contagion verify|oracle|identity|bench`` can run
them on any configuration.  The ``acceptance_*`` functions pin the fixed
instances and sizes of the acceptance suite.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Any, Optional, Union

import numpy as np

from . import asymptotics as asy
from .chf import default_grid, empirical_chf, mean_measure_chf, phi_point, replicate_band, thm1_limit_chf
from .displacement import FiniteDiscrete, Gaussian
from .env import DisplacementSpec, Exponential, Initial, PowerLaw, materialize, scalar_series
from .process import (FiniteDiscreteDistribution, ancestry_mean, ancestry_probability, backward_moments,
                      backward_sample_mother, exact_enumerate, init, mother_count_expectation, point_share, run,
                      simulate_replicates)
from .stats import (Check, ks_1d, ks_threshold, mean_band, normality_check, tv_distance, two_sample_ks,
                    variance_band)
from .wsampler import PrefixWeightIndex, mean_probes

DEFAULT_SEED = 12345
LN2 = math.log(2.0)


class RegimeMismatchError(ValueError):
    """The weight regime does not fall under the requested limit theorem."""


def stream(seed: int, tag: int) -> np.random.Generator:
    """PCG64 stream number ``tag`` derived from ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(tag,))))


def origin(d: int = 1) -> Initial:
    return Initial(np.zeros((1, d)), [1.0], [1.0])


def gaussian_spec(mean: float = 0.0, var: float = 1.0, d: int = 1) -> DisplacementSpec:
    return DisplacementSpec([Gaussian(np.full(d, mean), var * np.eye(d))])


def coin_spec() -> DisplacementSpec:
    return DisplacementSpec([FiniteDiscrete([[-1.0], [1.0]], [0.5, 0.5])])


@dataclass
class Instance:
    regime: Any
    displacement: Optional[DisplacementSpec]
    initial: Initial
    offspring: Any = 1
    resource: Union[float, str] = 1.0
    seed: int = DEFAULT_SEED

    @property
    def d(self) -> int:
        return self.initial.d

    def environment(self, n_steps: int, salt: int = 0):
        return materialize(self.regime, n_steps, seed=self.seed + salt, d=self.d, displacement=self.displacement,
                           offspring=self.offspring, resource=self.resource)

    @classmethod
    def from_config(cls, cfg) -> "Instance":
        return cls(cfg.regime, cfg.displacement, cfg.initial, cfg.offspring, cfg.resource, cfg.seed)


# ---------------------------------------------------------------------------
# Exact oracle and the backward identity


def oracle_triple(inst: Instance, n: int, runs: int, j: int = 1, t=None,
                  ch_tol: float = 1e-10, tv_tol: float = 0.005) -> tuple[list[Check], FiniteDiscreteDistribution]:
    """Exact enumeration vs ch.f. product vs forward Monte Carlo for the point X_{n,j}."""
    envs = inst.environment(n)
    t = default_grid(inst.d, per_axis=25 if inst.d == 1 else 5) if t is None else t
    law = exact_enumerate(envs, inst.initial, n, j)
    diff = float(np.max(np.abs(law.chf(t) - phi_point(envs, inst.initial, n, j, t))))
    batch = simulate_replicates(envs, inst.initial, n, runs, stream(inst.seed, 1))
    mc = FiniteDiscreteDistribution.from_samples(batch.point_location(n, j), law.scale)
    checks = [
        Check.at_most(f"oracle: max |enumerated ch.f. - product ch.f.| (n={n})", diff, ch_tol,
                      sample_sizes={"t_points": int(np.atleast_2d(t).shape[0])}),
        Check.at_most(f"oracle: TV(exact, Monte Carlo) (n={n})", tv_distance(law, mc), tv_tol,
                      sample_sizes={"runs": runs}),
    ]
    return checks, law


def identity_check(inst: Instance, n: int, N: int, label: str = "") -> list[Check]:
    """Two-sample KS per coordinate between forward X*_n and the independent-indicator representation."""
    envs = inst.environment(n)
    fwd = simulate_replicates(envs, inst.initial, n, N, stream(inst.seed, 10)).mother_location(n)
    bwd = backward_sample_mother(envs, inst.initial, n, stream(inst.seed, 11), size=N)
    thr = ks_threshold(N, N, quantile=1.95, factor=1.5)
    out = []
    for c in range(inst.d):
        name = f"identity: KS forward vs backward{label}, n={n}" + (f", coord {c}" if inst.d > 1 else "")
        out.append(Check.at_most(name, two_sample_ks(fwd[:, c], bwd[:, c]), thr,
                                 sample_sizes={"forward": N, "backward": N}))
    return out


# ---------------------------------------------------------------------------
# Limit theorems


def thm1_check(inst: Instance, n: int, R: int, horizon: int = 4000, k_band: float = 4.0) -> list[Check]:
    """Summable weights: empirical ch.f. of the resource measure vs its limit and its exact finite-n value."""
    envs = inst.environment(max(n, horizon))
    initial = inst.initial
    series = scalar_series(envs, initial)
    if series.pi[-1] > 1e-3:
        raise RegimeMismatchError("weights do not look summable: pi_n is not small at the horizon")
    t = default_grid(inst.d, per_axis=25 if inst.d == 1 else 5)
    limit = thm1_limit_chf(envs, initial, t)
    exact = mean_measure_chf(envs, initial, n, t)
    batch = simulate_replicates(envs, initial, n, R, stream(inst.seed, 20))
    per = np.stack([empirical_chf(batch.loc[r], t, weights=batch.u) for r in range(R)])
    mean, se = replicate_band(per)
    size = {"replicates": R, "t_points": int(t.shape[0])}
    return [
        Check.at_most(f"thm1: max |emp - limit| / ({k_band:g} stderr + 1e-12) (n={n})",
                      np.max(np.abs(mean - limit) / (k_band * se + 1e-12)), 1.0, sample_sizes=size),
        Check.at_most(f"thm1: max |emp - exact finite-n| / ({k_band:g} stderr + 1e-12) (n={n})",
                      np.max(np.abs(mean - exact) / (k_band * se + 1e-12)), 1.0, sample_sizes=size),
    ]


def thm2_check(inst: Instance, n: int, R: int, n_limit: int, k_band: float = 4.0, drift_tol: float = 0.1,
               cov_tol: float = 0.15, tag: str = "") -> list[Check]:
    """Power-law weights: exact finite-n moments (sharp), then drift and normality (loose)."""
    regime = inst.regime
    if not isinstance(regime, PowerLaw):
        raise RegimeMismatchError("the logarithmic-drift limit needs a power-law regime")
    envs = inst.environment(max(n, n_limit))
    series = scalar_series(envs, inst.initial)
    x = backward_sample_mother(envs, inst.initial, n, stream(inst.seed, 30), size=R, series=series)
    m_exact, c_exact = backward_moments(envs, inst.initial, n, series=series)
    mean_x, mean_hw = mean_band(x, k_band)
    var_x, var_hw = variance_band(x, k_band)
    size = {"R": R, "n": n}
    checks = []
    for c in range(inst.d):
        co = f" coord {c}" if inst.d > 1 else ""
        checks.append(Check.at_most(f"thm2{tag}: |mean - exact|{co} / ({k_band:g} stderr)",
                                    abs(mean_x[c] - m_exact[c]) / mean_hw[c], 1.0, sample_sizes=size))
        checks.append(Check.at_most(f"thm2{tag}: |var - exact|{co} / ({k_band:g} stderr)",
                                    abs(var_x[c] - c_exact[c, c]) / var_hw[c], 1.0, sample_sizes=size))
    H = max(n, n_limit)
    mu, m = envs.mixture_moments()
    active = envs.k[1:] > 0
    xi_rows = np.where(active, envs.xi[1:], 0.0)
    lam = asy.thm2_drift(regime.alpha, xi_rows, np.nan_to_num(mu[1:]), H)
    cov = asy.thm2_cov(regime.alpha, xi_rows, np.nan_to_num(m[1:]), H)
    nu_lim, _ = asy.nu_n(series, mu, n_limit)
    scale = max(float(np.abs(lam).max()), 1e-12)
    checks.append(Check.at_most(f"thm2{tag}: max |nu_n - lambda| / |lambda| at n={n_limit}",
                                np.abs(nu_lim - lam).max() / scale, drift_tol,
                                detail=f"lambda={np.round(lam, 6).tolist()}, nu_n={np.round(nu_lim, 6).tolist()}"))
    _, raw = asy.nu_n(series, mu, n)
    z = (x - raw) / math.sqrt(math.log(n))
    checks.extend(normality_check(z, cov, cov_tol=cov_tol, label=f"thm2{tag} normality n={n}").checks)
    return checks


def _exponential(inst: Instance) -> Exponential:
    if not isinstance(inst.regime, Exponential):
        raise RegimeMismatchError("the linear-drift limit needs an exponential regime")
    if not inst.regime.tau.mean() > 0:
        raise RegimeMismatchError("the linear-drift limit needs a positive mean of tau")
    return inst.regime


def thm3_normality(inst: Instance, n: int, R: int, cov_tol: float = 0.05, K: int = 10_000,
                   tag: str = "") -> list[Check]:
    regime = _exponential(inst)
    envs = inst.environment(n)
    series = scalar_series(envs, inst.initial)
    mu, _ = envs.mixture_moments()
    kappa = asy.kappa_n(series, mu, n)
    cov = asy.thm3_cov(regime, inst.displacement, K=K, seed=inst.seed, offspring=inst.offspring).value
    x = simulate_replicates(envs, inst.initial, n, R, stream(inst.seed, 40)).mother_location(n)
    return normality_check((x - kappa) / math.sqrt(n), cov, cov_tol=cov_tol,
                           label=f"thm3{tag} normality n={n}").checks


def thm3_drift_check(inst: Instance, n: int, R: int, tol: float = 0.02, K: int = 10_000,
                     tag: str = "") -> list[Check]:
    regime = _exponential(inst)
    envs = inst.environment(n, salt=1)
    lam = asy.thm3_drift(regime, inst.displacement, K=K, seed=inst.seed, offspring=inst.offspring).value
    x = simulate_replicates(envs, inst.initial, n, R, stream(inst.seed, 41)).mother_location(n)
    err = np.abs(x.mean(axis=0) / n - lam).max()
    return [Check.at_most(f"thm3{tag}: max |mean(X*_n)/n - lambda| (n={n})", err, tol, sample_sizes={"R": R},
                          detail=f"lambda={np.round(lam, 6).tolist()}")]


def thm3_segment(inst: Instance, n: int, R: int, tol: float = 0.05, K: int = 10_000, tag: str = "") -> list[Check]:
    """Projection of the resource measure M_n(. n) on the drift direction vs the cdf G along the segment."""
    regime = _exponential(inst)
    lam = asy.thm3_drift(regime, inst.displacement, K=K, seed=inst.seed, offspring=inst.offspring).value
    norm = float(np.linalg.norm(lam))
    if norm == 0:
        raise RegimeMismatchError("zero drift: the segment degenerates to a point")
    envs = inst.environment(n, salt=2)
    series = scalar_series(envs, inst.initial)
    batch = simulate_replicates(envs, inst.initial, n, R, stream(inst.seed, 42))
    proj = (batch.loc @ (lam / norm)).ravel() / (n * norm)
    w = np.tile(batch.u, R)

    def G(v):
        return np.where(v < 0, 0.0, asy.g_estimate(series.u, n, np.clip(v, 0.0, 1.0)))

    D = ks_1d(proj, G, weights=w)
    return [Check.at_most(f"thm3{tag} segment: KS(projected M_n(. n), G) (n={n})", D, tol,
                          sample_sizes={"replicates": R})]


# ---------------------------------------------------------------------------
# Genealogy and scalar sequences


def genealogy_checks(inst: Instance, n: int, r: int, R: int, k_band: float = 4.0) -> list[Check]:
    """Mother count of the first root, ancestry frequency of (r, 1) and ancestor counts vs closed forms."""
    if not 0 <= r < n:
        raise ValueError("need 0 <= r < n")
    envs = inst.environment(n)
    series = scalar_series(envs, inst.initial)
    batch = simulate_replicates(envs, inst.initial, n, R, stream(inst.seed, 50))
    size = {"R": R}
    checks = []

    counts = (batch.step_mother[:, :n] == 0).sum(axis=1).astype(float)
    target = mother_count_expectation(series, 0, n, share=point_share(envs, inst.initial, 0, 1))
    est, hw = mean_band(counts, k_band)
    checks.append(Check.at_most(f"genealogy: |mean mother count of root 1 - closed form| / band (n={n})",
                                abs(est[0] - target) / max(hw[0], 1e-12), 1.0, sample_sizes=size,
                                detail=f"closed form {target:.12g}, estimate {est[0]:.6g}"))

    k_r = inst.initial.k if r == 0 else int(envs.k[r])
    if k_r and envs.k[n]:
        p = ancestry_probability(series, r, share=point_share(envs, inst.initial, r, 1))
        hit = batch.has_ancestor(batch.flat_index(n, 1), batch.flat_index(r, 1)).astype(float)
        est, hw = mean_band(hit, k_band)
        checks.append(Check.at_most(f"genealogy: |ancestry frequency of ({r},1) - w_r1/W_r| / band (n={n})",
                                    abs(est[0] - p) / max(hw[0], 1e-12), 1.0, sample_sizes=size,
                                    detail=f"closed form {p:.12g}, estimate {est[0]:.6g}"))
        total = np.zeros(R)
        for j in range(1, int(envs.k[n]) + 1):
            fp = batch.flat_index(n, j)
            hit_any = np.zeros(R, dtype=bool)
            for i in range(1, k_r + 1):
                hit_any |= batch.has_ancestor(fp, batch.flat_index(r, i))
            total += hit_any
        target = ancestry_mean(series, envs, r, n)
        est, hw = mean_band(total, k_band)
        checks.append(Check.at_most(f"genealogy: |mean count with a generation-{r} ancestor - k_n pi_r| / band (n={n})",
                                    abs(est[0] - target) / max(hw[0], 1e-12), 1.0, sample_sizes=size,
                                    detail=f"closed form {target:.12g}, estimate {est[0]:.6g}"))
    return checks


def scalar_checks(alphas=(-0.5, 0.0, 1.0), n: int = 10**6, tol: float = 0.01, stolz_tol: float = 0.05,
                  seed: int = DEFAULT_SEED) -> list[Check]:
    """n pi_n -> alpha + 1, and the logarithmic average of x_k = 1."""
    checks = []
    for alpha in alphas:
        envs = materialize(PowerLaw(1.0, alpha), n, seed=seed, d=1, displacement=gaussian_spec())
        val = asy.beta_diagnostic(scalar_series(envs, origin()), n)
        checks.append(Check.at_most(f"scalar: |n pi_n - (alpha+1)|, alpha={alpha:g}, n={n}",
                                    abs(val - (alpha + 1.0)), tol, detail=f"n pi_n = {val:.8g}"))
    st = asy.stolz_diagnostic(1.0, n)
    checks.append(Check.at_most(f"scalar: |(1/ln n) sum_k 1/k - 1|, n={n}", abs(st - 1.0), stolz_tol))
    return checks


# ---------------------------------------------------------------------------
# Performance


def time_simulation(n_steps: int = 10**6, d: int = 2, seed: int = DEFAULT_SEED) -> tuple[float, float]:
    """(environment build seconds, simulation seconds) for k = 1 Gaussian steps."""
    disp = gaussian_spec(0.0, 1.0, d)
    t0 = time.perf_counter()
    envs = materialize(PowerLaw(1.0, 0.0), n_steps, seed=seed, d=d, displacement=disp)
    t1 = time.perf_counter()
    state = init(origin(d), seed=seed)
    run(state, envs, n_steps)
    return t1 - t0, time.perf_counter() - t1


def sampler_costs(sizes=(10**3, 10**4, 10**5, 10**6, 10**7), draws: int = 10**6, seed: int = DEFAULT_SEED):
    """Rows (N, measured tree reads per draw, ns per draw) for the sampler over N random weights."""
    rng = stream(seed, 60)
    rows = []
    for N in sizes:
        idx = PrefixWeightIndex(N)
        idx.extend(rng.random(N))
        idx.sample_many(rng, 1000)
        t0 = time.perf_counter()
        idx.sample_many(rng, draws)
        ns = (time.perf_counter() - t0) / draws * 1e9
        rows.append((int(N), float(mean_probes(idx.tree, idx.count, rng.random(10**4))), ns))
    return rows


def performance_checks(n_steps: int = 10**6, sizes=(10**3, 10**4, 10**5, 10**6, 10**7), draws: int = 10**6,
                       seed: int = DEFAULT_SEED, max_seconds: float = 10.0, max_slope: float = 0.4):
    # compile and warm the kernels so that timings exclude compilation
    time_simulation(1000, seed=seed)
    build, sim = time_simulation(n_steps, seed=seed)
    rows = sampler_costs(sizes, draws, seed)
    N = np.array([r[0] for r in rows], dtype=float)
    reads = np.array([r[1] for r in rows])
    ns = np.array([r[2] for r in rows])
    slope = float(np.polyfit(np.log(N), np.log(ns), 1)[0])
    detail = ", ".join(f"N={int(a)}: {b:.0f} ns, {p:.1f} reads" for a, p, b in zip(N, reads, ns))
    checks = [
        Check.at_most(f"perf: simulation seconds for {n_steps} steps (k=1, d=2)", sim, max_seconds,
                      detail=f"environment build {build:.2f} s"),
        Check.at_most("perf: max over N of tree reads per draw / log2 N", float(np.max(reads / np.log2(N))), 1.1,
                      detail=detail),
        Check.at_most("perf: log-log slope of ns per draw against N", slope, max_slope, detail=detail),
    ]
    return checks, rows


# ---------------------------------------------------------------------------
# The acceptance instances


def acceptance_oracle(runs: int = 10**6, seed: int = DEFAULT_SEED) -> list[Check]:
    inst = Instance(PowerLaw(1.0, 0.0), coin_spec(), origin(), seed=seed)
    checks, _ = oracle_triple(inst, 5, runs, t=np.linspace(-3.0, 3.0, 25))
    two = exact_enumerate(inst.environment(2), inst.initial, 2, 1)
    want = {(-2,): 0.125, (-1,): 0.25, (0,): 0.25, (1,): 0.25, (2,): 0.125}
    exact = two.scale == 1 and two.probs == want
    checks.append(Check("oracle: enumerated n=2 law is (1/8, 1/4, 1/4, 1/4, 1/8) exactly",
                        0.0 if exact else 1.0, 0.0, exact, detail=str(sorted(two.probs.items()))))
    return checks


def acceptance_identity(N: int = 10**5, n_values=(10, 50), seed: int = DEFAULT_SEED) -> list[Check]:
    regimes = {"power-law xi=1 alpha=0": PowerLaw(1.0, 0.0), "exponential tau=ln2": Exponential(1.0, LN2)}
    checks = []
    for i, (name, regime) in enumerate(regimes.items()):
        for n in n_values:
            inst = Instance(regime, gaussian_spec(1.0, 1.0), origin(), seed=seed + 100 * i + n)
            checks.extend(identity_check(inst, n, N, label=f", {name}"))
    return checks


def acceptance_thm1(n: int = 200, R: int = 200, seed: int = DEFAULT_SEED) -> list[Check]:
    inst = Instance(Exponential(1.0, -LN2), gaussian_spec(0.0, 1.0), origin(), seed=seed)
    return thm1_check(inst, n, R)


def acceptance_thm2(alphas=(0.0, 1.0), n: int = 10**5, R: int = 500, n_limit: int = 10**6,
                    seed: int = DEFAULT_SEED) -> list[Check]:
    checks = []
    for i, alpha in enumerate(alphas):
        inst = Instance(PowerLaw(1.0, alpha), gaussian_spec(1.0, 1.0), origin(), seed=seed + i)
        checks.extend(thm2_check(inst, n, R, n_limit, tag=f" alpha={alpha:g}"))
    return checks


def acceptance_thm3(n: int = 1000, R: int = 1000, n_segment: int = 2000, R_segment: int = 100,
                    seed: int = DEFAULT_SEED) -> list[Check]:
    regime = Exponential(1.0, LN2)
    centred = Instance(regime, gaussian_spec(0.0, 1.0), origin(), seed=seed)
    drifting = Instance(regime, gaussian_spec(1.0, 1.0), origin(), seed=seed + 1)
    return (thm3_normality(centred, n, R, cov_tol=0.05, tag=" mu=0")
            + thm3_drift_check(drifting, n, R, tol=0.02, tag=" mu=1")
            + thm3_segment(drifting, n_segment, R_segment, tol=0.05, tag=" mu=1"))


def acceptance_genealogy(R: int = 10**4, seed: int = DEFAULT_SEED) -> list[Check]:
    single = Instance(PowerLaw(1.0, 0.0), gaussian_spec(), origin(), seed=seed)
    twins = Instance(PowerLaw(1.0, 0.0), gaussian_spec(), origin(), offspring=2, seed=seed + 1)
    first = genealogy_checks(single, 3, 1, R)[:1]
    rest = genealogy_checks(twins, 5, 2, R)[1:]
    return first + rest


def acceptance_scalar(n: int = 10**6, seed: int = DEFAULT_SEED) -> list[Check]:
    return scalar_checks(n=n, seed=seed)


def acceptance_performance(seed: int = DEFAULT_SEED) -> list[Check]:
    return performance_checks(seed=seed)[0]


ACCEPTANCE = {
    "AC1": ("exact oracle triple", acceptance_oracle),
    "AC2": ("backward/forward identity", acceptance_identity),
    "AC3": ("summable weights limit", acceptance_thm1),
    "AC4": ("power-law weights limit", acceptance_thm2),
    "AC5": ("exponential weights limit", acceptance_thm3),
    "AC6": ("genealogy identities", acceptance_genealogy),
    "AC7": ("scalar asymptotics", acceptance_scalar),
    "AC8": ("performance", acceptance_performance),
}
