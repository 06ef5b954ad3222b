"""Limit constants for the three weight regimes, and the summability diagnostics behind them.

Summable weights (W_inf < inf) give a non-degenerate limit for the mother
location.  Power-law weights w_n = xi_n n^alpha L(n) give a drift of order
ln n with Gaussian fluctuations of order sqrt(ln n); exponential weights
w_n = xi_n exp(S_n) give linear drift and sqrt(n) fluctuations, and the
resource measure rescaled by n concentrates on a segment.

Drift and covariance limits are reported next to the exact finite-n values
(nu_n, kappa_n) because the power-law case converges at rate 1/ln n.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .env import DisplacementSpec, Exponential, ScalarSeries, materialize

ZETA_TOL = 1e-12
ZETA_MAX_M = 10_000


class ZeroMassError(ValueError):
    """The averaging weights sum to zero over the horizon."""


class RegimeViolationError(ValueError):
    """The environment is outside the regime a limit theorem requires."""


class ZetaTruncationError(ValueError):
    """The truncated zeta sum cannot meet the requested tail tolerance."""


# ---------------------------------------------------------------------------
# Cesaro / b-summability


def cesaro_mean(seq, n: int):
    """(1/n) sum_{i<n} a_i; vector- or matrix-valued terms are averaged entrywise."""
    a = np.asarray(seq, dtype=float)[:n]
    if a.shape[0] < n or n < 1:
        raise ValueError(f"need at least n={n} terms")
    return a.mean(axis=0)


def b_summable_estimate(a_seq, b_seq, n: int):
    """sum_{i<n} b_i a_i / sum_{i<n} b_i."""
    a = np.asarray(a_seq, dtype=float)[:n]
    b = np.asarray(b_seq, dtype=float)[:n]
    if a.shape[0] < n or b.shape[0] < n:
        raise ValueError(f"need at least n={n} terms")
    mass = b.sum()
    if not mass > 0:
        raise ZeroMassError("b has no positive mass over the horizon")
    return np.tensordot(b, a, axes=(0, 0)) / mass


def stolz_diagnostic(x, n: int) -> float:
    """(1/ln n) sum_{k=1}^n x_k / k, which tends to lim x_k when that limit exists."""
    if n < 2:
        raise ValueError("n must be at least 2")
    xs = np.asarray(x, dtype=float)
    if xs.ndim == 0:
        xs = np.full(n, float(xs))
    k = np.arange(1, n + 1)
    return float(np.sum(xs[:n] / k) / math.log(n))


def beta_diagnostic(series: ScalarSeries, n: int) -> float:
    """n * pi_n, which tends to alpha + 1 under power-law weights."""
    return float(n * series.pi[n])


# ---------------------------------------------------------------------------
# Sequence realization helpers


def _realize(seq, horizon: int, seed: int, shape_tail: tuple) -> np.ndarray:
    """Turn a generator, a constant or a finite cycle into ``horizon`` rows of shape ``shape_tail``."""
    if hasattr(seq, "sample"):
        vals = np.asarray(seq.sample(horizon, np.random.default_rng(seed)), dtype=float)
        return vals.reshape((horizon,) + (1,) * len(shape_tail)) * np.ones(shape_tail) if shape_tail else vals
    arr = np.asarray(seq, dtype=float)
    if arr.ndim == len(shape_tail):
        return np.broadcast_to(arr, (horizon,) + arr.shape).copy()
    reps = -(-horizon // arr.shape[0])
    return np.tile(arr, (reps,) + (1,) * (arr.ndim - 1))[:horizon]


def _as_rows(seq, horizon: int, seed: int, kind: str) -> np.ndarray:
    """xi -> (H,), mu -> (H, d), m -> (H, d, d)."""
    if kind == "xi":
        return _realize(seq, horizon, seed, ())
    if hasattr(seq, "sample"):
        base = _realize(seq, horizon, seed, ())
        return base.reshape(horizon, 1) if kind == "mu" else base.reshape(horizon, 1, 1)
    arr = np.asarray(seq, dtype=float)
    if kind == "mu":
        if arr.ndim == 0:
            arr = arr.reshape(1)
        return _realize(arr, horizon, seed, (arr.shape[-1],))
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    return _realize(arr, horizon, seed, arr.shape[-2:])


# ---------------------------------------------------------------------------
# Power-law weights


def thm2_drift(alpha: float, xi_seq, mu_seq, horizon: int = 100_000, seed: int = 0) -> np.ndarray:
    """lambda = (alpha + 1) * C(xi mu) / C(xi), C the Cesaro mean over ``horizon`` terms.

    ``xi_seq`` is a generator, a constant or a finite cycle of scalars;
    ``mu_seq`` a generator (d = 1), a constant vector or a ``(L, d)`` cycle.
    """
    xi = _as_rows(xi_seq, horizon, seed, "xi")
    mu = _as_rows(mu_seq, horizon, seed + 1, "mu")
    den = xi.mean()
    if not den > 0:
        raise ZeroMassError("mean of xi vanishes")
    return (alpha + 1.0) * (xi[:, None] * mu).mean(axis=0) / den


def thm2_cov(alpha: float, xi_seq, m_seq, horizon: int = 100_000, seed: int = 0) -> np.ndarray:
    """(alpha + 1) * C(xi m) / C(xi) with m the second-moment matrices E[Y^T Y]."""
    xi = _as_rows(xi_seq, horizon, seed, "xi")
    m = _as_rows(m_seq, horizon, seed + 2, "m")
    den = xi.mean()
    if not den > 0:
        raise ZeroMassError("mean of xi vanishes")
    cov = (alpha + 1.0) * (xi[:, None, None] * m).mean(axis=0) / den
    return 0.5 * (cov + cov.T)


def _pi_mu_cumsum(series: ScalarSeries, mu: np.ndarray, n: int) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    if mu.ndim == 1:
        mu = mu[:, None]
    if mu.shape[0] < n + 1 or series.pi.shape[0] < n + 1:
        raise IndexError(f"series shorter than n={n}")
    terms = series.pi[1 : n + 1, None] * np.nan_to_num(mu[1 : n + 1])
    return np.cumsum(terms, axis=0)


def nu_n(series: ScalarSeries, mu_series, n: int) -> tuple[np.ndarray, np.ndarray]:
    """(nu_n, raw) with raw = sum_{r=1}^{n-1} pi_r mu_r and nu_n = raw / ln n."""
    if n < 2:
        raise ValueError("n must be at least 2")
    raw = _pi_mu_cumsum(series, mu_series, n - 1)[-1]
    return raw / math.log(n), raw


def kappa_series(series: ScalarSeries, mu_series, n: int) -> np.ndarray:
    """kappa_1..kappa_n as rows; row r-1 is sum_{i=1}^r pi_i mu_i."""
    return _pi_mu_cumsum(series, mu_series, n)


def kappa_n(series: ScalarSeries, mu_series, n: int) -> np.ndarray:
    """kappa_n = sum_{r=1}^n pi_r mu_r."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return kappa_series(series, mu_series, n)[-1]


# ---------------------------------------------------------------------------
# Exponential weights


def zeta_truncation(a: float, xi_max: float, tol: float = ZETA_TOL) -> int:
    """Smallest M with xi_max e^{-aM} / (1 - e^{-a}) < tol, capped at ZETA_MAX_M."""
    if not a > 0:
        raise RegimeViolationError(f"mean of tau must be positive, got {a}")
    if xi_max <= 0:
        return 0
    M = math.ceil(math.log(xi_max / (tol * -math.expm1(-a))) / a)
    return int(min(max(M, 0), ZETA_MAX_M))


def zeta_tilde(xi_vals, tau_vals, n: int, M: Optional[int] = None,
               tol: float = ZETA_TOL) -> tuple[float, float]:
    """sum_{m=0}^M xi_{n-m} exp(-S_{n,m}) with S_{n,m} = tau_{n-m+1} + ... + tau_n.

    ``xi_vals[i]`` and ``tau_vals[i]`` hold xi_i and tau_i.  The tail past M
    is bounded geometrically using the empirical mean of tau over the
    window; a bound above ``tol`` raises.
    """
    xi = np.asarray(xi_vals, dtype=float)
    tau = np.asarray(tau_vals, dtype=float)
    lo = max(1, n - (M if M is not None else ZETA_MAX_M) + 1)
    a = float(tau[lo : n + 1].mean())
    if not a > 0:
        raise RegimeViolationError(f"mean of tau over the window is {a}, not positive")
    xi_max = float(xi[max(0, lo - 1) : n + 1].max())
    if M is None:
        M = zeta_truncation(a, xi_max, tol)
    if M > n:
        raise ZetaTruncationError(f"need M={M} past values, only {n} available before index {n}")
    m = np.arange(M + 1)
    S = np.concatenate([[0.0], np.cumsum(tau[n - m[1:] + 1])])
    value = float(np.sum(xi[n - m] * np.exp(-S)))
    bound = xi_max * math.exp(-a * M) / -math.expm1(-a)
    if bound > tol:
        raise ZetaTruncationError(f"tail bound {bound:.3g} exceeds tol {tol:.3g}; increase M")
    return value, bound


@njit(cache=True)
def _zeta_recursion(xi, tau):
    # zeta_n = xi_n + exp(-tau_n) zeta_{n-1}
    out = np.empty(xi.shape[0])
    z = 0.0
    for i in range(xi.shape[0]):
        z = xi[i] + math.exp(-tau[i]) * z if i > 0 else xi[i]
        out[i] = z
    return out


def zeta_series(xi_vals, tau_vals) -> np.ndarray:
    """zeta_n for every index via zeta_n = xi_n + e^{-tau_n} zeta_{n-1} (started at zeta_0 = xi_0)."""
    return _zeta_recursion(np.asarray(xi_vals, dtype=float), np.asarray(tau_vals, dtype=float))


@dataclass(frozen=True)
class ErgodicEstimate:
    value: np.ndarray
    stderr: np.ndarray
    samples: int


def _batch_means(x: np.ndarray, batches: int = 50) -> tuple[np.ndarray, np.ndarray]:
    K = x.shape[0]
    b = min(batches, K)
    size = K // b
    means = x[: b * size].reshape((b, size) + x.shape[1:]).mean(axis=1)
    return x.mean(axis=0), means.std(axis=0, ddof=1) / math.sqrt(b)


def _stationary_window(regime: Exponential, displacement: DisplacementSpec, K: int, seed: int,
                       offspring=1, burn: Optional[int] = None):
    if not isinstance(regime, Exponential):
        raise RegimeViolationError("exponential-weight limits need an Exponential regime")
    a = regime.tau.mean()
    xi_max = float(np.max(regime.xi.values()))
    if burn is None:
        burn = zeta_truncation(a, xi_max)
    envs = materialize(regime, burn + K, seed=seed, d=displacement.d, displacement=displacement,
                       offspring=offspring)
    active = envs.k > 0
    xi = np.where(active, envs.xi, 0.0)[1:]
    zeta = zeta_series(xi, envs.tau[1:])
    mu, m = envs.mixture_moments()
    sl = slice(burn, burn + K)
    p = np.divide(xi[sl], zeta[sl], out=np.zeros(K), where=zeta[sl] > 0)
    return p, np.nan_to_num(mu[1:][sl]), np.nan_to_num(m[1:][sl])


def thm3_drift(regime: Exponential, displacement: DisplacementSpec, K: int = 100_000, seed: int = 0,
               offspring=1) -> ErgodicEstimate:
    """lambda = < xi mu / zeta > as an ergodic average over K stationary steps."""
    p, mu, _ = _stationary_window(regime, displacement, K, seed, offspring)
    val, se = _batch_means(p[:, None] * mu)
    return ErgodicEstimate(val, se, K)


def thm3_cov(regime: Exponential, displacement: DisplacementSpec, K: int = 100_000, seed: int = 0,
             offspring=1) -> ErgodicEstimate:
    """< (xi/zeta) m - (xi/zeta)^2 mu^T mu > as an ergodic average over K stationary steps."""
    p, mu, m = _stationary_window(regime, displacement, K, seed, offspring)
    terms = p[:, None, None] * m - (p**2)[:, None, None] * np.einsum("ki,kj->kij", mu, mu)
    val, se = _batch_means(terms)
    return ErgodicEstimate(0.5 * (val + val.T), se, K)


def g_estimate(u_series, n: int, v_grid) -> np.ndarray:
    """U_{floor(nv)} / U_n over the grid, with U_k = u_0 + ... + u_k."""
    u = np.asarray(u_series, dtype=float)
    if u.shape[0] < n + 1:
        raise IndexError(f"need u_0..u_{n}")
    U = np.cumsum(u[: n + 1])
    if not U[n] > 0:
        raise ValueError("U_n must be positive")
    v = np.clip(np.asarray(v_grid, dtype=float), 0.0, 1.0)
    return U[np.floor(n * v).astype(np.int64)] / U[n]


# ---------------------------------------------------------------------------
# Predictions


@dataclass
class RegimePrediction:
    regime: str
    drift: Optional[np.ndarray]
    covariance: Optional[np.ndarray]
    centering: Optional[str] = None
    scaling: str = "1"
    centering_values: dict = field(default_factory=dict)
    segment: Optional[dict] = None

    def __post_init__(self):
        if self.regime not in ("Thm1", "Thm2", "Thm3"):
            raise ValueError(f"unknown regime tag {self.regime!r}")
        if self.scaling not in ("1", "sqrt(ln n)", "sqrt(n)", "n"):
            raise ValueError(f"unknown scaling {self.scaling!r}")
        if self.covariance is not None:
            c = np.atleast_2d(np.asarray(self.covariance, dtype=float))
            if not np.allclose(c, c.T, atol=1e-12) or np.linalg.eigvalsh(c).min() < -1e-10:
                raise ValueError("covariance must be symmetric PSD")
            self.covariance = c

    def to_json(self) -> str:
        def arr(x):
            return None if x is None else np.asarray(x, dtype=float).tolist()

        body = {
            "regime": self.regime,
            "drift": arr(self.drift),
            "covariance": arr(self.covariance),
            "centering": self.centering,
            "scaling": self.scaling,
            "centering_values": {str(k): arr(v) for k, v in sorted(self.centering_values.items())},
            "segment": None if self.segment is None else {k: arr(v) for k, v in self.segment.items()},
        }
        return json.dumps(body, indent=2, sort_keys=True)


def segment_measure(lam, G, v_grid) -> RegimePrediction:
    """Limit resource measure on the segment {lam s : s in [0, 1]} with cdf G along it."""
    G = np.asarray(G, dtype=float)
    if np.any(np.diff(G) < -1e-15) or G.min() < 0 or G.max() > 1 + 1e-12:
        raise ValueError("G must be a cdf on the grid")
    return RegimePrediction("Thm3", np.atleast_1d(np.asarray(lam, dtype=float)), None,
                            centering="kappa_n", scaling="n",
                            segment={"direction": lam, "v": v_grid, "G": G})


def thm2_prediction(alpha: float, xi_seq, mu_seq, m_seq, horizon: int = 100_000,
                    series: Optional[ScalarSeries] = None, mu_series=None,
                    at: Sequence[int] = ()) -> RegimePrediction:
    lam = thm2_drift(alpha, xi_seq, mu_seq, horizon)
    cov = thm2_cov(alpha, xi_seq, m_seq, horizon)
    cvals = {int(n): nu_n(series, mu_series, int(n))[1] for n in at} if series is not None else {}
    return RegimePrediction("Thm2", lam, cov, "nu_n ln n", "sqrt(ln n)", cvals)


def thm3_prediction(regime: Exponential, displacement: DisplacementSpec, K: int = 100_000, seed: int = 0,
                    series: Optional[ScalarSeries] = None, mu_series=None,
                    at: Sequence[int] = ()) -> RegimePrediction:
    lam = thm3_drift(regime, displacement, K, seed).value
    cov = thm3_cov(regime, displacement, K, seed).value
    cvals = {int(n): kappa_n(series, mu_series, int(n)) for n in at} if series is not None else {}
    return RegimePrediction("Thm3", lam, cov, "kappa_n", "sqrt(n)", cvals)
