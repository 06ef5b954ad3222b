"""Statistics that confront simulated samples with predicted laws."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtr

from .process import FiniteDiscreteDistribution

# asymptotic Kolmogorov distribution quantiles
KS_Q95 = 1.358
KS_Q999 = 1.949


@dataclass(frozen=True)
class WeightedSample:
    x: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        w = np.asarray(self.w, dtype=float)
        if w.shape != (x.shape[0],):
            raise ValueError("one weight per point is required")
        if not np.all(np.isfinite(w)) or np.any(w < 0) or not w.sum() > 0:
            raise ValueError("weights must be finite, non-negative, with positive total")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "w", w)

    @classmethod
    def unweighted(cls, x) -> "WeightedSample":
        x = np.asarray(x, dtype=float)
        return cls(x, np.ones(x.shape[0]))


def sample_moments(ws: WeightedSample) -> tuple[np.ndarray, np.ndarray]:
    """Weighted mean and covariance, both normalized by the total weight."""
    if np.count_nonzero(ws.w) < 2:
        raise ValueError("covariance needs at least two points with positive weight")
    p = ws.w / ws.w.sum()
    mean = p @ ws.x
    dev = ws.x - mean
    return mean, (dev * p[:, None]).T @ dev


def _ecdf_at(sorted_x: np.ndarray, cum: np.ndarray, v: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(sorted_x, v, side="right")
    return np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)


def ks_1d(sample, cdf: Callable[[np.ndarray], np.ndarray], weights=None) -> float:
    """sup_x |F_n(x) - F(x)| for a (weighted) sample against a continuous cdf."""
    x = np.asarray(sample, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empty sample")
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float).ravel()
    order = np.argsort(x, kind="stable")
    xs, ws = x[order], w[order]
    vals, starts = np.unique(xs, return_index=True)
    mass = np.add.reduceat(ws, starts) / ws.sum()
    upper = np.cumsum(mass)
    lower = upper - mass
    F = np.asarray(cdf(vals), dtype=float)
    return float(max(np.max(upper - F), np.max(F - lower), 0.0))


def two_sample_ks(a, b) -> float:
    """sup_x |F_a(x) - F_b(x)|, evaluated at every jump of either empirical cdf."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample")
    pooled = np.concatenate([a, b])
    fa = np.searchsorted(a, pooled, side="right") / a.size
    fb = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_threshold(n: int, m: Optional[int] = None, quantile: float = KS_Q95, factor: float = 1.0) -> float:
    """factor * quantile * sqrt(1/n) (one sample) or sqrt(1/n + 1/m) (two samples)."""
    eff = 1.0 / n if m is None else 1.0 / n + 1.0 / m
    return factor * quantile * math.sqrt(eff)


def tv_distance(p: FiniteDiscreteDistribution, q: FiniteDiscreteDistribution) -> float:
    """Half the l1 distance over the union of supports."""
    if p.scale != q.scale:
        raise ValueError(f"lattice mismatch: scales {p.scale} and {q.scale}")
    keys = set(p.probs) | set(q.probs)
    return 0.5 * math.fsum(abs(p.probs.get(k, 0.0) - q.probs.get(k, 0.0)) for k in keys)


@dataclass
class Check:
    """One pass/fail comparison of a statistic with its threshold."""

    name: str
    value: float
    threshold: float
    passed: bool
    sample_sizes: dict = field(default_factory=dict)
    detail: str = ""

    @classmethod
    def at_most(cls, name, value, threshold, **kw) -> "Check":
        return cls(name, float(value), float(threshold), bool(value <= threshold), **kw)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.detail})" if self.detail else ""
        return f"[{flag}] {self.name}: {self.value:.6g} <= {self.threshold:.6g}{extra}"


def report_json(checks: list[Check], **meta) -> str:
    body = {
        "checks": [asdict(c) for c in checks],
        "passed": all(c.passed for c in checks),
    }
    body.update(meta)
    return json.dumps(body, indent=2, sort_keys=True, default=float)


@dataclass
class NormalityReport:
    ks: list[float]
    ks_threshold: float
    cov_rel_error: float
    cov_tol: float
    sample_cov: np.ndarray
    checks: list[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def normality_check(samples, target_cov, ks_factor: float = 1.5, cov_tol: float = 0.15,
                    label: str = "normality") -> NormalityReport:
    """Compare samples with N(0, target_cov).

    Each coordinate is tested by KS against the zero-mean normal with the
    target marginal variance (threshold ``ks_factor`` times the 95%
    asymptotic band), and the sample covariance by its relative Frobenius
    distance to the target.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    n, d = x.shape
    if n < 100:
        raise ValueError("normality_check needs at least 100 samples")
    T = np.atleast_2d(np.asarray(target_cov, dtype=float))
    if T.shape != (d, d) or not np.allclose(T, T.T) or np.linalg.eigvalsh(T).min() < -1e-10:
        raise ValueError("target covariance must be a symmetric PSD d x d matrix")
    S = np.atleast_2d(np.cov(x, rowvar=False))
    thr = ks_threshold(n, factor=ks_factor)
    ks_vals, checks = [], []
    for i in range(d):
        var = T[i, i]
        if var <= 0:
            if np.ptp(x[:, i]) > 0:
                raise ValueError(f"target variance of coordinate {i} is zero but the data vary")
            D = 0.0 if np.all(x[:, i] == 0) else 1.0
        else:
            sd = math.sqrt(var)
            D = ks_1d(x[:, i], lambda v, sd=sd: ndtr(v / sd))
        ks_vals.append(D)
        checks.append(Check.at_most(f"{label}: KS coordinate {i}", D, thr, sample_sizes={"n": n}))
    rel = float(np.linalg.norm(S - T) / np.linalg.norm(T)) if np.linalg.norm(T) > 0 else float(np.linalg.norm(S))
    checks.append(Check.at_most(f"{label}: covariance relative error", rel, cov_tol, sample_sizes={"n": n}))
    return NormalityReport(ks_vals, thr, rel, cov_tol, S, checks)


def mean_band(x, k: float = 4.0) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and k standard errors, per coordinate."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    return x.mean(axis=0), k * x.std(axis=0, ddof=1) / math.sqrt(x.shape[0])


def variance_band(x, k: float = 4.0) -> tuple[np.ndarray, np.ndarray]:
    """Sample variance and k standard errors of it (fourth-moment estimate), per coordinate."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    n = x.shape[0]
    dev = x - x.mean(axis=0)
    var = (dev**2).sum(axis=0) / (n - 1)
    m4 = (dev**4).mean(axis=0)
    se = np.sqrt(np.maximum(m4 - var**2, 0.0) / n)
    return var, k * se
