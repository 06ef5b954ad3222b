"""Characteristic functions of point locations, mother locations and mean measures.

The mother of step n+1 has ch.f.

    Phi_n(t) = prod_{r=0}^n (1 + pi_r (f_r(t) - 1)),

with f_0 the ch.f. of the w-weighted mixture of initial locations, and a
point of generation n >= 1 has ch.f. f_{n,j}(t) Phi_{n-1}(t).  Products are
taken factor by factor in complex arithmetic; when a modulus drops below
1e-150 it is renormalized and the exponent carried separately.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .displacement import as_t_grid
from .env import EnvironmentSequence, Initial, ScalarSeries, scalar_series


class NonSummableError(ValueError):
    """The selection fractions pi_r do not appear summable (W_infinity = infinity)."""


class NotStabilizedError(ValueError):
    """The u-weighted running average of f_{r,j}(t) has not settled at this horizon."""


@dataclass(frozen=True)
class ChfGrid:
    t: np.ndarray
    values: np.ndarray
    provenance: str

    def __post_init__(self):
        if self.provenance not in ("analytic", "empirical"):
            raise ValueError("provenance must be 'analytic' or 'empirical'")


def default_grid(d: int, per_axis: int = 25, lim: float = 3.0) -> np.ndarray:
    """Evaluation points: ``per_axis`` values in [-lim, lim] on each axis (product grid)."""
    axis = np.linspace(-lim, lim, per_axis)
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


@njit(cache=True)
def _product(pi, labels, F, start, stop):
    m = F.shape[1]
    out = np.ones(m, dtype=np.complex128)
    logmag = np.zeros(m)
    for r in range(start, stop):
        lab = labels[r]
        if lab < 0 or pi[r] == 0.0:
            continue
        for i in range(m):
            out[i] *= 1.0 + pi[r] * (F[lab, i] - 1.0)
            a = abs(out[i])
            if 0.0 < a < 1e-150:
                out[i] /= a
                logmag[i] += math.log(a)
    return out, logmag


def _finish(out, logmag):
    return out * np.exp(logmag)


def _factor_tables(envs: EnvironmentSequence, initial: Initial, n: int, tt: np.ndarray):
    """Per-step mixture labels (label 0 is generation 0) and the ch.f. table F[label, t]."""
    labels = envs.mixture_keys()[: n + 1].copy()
    uniq = np.unique(labels[labels >= 0])
    remap = {int(L): i + 1 for i, L in enumerate(uniq)}
    F = np.empty((len(uniq) + 1, tt.shape[0]), dtype=complex)
    F[0] = initial.mixture().chf(tt)
    for L, i in remap.items():
        step = int(np.flatnonzero(labels == L)[0])
        F[i] = envs.mixture(step).chf(tt)
    out = np.array([remap.get(int(L), -1) for L in labels], dtype=np.int64) if labels.size else labels
    out[0] = 0
    return out, F


def _series(envs, initial, n, series):
    if n > len(envs):
        raise IndexError(f"environment has {len(envs)} steps, need {n}")
    if series is None:
        series = scalar_series(envs.truncate(n), initial)
    return series


def phi_product(envs: EnvironmentSequence, initial: Initial, n: int, t,
                series: Optional[ScalarSeries] = None):
    """Phi_n(t): ch.f. of the mother selected at step n+1."""
    tt, single = as_t_grid(t, initial.d)
    series = _series(envs, initial, n, series)
    labels, F = _factor_tables(envs, initial, n, tt)
    vals = _finish(*_product(series.pi[: n + 1], labels, F, 0, n + 1))
    return complex(vals[0]) if single else vals


def phi_point(envs: EnvironmentSequence, initial: Initial, n: int, j: int, t,
              series: Optional[ScalarSeries] = None):
    """phi_{n,j}(t) = f_{n,j}(t) Phi_{n-1}(t); generation 0 points are deterministic."""
    tt, single = as_t_grid(t, initial.d)
    if n == 0:
        if not 1 <= j <= initial.k:
            raise IndexError(f"generation 0 has {initial.k} points")
        vals = np.exp(1j * (tt @ initial.x[j - 1]))
    else:
        if not 1 <= n <= len(envs):
            raise IndexError(f"generation {n} outside the environment")
        k = int(envs.k[n])
        if not 1 <= j <= k:
            raise IndexError(f"generation {n} has {k} points")
        marg = envs.joints[envs.joint_id[n]].marginals[j - 1]
        vals = marg.chf(tt) * phi_product(envs, initial, n - 1, tt, series=series)
    return complex(vals[0]) if single else vals


def _resource_tables(envs: EnvironmentSequence, n: int, tt: np.ndarray):
    """Labels and table UF[label, t] = sum_j u_{r,j} f_{r,j}(t) per step r = 1..n."""
    labels = np.full(n + 1, -1, dtype=np.int64)
    rows: list = []
    seen: dict = {}
    for r in range(1, n + 1):
        u = envs.step_resources(r)
        if envs.k[r] == 0 or not u.sum() > 0:
            continue
        jid = int(envs.joint_id[r])
        key = (jid, u.tobytes())
        if key not in seen:
            seen[key] = len(rows)
            marg = envs.joints[jid].marginals
            rows.append(sum(uj * law.chf(tt) for uj, law in zip(u, marg) if uj > 0))
        labels[r] = seen[key]
    UF = np.array(rows, dtype=complex).reshape(len(rows), tt.shape[0])
    return labels, UF


@njit(cache=True)
def _mean_measure(pi, labels, F, ulabels, UF, u0f):
    m = F.shape[1]
    acc = u0f.copy()
    prod = np.ones(m, dtype=np.complex128)
    for r in range(1, pi.shape[0]):
        lab = labels[r - 1]
        if lab >= 0 and pi[r - 1] != 0.0:
            for i in range(m):
                prod[i] *= 1.0 + pi[r - 1] * (F[lab, i] - 1.0)
        ul = ulabels[r]
        if ul >= 0:
            for i in range(m):
                acc[i] += UF[ul, i] * prod[i]
    return acc


def mean_measure_chf(envs: EnvironmentSequence, initial: Initial, n: int, t,
                     series: Optional[ScalarSeries] = None):
    """Ch.f. of M_n: (1/U_n) sum_{r,j} u_{r,j} phi_{r,j}(t)."""
    tt, single = as_t_grid(t, initial.d)
    series = _series(envs, initial, n, series)
    U = series.U[n]
    if not U > 0:
        raise ValueError("U_n must be positive")
    labels, F = _factor_tables(envs, initial, n, tt)
    ulabels, UF = _resource_tables(envs, n, tt)
    u0f = np.exp(1j * (tt @ initial.x.T)) @ initial.u.astype(complex)
    vals = _mean_measure(series.pi[: n + 1], labels, F, ulabels, UF, u0f) / U
    return complex(vals[0]) if single else vals


def _tail_beyond(pi: np.ndarray) -> float:
    """Extrapolated sum_{r > N} pi_r past the last available index N."""
    pos = np.flatnonzero(pi > 0)
    if pos.size < 4:
        raise NonSummableError("too few positive selection fractions to estimate a tail")
    N = pos[-1]
    window = pos[pos >= max(1, N - max(10, N // 10))]
    vals = pi[window]
    ratios = vals[1:] / vals[:-1]
    rho = ratios.max() ** (1.0 / max(1, int(np.max(np.diff(window)))))
    if rho < 1.0 - 1e-3:
        return float(pi[N] * rho / (1.0 - rho))
    half = pos[pos <= N // 2]
    if half.size == 0:
        raise NonSummableError("cannot estimate the tail of pi")
    h = half[-1]
    p = -math.log(pi[N] / pi[h]) / math.log(N / h)
    if p > 1.0 + 1e-3:
        return float(pi[N] * N / (p - 1.0))
    raise NonSummableError(f"pi_r decays like r^-{p:.3f}: not summable (W_inf = inf)")


def big_pi(envs: EnvironmentSequence, initial: Initial, t, tail_tol: float = 1e-12,
           series: Optional[ScalarSeries] = None):
    """Infinite product Pi(t) truncated once the remaining sum of pi_r falls below ``tail_tol``.

    Returns ``(value, bound)`` with ``|value - Pi(t)| <= bound = 2 sum_{r>N} pi_r``;
    the tail past the environment is extrapolated geometrically (or as a
    power law when the decay is slower than geometric).
    """
    tt, single = as_t_grid(t, initial.d)
    N_env = len(envs)
    series = _series(envs, initial, N_env, series)
    pi = series.pi
    beyond = _tail_beyond(pi)
    suffix = np.concatenate([np.cumsum(pi[::-1])[::-1][1:], [0.0]]) + beyond
    ok = np.flatnonzero(suffix < tail_tol)
    if ok.size == 0:
        raise NonSummableError(
            f"tail of pi stays above {tail_tol:g} over {N_env} steps (estimated {beyond:.3g} past the end)")
    N = int(ok[0])
    labels, F = _factor_tables(envs, initial, N, tt)
    vals = _finish(*_product(pi[: N + 1], labels, F, 0, N + 1))
    bound = 2.0 * float(suffix[N])
    return (complex(vals[0]) if single else vals), bound


def u_average_f(envs: EnvironmentSequence, t, horizon: Optional[int] = None, stab_tol: float = 1e-6):
    """Running u-weighted average of f_{r,j}(t) over r = 1..horizon (the u-sum of the net).

    Generation 0 carries no displacement and does not affect the limit, so it
    is left out.  Raises :class:`NotStabilizedError` when the average moved by
    more than ``stab_tol`` (relative) over the last tenth of the horizon.
    """
    H = len(envs) if horizon is None else int(horizon)
    d = envs.d
    tt, single = as_t_grid(t, d)
    labels, UF = _resource_tables(envs, H, tt)
    u = np.array([envs.step_resources(r).sum() if envs.k[r] else 0.0 for r in range(H + 1)])
    cut = H - max(1, H // 10)

    def avg(h):
        lab = labels[1 : h + 1]
        sel = lab >= 0
        mass = u[1 : h + 1][sel].sum()
        if not mass > 0:
            raise NotStabilizedError("no resource mass within the horizon")
        counts = np.bincount(lab[sel], minlength=UF.shape[0])
        return (counts @ UF) / mass

    full, early = avg(H), avg(cut)
    change = np.abs(full - early) / np.maximum(np.abs(full), 1e-3)
    if np.max(change) > stab_tol:
        raise NotStabilizedError(f"u-average moved by {np.max(change):.3g} over the last tenth of the horizon")
    return complex(full[0]) if single else full


def thm1_limit_chf(envs: EnvironmentSequence, initial: Initial, t, tail_tol: float = 1e-12,
                   averaging_horizon: Optional[int] = None, stab_tol: float = 1e-6):
    """Ch.f. of the limiting mean measure when total weight is finite: Pi(t) times the u-sum of f(t)."""
    tt, single = as_t_grid(t, initial.d)
    pi_val, _ = big_pi(envs, initial, tt, tail_tol=tail_tol)
    avg = u_average_f(envs, tt, horizon=averaging_horizon, stab_tol=stab_tol)
    vals = pi_val * avg
    return complex(vals[0]) if single else vals


def empirical_chf(x, t, weights=None):
    """Weighted empirical ch.f. sum_i w_i exp(i t.x_i) / sum_i w_i."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    tt, single = as_t_grid(t, x.shape[1])
    w = np.ones(x.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    if np.any(w < 0) or not w.sum() > 0:
        raise ValueError("weights must be non-negative with positive total")
    vals = np.exp(1j * (tt @ x.T)) @ w / w.sum()
    if single:
        return complex(vals[0])
    return vals


def replicate_band(per_replicate: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean over replicates (axis 0) and its standard error as a complex modulus."""
    v = np.asarray(per_replicate)
    R = v.shape[0]
    mean = v.mean(axis=0)
    se = np.sqrt((v.real.var(axis=0, ddof=1) + v.imag.var(axis=0, ddof=1)) / R)
    return mean, se


def comparison_csv(t: np.ndarray, analytic: np.ndarray, empirical: np.ndarray, band: np.ndarray) -> str:
    """Rows: t components, analytic re/im, empirical re/im, |difference|, MC band."""
    t = np.asarray(t, dtype=float)
    if t.ndim == 1:
        t = t.reshape(-1, 1)
    out = io.StringIO()
    wr = csv.writer(out, lineterminator="\n")
    wr.writerow([f"t_{i}" for i in range(t.shape[1])]
                + ["analytic_re", "analytic_im", "empirical_re", "empirical_im", "abs_diff", "mc_band"])
    for ti, a, e, b in zip(t, analytic, empirical, band):
        wr.writerow([f"{v:.17g}" for v in ti]
                    + [f"{v:.17g}" for v in (a.real, a.imag, e.real, e.imag, abs(a - e), b)])
    return out.getvalue()
