"""Displacement laws on R^d and their couplings across the daughters of one step.

Every law exposes ``chf(t)``, ``moments()`` and ``sample(rng, size)``.  The
argument ``t`` of a characteristic function is either a single point of R^d
(shape ``(d,)``, or a scalar when ``d == 1``) or a grid of points (shape
``(m, d)``, or ``(m,)`` when ``d == 1``).  A single point gives a complex
scalar, a grid gives a complex array of length ``m``.

Gaussian draws use numpy's ziggurat ``standard_normal`` followed by the
symmetric square root of the covariance (eigendecomposition, negative
eigenvalues clipped at zero), so singular covariances are supported.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

PROB_TOL = 1e-12
PSD_TOL = 1e-10


class NotDiscreteError(ValueError):
    """Raised when an exact enumeration meets a law with continuous support."""


def as_t_grid(t, d: int) -> tuple[np.ndarray, bool]:
    """Coerce ``t`` to an ``(m, d)`` float array; flag whether it was a single point."""
    arr = np.asarray(t, dtype=float)
    if arr.ndim == 0:
        if d != 1:
            raise ValueError(f"scalar t only valid for d=1, got d={d}")
        return arr.reshape(1, 1), True
    if arr.ndim == 1:
        if d == 1:
            return arr.reshape(-1, 1), False
        if arr.shape[0] != d:
            raise ValueError(f"t has length {arr.shape[0]}, expected {d}")
        return arr.reshape(1, d), True
    if arr.ndim == 2 and arr.shape[1] == d:
        return arr, False
    raise ValueError(f"t of shape {arr.shape} incompatible with d={d}")


def _finish(values: np.ndarray, single: bool):
    return complex(values[0]) if single else values


def _vec(x, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a vector")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def _normalized_probs(probs, m: int) -> np.ndarray:
    p = np.asarray(probs, dtype=float)
    if p.shape != (m,):
        raise ValueError(f"expected {m} probabilities, got shape {p.shape}")
    if np.any(p < 0):
        raise ValueError("probabilities must be non-negative")
    if abs(p.sum() - 1.0) > PROB_TOL:
        raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
    return p


@dataclass(frozen=True, eq=False)
class PointMass:
    c: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "c", _vec(self.c, "c"))

    @property
    def d(self) -> int:
        return self.c.shape[0]

    def chf(self, t):
        tt, single = as_t_grid(t, self.d)
        return _finish(np.exp(1j * (tt @ self.c)), single)

    def moments(self):
        return self.c.copy(), np.outer(self.c, self.c)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.broadcast_to(self.c, (size, self.d)).copy()

    def discrete(self):
        return self.c.reshape(1, -1), np.ones(1)


@dataclass(frozen=True, eq=False)
class FiniteDiscrete:
    support: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.support, dtype=float)
        if s.ndim == 1:
            s = s.reshape(-1, 1)
        if s.ndim != 2 or s.shape[0] == 0:
            raise ValueError("support must be a non-empty list of points")
        object.__setattr__(self, "support", s)
        object.__setattr__(self, "probs", _normalized_probs(self.probs, s.shape[0]))

    @property
    def d(self) -> int:
        return self.support.shape[1]

    def chf(self, t):
        tt, single = as_t_grid(t, self.d)
        return _finish(np.exp(1j * (tt @ self.support.T)) @ self.probs, single)

    def moments(self):
        mean = self.probs @ self.support
        second = (self.support * self.probs[:, None]).T @ self.support
        return mean, second

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        idx = rng.choice(self.support.shape[0], size=size, p=self.probs)
        return self.support[idx]

    def discrete(self):
        keep = self.probs > 0
        return self.support[keep], self.probs[keep]


@dataclass(frozen=True, eq=False)
class Gaussian:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = _vec(self.mean, "mean")
        d = mean.shape[0]
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if cov.shape != (d, d):
            raise ValueError(f"cov must be {d}x{d}")
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise ValueError("cov must be symmetric")
        evals, evecs = np.linalg.eigh(cov)
        if evals.min() < -PSD_TOL:
            raise ValueError("cov must be positive semi-definite")
        evals = np.clip(evals, 0.0, None)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "_root", evecs * np.sqrt(evals))

    @property
    def d(self) -> int:
        return self.mean.shape[0]

    def chf(self, t):
        tt, single = as_t_grid(t, self.d)
        quad = np.einsum("ij,jk,ik->i", tt, self.cov, tt)
        return _finish(np.exp(1j * (tt @ self.mean) - 0.5 * quad), single)

    def moments(self):
        return self.mean.copy(), self.cov + np.outer(self.mean, self.mean)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        z = rng.standard_normal((size, self.d))
        return self.mean + z @ self._root.T


@dataclass(frozen=True, eq=False)
class UniformBox:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo, hi = _vec(self.lo, "lo"), _vec(self.hi, "hi")
        if lo.shape != hi.shape or np.any(hi < lo):
            raise ValueError("need lo <= hi componentwise, same dimension")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def d(self) -> int:
        return self.lo.shape[0]

    def chf(self, t):
        tt, single = as_t_grid(t, self.d)
        half = 0.5 * tt * (self.hi - self.lo)
        # sin(a)/a == np.sinc(a/pi)
        vals = np.exp(1j * (tt @ (0.5 * (self.lo + self.hi)))) * np.prod(np.sinc(half / np.pi), axis=1)
        return _finish(vals, single)

    def moments(self):
        mean = 0.5 * (self.lo + self.hi)
        var = (self.hi - self.lo) ** 2 / 12.0
        return mean, np.outer(mean, mean) + np.diag(var)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.lo + (self.hi - self.lo) * rng.random((size, self.d))


DisplacementLaw = Union[PointMass, FiniteDiscrete, Gaussian, UniformBox]


class MixtureLaw:
    """Finite mixture of displacement laws; raw weights are normalized on construction."""

    def __init__(self, components: Sequence, weights: Sequence[float]):
        comps = tuple(components)
        w = np.asarray(weights, dtype=float)
        if not comps or w.shape != (len(comps),):
            raise ValueError("need one weight per component")
        if np.any(w < 0) or w.sum() <= 0:
            raise ValueError("mixture weights must be non-negative with positive total")
        dims = {c.d for c in comps}
        if len(dims) != 1:
            raise ValueError(f"components disagree on dimension: {sorted(dims)}")
        self.components = comps
        self.weights = w / w.sum()
        self.d = dims.pop()

    def __repr__(self):
        return f"MixtureLaw({len(self.components)} components)"

    def chf(self, t):
        tt, single = as_t_grid(t, self.d)
        vals = np.zeros(tt.shape[0], dtype=complex)
        for c, w in zip(self.components, self.weights):
            if w > 0:
                vals += w * c.chf(tt)
        return _finish(vals, single)

    def moments(self):
        mean = np.zeros(self.d)
        second = np.zeros((self.d, self.d))
        for c, w in zip(self.components, self.weights):
            mu, m = c.moments()
            mean += w * mu
            second += w * m
        return mean, second

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if len(self.components) == 1:
            return self.components[0].sample(rng, size)
        which = rng.choice(len(self.components), size=size, p=self.weights)
        out = np.empty((size, self.d))
        for i, c in enumerate(self.components):
            sel = np.flatnonzero(which == i)
            if sel.size:
                out[sel] = c.sample(rng, sel.size)
        return out

    def discrete(self):
        pts, probs = [], []
        for c, w in zip(self.components, self.weights):
            if w > 0:
                s, p = discrete_support(c)
                pts.append(s)
                probs.append(w * p)
        return np.vstack(pts), np.concatenate(probs)


def discrete_support(law) -> tuple[np.ndarray, np.ndarray]:
    """Support points ``(m, d)`` and probabilities of a finitely supported law."""
    if not hasattr(law, "discrete"):
        raise NotDiscreteError(f"{type(law).__name__} has no finite support")
    return law.discrete()


class Independent:
    """Daughters displaced independently, daughter ``j`` by ``laws[j]``."""

    def __init__(self, laws: Sequence):
        self.laws = tuple(laws)
        if not self.laws:
            raise ValueError("a joint law needs at least one daughter")
        dims = {law.d for law in self.laws}
        if len(dims) != 1:
            raise ValueError("marginals disagree on dimension")
        self.d = dims.pop()

    @property
    def k(self) -> int:
        return len(self.laws)

    @property
    def marginals(self) -> tuple:
        return self.laws

    def sample_many(self, rng: np.random.Generator, m: int) -> np.ndarray:
        out = np.empty((m, self.k, self.d))
        for j, law in enumerate(self.laws):
            out[:, j, :] = law.sample(rng, m)
        return out

    def outcomes(self):
        """Yield ``(prob, displacements (k, d))`` over the product of discrete supports."""
        supports = [discrete_support(law) for law in self.laws]
        for combo in itertools.product(*(range(len(p)) for _, p in supports)):
            prob = 1.0
            pts = np.empty((self.k, self.d))
            for j, i in enumerate(combo):
                pts[j] = supports[j][0][i]
                prob *= supports[j][1][i]
            yield prob, pts

    def n_outcomes(self) -> int:
        return int(np.prod([len(discrete_support(law)[1]) for law in self.laws]))

    def __repr__(self):
        return f"Independent(k={self.k})"


# An explicit list of independent marginals is the same coupling.
ProductList = Independent


class CommonCopy:
    """All ``k`` daughters share a single displacement drawn from ``law``."""

    def __init__(self, law, k: int):
        if k < 1:
            raise ValueError("a joint law needs at least one daughter")
        self.law = law
        self.k = int(k)
        self.d = law.d

    @property
    def marginals(self) -> tuple:
        return (self.law,) * self.k

    def sample_many(self, rng: np.random.Generator, m: int) -> np.ndarray:
        y = self.law.sample(rng, m)
        return np.repeat(y[:, None, :], self.k, axis=1)

    def outcomes(self):
        pts, probs = discrete_support(self.law)
        for x, p in zip(pts, probs):
            yield p, np.repeat(x[None, :], self.k, axis=0)

    def n_outcomes(self) -> int:
        return len(discrete_support(self.law)[1])

    def __repr__(self):
        return f"CommonCopy(k={self.k})"


JointDisplacement = Union[Independent, CommonCopy]


def chf(law, t):
    """Characteristic function of ``law`` at ``t`` (point or grid)."""
    return law.chf(t)


def moments(law) -> tuple[np.ndarray, np.ndarray]:
    """Mean vector and matrix of mixed second moments E[Y^T Y]."""
    return law.moments()


def sample_joint(joint, rng: np.random.Generator) -> np.ndarray:
    """One draw of the ``k`` daughter displacements, shape ``(k, d)``."""
    return joint.sample_many(rng, 1)[0]
