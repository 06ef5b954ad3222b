"""Append-only weighted categorical sampler.

A binary indexed (Fenwick) tree over a flat array of non-negative weights
gives O(log N) append and O(log N) inverse-prefix sampling.  Index ``i`` is
drawn with probability ``w_i / total``; the search maps ``u`` to the index
whose half-open interval ``[P_i, P_{i+1})`` contains it, so zero-weight
entries own empty intervals and are never returned.

The kernels are plain numba functions over numpy buffers so that the batch
simulator in :mod:`contagion.process` can drive the same tree without
crossing back into Python.
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _top_bit(n):
    step = 1
    while step * 2 <= n:
        step *= 2
    return step


@njit(cache=True, nogil=True)
def fenwick_add(tree, i, w):
    cap = tree.shape[0]
    j = i + 1
    while j <= cap:
        tree[j - 1] += w
        j += j & -j


@njit(cache=True, nogil=True)
def fenwick_prefix(tree, i):
    s = 0.0
    j = i
    while j > 0:
        s += tree[j - 1]
        j -= j & -j
    return s


@njit(cache=True, nogil=True)
def fenwick_build(weights, cap):
    tree = np.zeros(cap)
    tree[: weights.shape[0]] = weights
    for i in range(1, cap + 1):
        j = i + (i & -i)
        if j <= cap:
            tree[j - 1] += tree[i - 1]
    return tree


@njit(cache=True, nogil=True)
def fenwick_locate(tree, weights, count, u):
    """Index ``i < count`` with prefix(i) <= u < prefix(i+1)."""
    cap = tree.shape[0]
    pos = 0
    step = _top_bit(cap)
    while step > 0:
        nxt = pos + step
        if nxt <= cap and tree[nxt - 1] <= u:
            pos = nxt
            u -= tree[nxt - 1]
        step >>= 1
    # rounding guards: u at or past the float total, or a boundary landing on a zero entry
    if pos >= count:
        pos = count - 1
        while pos > 0 and weights[pos] == 0.0:
            pos -= 1
        return pos
    if weights[pos] == 0.0:
        j = pos
        while j < count and weights[j] == 0.0:
            j += 1
        if j < count:
            return j
        while pos > 0 and weights[pos] == 0.0:
            pos -= 1
    return pos


@njit(cache=True, nogil=True)
def mean_probes(tree, count, uniforms):
    """Average number of tree nodes read by the descending search, measured over ``uniforms``."""
    cap = tree.shape[0]
    total = fenwick_prefix(tree, count)
    reads = 0
    for k in range(uniforms.shape[0]):
        u = uniforms[k] * total
        pos = 0
        step = _top_bit(cap)
        while step > 0:
            nxt = pos + step
            if nxt <= cap:
                reads += 1
                if tree[nxt - 1] <= u:
                    pos = nxt
                    u -= tree[nxt - 1]
            step >>= 1
    return reads / uniforms.shape[0]


@njit(cache=True, nogil=True)
def kahan_add(acc, w):
    # acc[0] running sum, acc[1] compensation; zero terms leave the sum alone
    if w == 0.0:
        return
    y = w - acc[1]
    t = acc[0] + y
    acc[1] = (t - acc[0]) - y
    acc[0] = t


@njit(cache=True, nogil=True)
def _sample_many(tree, weights, count, uniforms, out):
    total = fenwick_prefix(tree, count)
    for i in range(uniforms.shape[0]):
        out[i] = fenwick_locate(tree, weights, count, uniforms[i] * total)


@njit(cache=True, nogil=True)
def _extend(tree, weights, acc, count, ws):
    for i in range(ws.shape[0]):
        weights[count + i] = ws[i]
        fenwick_add(tree, count + i, ws[i])
        kahan_add(acc, ws[i])


def probe_count(capacity: int) -> int:
    """Tree nodes inspected by one search over a tree of this capacity."""
    return int(capacity).bit_length()


class EmptySamplerError(RuntimeError):
    """No index carries positive weight."""


class PrefixWeightIndex:
    """Growable prefix-sum index over append-only weights."""

    def __init__(self, capacity: int = 16):
        cap = max(1, int(capacity))
        self.tree = np.zeros(cap)
        self.weights = np.zeros(cap)
        self.acc = np.zeros(2)
        self.count = 0

    def __len__(self) -> int:
        return self.count

    @property
    def capacity(self) -> int:
        return self.tree.shape[0]

    @property
    def total(self) -> float:
        """Compensated sum of every appended weight."""
        return float(self.acc[0])

    def reserve(self, n: int) -> None:
        if n <= self.capacity:
            return
        cap = self.capacity
        while cap < n:
            cap *= 2
        w = np.zeros(cap)
        w[: self.count] = self.weights[: self.count]
        self.weights = w
        self.tree = fenwick_build(w[: self.count], cap)

    def append(self, w: float) -> int:
        w = float(w)
        if not (w >= 0.0) or not np.isfinite(w):
            raise ValueError(f"weight must be finite and non-negative, got {w!r}")
        idx = self.count
        self.reserve(idx + 1)
        _extend(self.tree, self.weights, self.acc, idx, np.array([w]))
        self.count += 1
        return idx

    def extend(self, ws) -> int:
        """Append many weights; returns the index of the first."""
        ws = np.asarray(ws, dtype=float).ravel()
        if np.any(~np.isfinite(ws)) or np.any(ws < 0):
            raise ValueError("weights must be finite and non-negative")
        first = self.count
        self.reserve(first + ws.size)
        _extend(self.tree, self.weights, self.acc, first, ws)
        self.count += ws.size
        return first

    def weight(self, i: int) -> float:
        if not 0 <= i < self.count:
            raise IndexError(i)
        return float(self.weights[i])

    def prefix(self, i: int) -> float:
        """Sum of the first ``i`` weights as held by the tree."""
        return fenwick_prefix(self.tree, int(i))

    def _check_nonempty(self):
        if self.count == 0 or self.prefix(self.count) <= 0.0:
            raise EmptySamplerError("total weight is zero: no selectable point")

    def locate(self, u: float) -> int:
        """Index whose half-open prefix interval contains ``u`` in ``[0, total)``."""
        self._check_nonempty()
        return int(fenwick_locate(self.tree, self.weights, self.count, float(u)))

    def sample(self, rng: np.random.Generator) -> int:
        self._check_nonempty()
        u = rng.random() * self.prefix(self.count)
        return int(fenwick_locate(self.tree, self.weights, self.count, u))

    def sample_many(self, rng: np.random.Generator, m: int) -> np.ndarray:
        self._check_nonempty()
        out = np.empty(m, dtype=np.int64)
        _sample_many(self.tree, self.weights, self.count, rng.random(m), out)
        return out

    def rescale(self, factor: float) -> None:
        """Multiply every weight by ``factor`` > 0; selection probabilities are unchanged."""
        if not factor > 0:
            raise ValueError("rescale factor must be positive")
        self.tree *= factor
        self.weights *= factor
        self.acc *= factor
