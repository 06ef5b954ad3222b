"""Forward simulation of the contagious point process and its exact oracles.

Three independent routes to the law of the mother point X*_n are provided:

* :func:`run` / :func:`simulate_replicates` follow the step dynamics
  (select a mother with probability proportional to weight, displace the
  daughters from it);
* :func:`backward_sample_mother` draws sum_r I_r Y_r with independent
  Bernoulli(pi_r) indicators;
* :func:`exact_enumerate` walks every genealogy/displacement outcome of a
  small discrete instance.

Random streams are numpy ``Generator`` objects over PCG64.  Replicate
``i`` of base seed ``s`` uses ``SeedSequence(s, spawn_key=(i,))``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional

import numpy as np
from numba import njit

from .displacement import FiniteDiscrete, NotDiscreteError
from .env import EnvironmentSequence, Initial, ScalarSeries, StepEnvironment, scalar_series
from .wsampler import EmptySamplerError, PrefixWeightIndex, fenwick_add, fenwick_locate, fenwick_prefix, kahan_add

# rescale the tree once new weights exceed the reference by this many e-folds
_RESCALE_GAP = 100.0
_BLOCK = 1 << 16


def replicate_rng(base_seed: int, replicate: int) -> np.random.Generator:
    """Independent PCG64 stream for one replicate."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(base_seed, spawn_key=(replicate,))))


@dataclass(frozen=True)
class PointRecord:
    generation: int
    index: int
    x: np.ndarray
    w: float
    u: float
    mother: Optional[tuple[int, int]]


class ProcessState:
    """The growing point cloud plus the sampler that selects mothers."""

    def __init__(self, initial: Initial, rng: np.random.Generator, track_counts: bool = False):
        self.d = initial.d
        self.rng = rng
        cap = max(16, initial.k)
        self.loc = np.zeros((cap, self.d))
        self.gen = np.zeros(cap, dtype=np.int64)
        self.jidx = np.zeros(cap, dtype=np.int64)
        self.mother = np.full(cap, -1, dtype=np.int64)
        self.w_scaled = np.zeros(cap)
        self.lscale = np.zeros(cap)
        self.u = np.zeros(cap)
        self.sampler = PrefixWeightIndex(cap)
        self.count = 0
        self.n = 0
        self.ref = 0.0
        self.step_mother = np.full(16, -1, dtype=np.int64)
        self.U_acc = np.zeros(2)
        self.track_counts = track_counts
        k0 = initial.k
        self.loc[:k0] = initial.x
        self.jidx[:k0] = np.arange(1, k0 + 1)
        self.w_scaled[:k0] = initial.w
        self.u[:k0] = initial.u
        self.sampler.extend(initial.w)
        for v in initial.u:
            kahan_add(self.U_acc, float(v))
        self.count = k0

    def __len__(self) -> int:
        return self.count

    @property
    def W(self) -> float:
        """Total weight of all points (overflows to inf for huge exponential weights)."""
        try:
            return self.sampler.total * math.exp(self.ref)
        except OverflowError:
            return math.inf

    @property
    def log_W(self) -> float:
        return math.log(self.sampler.total) + self.ref

    @property
    def U(self) -> float:
        return float(self.U_acc[0])

    def _reserve(self, n_points: int, n_steps: int):
        need = self.count + n_points
        if need > self.loc.shape[0]:
            cap = self.loc.shape[0]
            while cap < need:
                cap *= 2
            for name in ("loc", "gen", "jidx", "mother", "w_scaled", "lscale", "u"):
                old = getattr(self, name)
                new = np.full((cap,) + old.shape[1:], -1 if name == "mother" else 0, dtype=old.dtype)
                new[: self.count] = old[: self.count]
                setattr(self, name, new)
        self.sampler.reserve(need)
        if self.n + n_steps + 1 > self.step_mother.shape[0]:
            cap = self.step_mother.shape[0]
            while cap < self.n + n_steps + 1:
                cap *= 2
            new = np.full(cap, -1, dtype=np.int64)
            new[: self.n + 1] = self.step_mother[: self.n + 1]
            self.step_mother = new

    def record(self, i: int) -> PointRecord:
        if not 0 <= i < self.count:
            raise IndexError(i)
        m = int(self.mother[i])
        return PointRecord(
            generation=int(self.gen[i]),
            index=int(self.jidx[i]),
            x=self.loc[i].copy(),
            w=float(self.w_scaled[i] * math.exp(self.lscale[i])),
            u=float(self.u[i]),
            mother=None if m < 0 else (int(self.gen[m]), int(self.jidx[m])),
        )

    @property
    def points(self) -> list[PointRecord]:
        return [self.record(i) for i in range(self.count)]

    def mothers(self) -> np.ndarray:
        """Flat index of the mother selected at each step 1..n."""
        return self.step_mother[1 : self.n + 1].copy()

    def mother_counts(self) -> np.ndarray:
        """How many times each point has been selected as a mother."""
        if not self.track_counts:
            raise RuntimeError("state was created without track_counts=True")
        return np.bincount(self.mothers(), minlength=self.count)

    def to_csv(self, fh=None) -> Optional[str]:
        """Point dump: generation, index, x_0..x_{d-1}, w, u, mother_generation, mother_index."""
        out = fh if fh is not None else io.StringIO()
        wr = csv.writer(out, lineterminator="\n")
        wr.writerow(["generation", "index"] + [f"x_{i}" for i in range(self.d)] + ["w", "u", "mother_generation", "mother_index"])
        for i in range(self.count):
            m = int(self.mother[i])
            w = self.w_scaled[i] * math.exp(self.lscale[i])
            wr.writerow(
                [int(self.gen[i]), int(self.jidx[i])]
                + [f"{v:.17g}" for v in self.loc[i]]
                + [f"{w:.17g}", f"{self.u[i]:.17g}"]
                + (["", ""] if m < 0 else [int(self.gen[m]), int(self.jidx[m])])
            )
        if fh is None:
            return out.getvalue()
        return None


def init(initial, rng=None, seed: Optional[int] = None, track_counts: bool = False) -> ProcessState:
    """Populate generation 0 from an :class:`Initial` or a list of ``(x, w, u)`` triples."""
    if not isinstance(initial, Initial):
        initial = Initial.from_points(initial)
    if rng is None:
        rng = np.random.default_rng(seed)
    return ProcessState(initial, rng, track_counts=track_counts)


@njit(cache=True, nogil=True)
def _advance(tree, weights, acc, U_acc, count, ref, ks, scales, new_w, new_u, uniforms, Y,
             loc, gen, jidx, mother, w_scaled, lscale, u_arr, step_mother, first_step):
    p = 0
    for b in range(ks.shape[0]):
        total = fenwick_prefix(tree, count)
        if not total > 0.0:
            return -1 - b, count, ref
        m = fenwick_locate(tree, weights, count, uniforms[b] * total)
        step_mother[first_step + b] = m
        s = scales[b]
        if s - ref > _RESCALE_GAP:
            f = math.exp(ref - s)
            for i in range(tree.shape[0]):
                tree[i] *= f
            for i in range(count):
                weights[i] *= f
            acc[0] *= f
            acc[1] *= f
            ref = s
        f = math.exp(s - ref)
        for j in range(ks[b]):
            i = count
            for c in range(loc.shape[1]):
                loc[i, c] = loc[m, c] + Y[p, c]
            gen[i] = first_step + b
            jidx[i] = j + 1
            mother[i] = m
            w_scaled[i] = new_w[p]
            lscale[i] = s
            u_arr[i] = new_u[p]
            wv = new_w[p] * f
            weights[i] = wv
            fenwick_add(tree, i, wv)
            kahan_add(acc, wv)
            kahan_add(U_acc, new_u[p])
            count += 1
            p += 1
    return 0, count, ref


def _draw_displacements(rng, joints, joint_id, ks, d) -> np.ndarray:
    """Flat (P, d) daughter displacements for a block, drawn joint by joint."""
    offsets = np.concatenate([[0], np.cumsum(ks)])
    Y = np.empty((int(offsets[-1]), d))
    for jid in np.unique(joint_id[joint_id >= 0]):
        steps = np.flatnonzero(joint_id == jid)
        draws = joints[jid].sample_many(rng, steps.size)
        k = draws.shape[1]
        rows = (offsets[steps][:, None] + np.arange(k)).ravel()
        Y[rows] = draws.reshape(-1, d)
    return Y


def _advance_block(state: ProcessState, ks, scales, w_flat, u_flat, joint_id, joints):
    B = ks.shape[0]
    state._reserve(int(ks.sum()), B)
    uniforms = state.rng.random(B)
    Y = _draw_displacements(state.rng, joints, joint_id, ks, state.d)
    status, count, ref = _advance(
        state.sampler.tree, state.sampler.weights, state.sampler.acc, state.U_acc,
        state.count, state.ref, ks, scales, w_flat, u_flat, uniforms, Y,
        state.loc, state.gen, state.jidx, state.mother, state.w_scaled, state.lscale, state.u,
        state.step_mother, state.n + 1,
    )
    if status < 0:
        failed = state.n + (-status)
        raise EmptySamplerError(f"W_{failed - 1} = 0: no selectable mother for step {failed}")
    state.sampler.count = count
    state.count = count
    state.ref = ref
    state.n += B


def step(state: ProcessState, env: StepEnvironment) -> list[PointRecord]:
    """Advance one generation: select a mother, attach env.k displaced daughters.

    A mother is drawn even when ``env.k == 0``; the draw is then discarded.
    """
    if env.joint is not None and env.joint.d != state.d:
        raise ValueError(f"environment dimension {env.joint.d} != process dimension {state.d}")
    first = state.count
    joints = (env.joint,) if env.joint is not None else ()
    _advance_block(
        state,
        np.array([env.k], dtype=np.int64),
        np.array([env.log_scale]),
        np.asarray(env.w_scaled, dtype=float),
        np.asarray(env.u, dtype=float),
        np.array([0 if env.k > 0 else -1], dtype=np.int64),
        joints,
    )
    return [state.record(i) for i in range(first, state.count)]


def run(
    state: ProcessState,
    envs: EnvironmentSequence,
    n_steps: int,
    snapshot_at: Iterable[int] = (),
    callback: Optional[Callable[[ProcessState], None]] = None,
) -> ProcessState:
    """Apply steps ``state.n + 1 .. state.n + n_steps`` of ``envs``.

    ``callback(state)`` fires whenever the generation reaches a value in
    ``snapshot_at``.  Blocks of steps share one batch of uniforms, so a run
    consumes the stream differently from repeated :func:`step` calls.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    if envs.d != state.d:
        raise ValueError(f"environment dimension {envs.d} != process dimension {state.d}")
    end = state.n + n_steps
    if end > len(envs):
        raise IndexError(f"environment has {len(envs)} steps, run needs {end}")
    snap = set(snapshot_at)
    stops = sorted({g for g in snap if state.n < g <= end} | {end})
    for stop in stops:
        while state.n < stop:
            a = state.n + 1
            b = min(stop, state.n + _BLOCK)
            lo, hi = envs.offsets[a], envs.offsets[b + 1]
            _advance_block(
                state,
                envs.k[a : b + 1],
                envs.log_scale[a : b + 1],
                envs.w_scaled[lo:hi],
                envs.u[lo:hi],
                envs.joint_id[a : b + 1],
                envs.joints,
            )
        if callback is not None and stop in snap:
            callback(state)
    return state


# ---------------------------------------------------------------------------
# Replicate-batched forward simulation (environment shared by all replicates)


@dataclass
class ReplicateBatch:
    """R independent forward runs over the same environment.

    ``loc[r, i]`` is the location of flat point ``i`` in replicate ``r``;
    ``step_mother[r, s]`` is the flat index of X*_s, the mother selected at
    step ``s + 1`` (s = 0..n).
    """

    loc: np.ndarray
    mother: np.ndarray
    step_mother: np.ndarray
    gen: np.ndarray
    u: np.ndarray
    offsets: np.ndarray

    @property
    def n(self) -> int:
        return self.step_mother.shape[1] - 1

    def mother_location(self, s: int) -> np.ndarray:
        """Samples of X*_s, shape (R, d)."""
        R = self.loc.shape[0]
        return self.loc[np.arange(R), self.step_mother[:, s]]

    def point_location(self, n: int, j: int) -> np.ndarray:
        """Samples of X_{n,j} (j is 1-based), shape (R, d)."""
        return self.loc[:, self.flat_index(n, j)]

    def flat_index(self, n: int, j: int) -> int:
        a, b = self.offsets[n], self.offsets[n + 1]
        if not 1 <= j <= b - a:
            raise IndexError(f"generation {n} has {b - a} points")
        return int(a + j - 1)

    def has_ancestor(self, flat_point: int, flat_ancestor: int) -> np.ndarray:
        """Per replicate: is ``flat_ancestor`` on the mother chain of ``flat_point``."""
        R = self.loc.shape[0]
        cur = np.full(R, flat_point)
        hit = np.zeros(R, dtype=bool)
        while True:
            cur = np.where(cur >= 0, self.mother[np.arange(R), np.maximum(cur, 0)], -1)
            hit |= cur == flat_ancestor
            if np.all(cur < flat_ancestor):
                return hit


def simulate_replicates(
    envs: EnvironmentSequence,
    initial: Initial,
    n: int,
    R: int,
    rng: np.random.Generator,
) -> ReplicateBatch:
    """Run R forward copies of the process for n steps, then draw the mother of step n+1.

    Every replicate sees the same weights, so one cumulative weight table
    serves all of them; cost is O(points + n R log points).
    """
    if n > len(envs):
        raise IndexError(f"environment has {len(envs)} steps, need {n}")
    if envs.d != initial.d:
        raise ValueError("environment and initial configuration disagree on dimension")
    k0 = initial.k
    ks = envs.k[1 : n + 1]
    offsets = np.concatenate([[0, k0], k0 + np.cumsum(ks)])
    P = int(offsets[-1])
    d = initial.d
    loc = np.empty((R, P, d))
    loc[:, :k0] = initial.x
    mother = np.full((R, P), -1, dtype=np.int64)
    step_mother = np.empty((R, n + 1), dtype=np.int64)
    gen = np.repeat(np.arange(n + 1), np.concatenate([[k0], ks]))
    u = np.concatenate([initial.u, envs.u[: envs.offsets[n + 1]]])

    cum = np.empty(P)
    cum[:k0] = np.cumsum(initial.w)
    ref = 0.0
    rows = np.arange(R)
    for s in range(n + 1):
        top = int(offsets[s + 1])
        total = cum[top - 1]
        if not total > 0:
            raise EmptySamplerError(f"W_{s} = 0: no selectable mother")
        pick = np.searchsorted(cum[:top], rng.random(R) * total, side="right")
        pick = np.minimum(pick, top - 1)
        step_mother[:, s] = pick
        if s == n:
            break
        t = s + 1
        k = int(envs.k[t])
        if k == 0:
            continue
        scale = envs.log_scale[t]
        if scale - ref > _RESCALE_GAP:
            cum[:top] *= math.exp(ref - scale)
            ref = scale
        w_new = envs.step_weights(t) * math.exp(scale - ref)
        cum[top : top + k] = cum[top - 1] + np.cumsum(w_new)
        Y = envs.joints[envs.joint_id[t]].sample_many(rng, R)
        loc[:, top : top + k] = loc[rows, pick][:, None, :] + Y
        mother[:, top : top + k] = pick[:, None]
    return ReplicateBatch(loc=loc, mother=mother, step_mother=step_mother, gen=gen, u=u, offsets=offsets)


# ---------------------------------------------------------------------------
# Backward representation


def backward_sample_mother(
    envs: EnvironmentSequence,
    initial: Initial,
    n: int,
    rng: np.random.Generator,
    size: Optional[int] = None,
    series: Optional[ScalarSeries] = None,
) -> np.ndarray:
    """Draw X*_n as sum_{r=0}^n I_r Y_r with I_r ~ Bernoulli(pi_r) independent.

    Y_0 comes from the w-weighted mixture of initial locations (I_0 = 1);
    Y_r, r >= 1, from the w-weighted mixture of generation r's marginals.
    Returns shape ``(d,)`` when ``size`` is None, else ``(size, d)``.
    """
    if n > len(envs):
        raise IndexError(f"environment has {len(envs)} steps, need {n}")
    m = 1 if size is None else int(size)
    if series is None:
        series = scalar_series(envs.truncate(n), initial)
    pi = series.pi[: n + 1]
    x = initial.x[rng.choice(initial.k, size=m, p=initial.w / initial.w.sum())].astype(float)
    if n >= 1:
        counts = rng.binomial(m, pi[1:])
        labels = envs.mixture_keys()[: n + 1]
        reps_all, steps_all = [], []
        for r in np.flatnonzero(counts) + 1:
            c = int(counts[r - 1])
            reps_all.append(rng.choice(m, size=c, replace=False) if c < m else np.arange(m))
            steps_all.append(np.full(c, r))
        if reps_all:
            reps = np.concatenate(reps_all)
            steps = np.concatenate(steps_all)
            lab = labels[steps]
            for L in np.unique(lab):
                sel = np.flatnonzero(lab == L)
                law = envs.mixture(int(steps[sel[0]]))
                np.add.at(x, reps[sel], law.sample(rng, sel.size))
    return x[0] if size is None else x


def backward_moments(envs: EnvironmentSequence, initial: Initial, n: int,
                     series: Optional[ScalarSeries] = None) -> tuple[np.ndarray, np.ndarray]:
    """Exact mean and covariance of X*_n from the independent-indicator representation.

    mean = mu_0 + sum_{r=1}^n pi_r mu_r,
    cov  = sum_{r=0}^n (pi_r m_r - pi_r^2 mu_r^T mu_r),
    with generation 0 contributing the covariance of the initial mixture.
    """
    if series is None:
        series = scalar_series(envs.truncate(n), initial)
    pi = series.pi[: n + 1]
    mu, m = envs.truncate(n).mixture_moments()
    mu0, m0 = initial.mixture().moments()
    mu[0], m[0] = mu0, m0
    mean = np.einsum("r,rd->d", pi, mu)
    cov = np.einsum("r,rij->ij", pi, m) - np.einsum("r,ri,rj->ij", pi**2, mu, mu)
    return mean, cov


# ---------------------------------------------------------------------------
# Exact enumeration


class EnumerationOverflowError(RuntimeError):
    """The outcome tree exceeds the configured bound."""


@dataclass(frozen=True)
class FiniteDiscreteDistribution:
    """Law on a lattice: integer coordinates ``key`` stand for ``key / scale``."""

    probs: dict
    scale: int

    def __post_init__(self):
        if any(p <= 0 for p in self.probs.values()):
            raise ValueError("probabilities must be positive")
        if abs(sum(self.probs.values()) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")

    @property
    def d(self) -> int:
        return len(next(iter(self.probs)))

    def support(self) -> tuple[np.ndarray, np.ndarray]:
        keys = sorted(self.probs)
        pts = np.array(keys, dtype=float) / self.scale
        return pts, np.array([self.probs[k] for k in keys])

    def prob(self, x) -> float:
        key = tuple(int(round(v * self.scale)) for v in np.atleast_1d(x))
        return self.probs.get(key, 0.0)

    def chf(self, t):
        pts, p = self.support()
        return FiniteDiscrete(pts, p / p.sum()).chf(t)

    @classmethod
    def from_samples(cls, samples: np.ndarray, scale: int) -> "FiniteDiscreteDistribution":
        """Empirical frequencies of samples lying on the lattice ``Z^d / scale``."""
        arr = np.asarray(samples, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        keys = np.rint(arr * scale).astype(np.int64)
        if np.max(np.abs(keys - arr * scale), initial=0.0) > 1e-6:
            raise ValueError("samples do not lie on the lattice")
        uniq, cnt = np.unique(keys, axis=0, return_counts=True)
        total = cnt.sum()
        return cls({tuple(int(v) for v in k): c / total for k, c in zip(uniq, cnt)}, scale)


def lattice_scale(values: Iterable[float], max_den: int = 10**6) -> int:
    """Smallest integer s with s * v integral for every v (rationals of bounded denominator)."""
    s = 1
    for v in values:
        f = Fraction(float(v)).limit_denominator(max_den)
        if abs(float(f) - v) > 1e-12 * max(1.0, abs(v)):
            raise NotDiscreteError(f"{v!r} is not on a rational lattice")
        s = s * f.denominator // math.gcd(s, f.denominator)
    return s


def exact_enumerate(
    envs: EnvironmentSequence,
    initial: Initial,
    n: int,
    j: int,
    max_outcomes: int = 10**7,
) -> FiniteDiscreteDistribution:
    """Exact law of X_{n,j} by walking every mother choice and displacement outcome.

    All displacement marginals must be finitely supported; identical point
    configurations are merged after every step.
    """
    if not 0 <= n <= len(envs):
        raise IndexError(f"generation {n} outside 0..{len(envs)}")
    k_n = initial.k if n == 0 else int(envs.k[n])
    if not 1 <= j <= k_n:
        raise IndexError(f"generation {n} has {k_n} points")
    joint_outcomes = {}
    coords = list(initial.x.ravel())
    predicted = 1
    n_points = int((initial.w > 0).sum())
    for s in range(1, n + 1):
        if envs.k[s] == 0:
            continue
        jid = int(envs.joint_id[s])
        if jid not in joint_outcomes:
            joint_outcomes[jid] = list(envs.joints[jid].outcomes())
            coords.extend(y for _, ys in joint_outcomes[jid] for y in ys.ravel())
        predicted *= n_points * len(joint_outcomes[jid])
        n_points += int((envs.step_weights(s) > 0).sum())
        if predicted > max_outcomes:
            raise EnumerationOverflowError(f"outcome tree exceeds {max_outcomes}")
    scale = lattice_scale(coords)

    def key(x):
        return tuple(int(round(v * scale)) for v in x)

    # state: tuple of lattice points (one per existing point) -> probability
    states = {tuple(key(x) for x in initial.x): 1.0}
    weights = list(initial.w)
    ref = 0.0
    for s in range(1, n + 1):
        k = int(envs.k[s])
        scale_s = float(envs.log_scale[s])
        if k == 0:
            continue
        if scale_s > ref:
            weights = [w * math.exp(ref - scale_s) for w in weights]
            ref = scale_s
        W = math.fsum(weights)
        outs = [(q, [key(y) for y in ys]) for q, ys in joint_outcomes[int(envs.joint_id[s])]]
        nxt: dict = {}
        for state, p in states.items():
            for i, w in enumerate(weights):
                if w == 0.0:
                    continue
                pm = p * w / W
                base = state[i]
                for q, ys in outs:
                    new = state + tuple(tuple(b + c for b, c in zip(base, y)) for y in ys)
                    nxt[new] = nxt.get(new, 0.0) + pm * q
        states = nxt
        weights.extend(float(w) * math.exp(scale_s - ref) for w in envs.step_weights(s))
    flat = j - 1 if n == 0 else initial.k + int(envs.offsets[n]) + j - 1
    law: dict = {}
    for state, p in states.items():
        law[state[flat]] = law.get(state[flat], 0.0) + p
    total = math.fsum(law.values())
    law = {kk: v / total for kk, v in law.items() if v > 0}
    return FiniteDiscreteDistribution(law, scale)


# ---------------------------------------------------------------------------
# Genealogy formulas


def point_share(envs: EnvironmentSequence, initial: Initial, r: int, j: int) -> float:
    """w_{r,j} / w_r: the point's share of its generation's weight."""
    w = initial.w if r == 0 else envs.step_weights(r)
    if not 1 <= j <= len(w):
        raise IndexError(f"generation {r} has {len(w)} points")
    return float(w[j - 1] / w.sum()) if w.sum() > 0 else 0.0


def mother_count_expectation(series: ScalarSeries, r: int, n: int, share: float = 1.0) -> float:
    """Expected number of selections of point (r, j) at steps r+1..n.

    ``share`` is w_{r,j}/w_r, so w_{r,j}/W_m = share * pi_r * W_r / W_m.
    """
    if not 0 <= r < n:
        raise ValueError("need 0 <= r < n")
    logW = series.log_W
    ratios = np.exp(logW[r] - logW[r:n])
    return float(share * series.pi[r] * math.fsum(ratios))


def ancestry_probability(series: ScalarSeries, r: int, share: float = 1.0) -> float:
    """P(point (r, i) is an ancestor of a given later point) = w_{r,i} / W_r."""
    return float(share * series.pi[r])


def ancestry_mean(series: ScalarSeries, envs: EnvironmentSequence, r: int, n: int) -> float:
    """Mean number of generation-n points with a generation-r ancestor: k_n * pi_r."""
    if not 0 <= r < n:
        raise ValueError("need 0 <= r < n")
    return float(envs.k[n] * series.pi[r])
