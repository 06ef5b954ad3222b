"""Environment sequences: offspring counts, (w, u) attributes and displacement laws per step.

A materialized environment is stored column-wise in :class:`EnvironmentSequence`
so that runs of 10^6 and more steps stay cheap.  Steps are numbered from 1
(step 0 is the initial configuration, held separately in :class:`Initial`).

Weights that grow or shrink exponentially overflow doubles after ~1000 steps,
so every step carries a log-scale: the actual weight of point ``(n, j)`` is
``w_scaled[n, j] * exp(log_scale[n])``.  Only ratios of weights ever matter,
and all downstream code works with weights relative to a running reference
scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from numba import njit

from .displacement import CommonCopy, Independent, MixtureLaw, PointMass

# ---------------------------------------------------------------------------
# Scalar generators (used for xi_n, tau_n, k_n and law selectors)


@dataclass(frozen=True)
class Constant:
    c: float

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return np.full(n, float(self.c))

    def mean(self) -> float:
        return float(self.c)

    def values(self) -> np.ndarray:
        return np.array([float(self.c)])


@dataclass(frozen=True)
class IidFiniteSupport:
    vals: tuple
    probs: tuple

    def __post_init__(self):
        v = tuple(float(x) for x in self.vals)
        p = tuple(float(x) for x in self.probs)
        if len(v) != len(p) or not v:
            raise ValueError("IidFiniteSupport needs matching non-empty values and probs")
        if any(x < 0 for x in p) or abs(sum(p) - 1.0) > 1e-12:
            raise ValueError("probs must be non-negative and sum to 1")
        object.__setattr__(self, "vals", v)
        object.__setattr__(self, "probs", p)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return np.asarray(self.vals)[rng.choice(len(self.vals), size=n, p=self.probs)]

    def mean(self) -> float:
        return float(np.dot(self.vals, self.probs))

    def values(self) -> np.ndarray:
        return np.asarray(self.vals)


@dataclass(frozen=True)
class Periodic:
    cycle: tuple
    phase: int = 0

    def __post_init__(self):
        if not self.cycle:
            raise ValueError("Periodic needs a non-empty cycle")
        object.__setattr__(self, "cycle", tuple(float(x) for x in self.cycle))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        c = np.asarray(self.cycle)
        return c[(np.arange(n) + self.phase) % len(c)]

    def mean(self) -> float:
        return float(np.mean(self.cycle))

    def values(self) -> np.ndarray:
        return np.asarray(self.cycle)


@dataclass(frozen=True)
class TwoStateMarkov:
    """Hidden two-state chain started in its stationary law.

    ``switch = (p01, p10)`` are the probabilities of leaving state 0 and
    state 1; ``emit = (v0, v1)`` the values emitted in each state.
    """

    switch: tuple
    emit: tuple

    def __post_init__(self):
        p01, p10 = (float(x) for x in self.switch)
        if not (0 <= p01 <= 1 and 0 <= p10 <= 1) or p01 + p10 == 0:
            raise ValueError("switch probabilities must lie in [0,1], not both zero")
        object.__setattr__(self, "switch", (p01, p10))
        object.__setattr__(self, "emit", tuple(float(x) for x in self.emit))
        if len(self.emit) != 2:
            raise ValueError("TwoStateMarkov emits exactly two values")

    @property
    def stationary(self) -> tuple[float, float]:
        p01, p10 = self.switch
        return p10 / (p01 + p10), p01 / (p01 + p10)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        p01, p10 = self.switch
        u = rng.random(n)
        states = _markov_path(u, self.stationary[1], p01, p10)
        return np.asarray(self.emit)[states]

    def mean(self) -> float:
        s0, s1 = self.stationary
        return s0 * self.emit[0] + s1 * self.emit[1]

    def values(self) -> np.ndarray:
        return np.asarray(self.emit)


@njit(cache=True)
def _markov_path(u, p1, p01, p10):
    out = np.empty(u.shape[0], dtype=np.int64)
    s = 1 if u[0] < p1 else 0
    out[0] = s
    for i in range(1, u.shape[0]):
        if s == 0:
            s = 1 if u[i] < p01 else 0
        else:
            s = 0 if u[i] < p10 else 1
        out[i] = s
    return out


Generator = Union[Constant, IidFiniteSupport, Periodic, TwoStateMarkov]


def _as_generator(g) -> Generator:
    if isinstance(g, (Constant, IidFiniteSupport, Periodic, TwoStateMarkov)):
        return g
    if isinstance(g, (int, float)):
        return Constant(float(g))
    raise TypeError(f"not a generator: {g!r}")


# ---------------------------------------------------------------------------
# Weight regimes


@dataclass(frozen=True)
class StepSpec:
    """One step of an explicit environment: weights, resources and (optionally) a joint law."""

    w: tuple
    u: tuple
    joint: object = None

    def __post_init__(self):
        w = tuple(float(x) for x in self.w)
        u = tuple(float(x) for x in self.u)
        if len(w) != len(u):
            raise ValueError("w and u must have one entry per daughter")
        if any(x < 0 or not math.isfinite(x) for x in w + u):
            raise ValueError("weights and resources must be finite and non-negative")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "u", u)


@dataclass(frozen=True)
class Explicit:
    steps: tuple

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))


@dataclass(frozen=True)
class PowerLaw:
    """w_n = xi_n * n**alpha * L(n) with L = 1 or L(n) = ln(n + e)**beta."""

    xi: Generator = Constant(1.0)
    alpha: float = 0.0
    beta: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "xi", _as_generator(self.xi))
        if not self.alpha > -1:
            raise ValueError(f"power-law exponent must exceed -1, got {self.alpha}")
        if np.any(self.xi.values() < 0):
            raise ValueError("xi values must be non-negative")

    def slowly_varying(self, n: np.ndarray) -> np.ndarray:
        if self.beta is None:
            return np.ones_like(n, dtype=float)
        return np.log(n + math.e) ** self.beta


@dataclass(frozen=True)
class Exponential:
    """w_n = xi_n * exp(S_n), S_n = tau_1 + ... + tau_n."""

    xi: Generator = Constant(1.0)
    tau: Generator = Constant(math.log(2.0))

    def __post_init__(self):
        object.__setattr__(self, "xi", _as_generator(self.xi))
        object.__setattr__(self, "tau", _as_generator(self.tau))
        if np.any(self.xi.values() < 0):
            raise ValueError("xi values must be non-negative")


WeightRegime = Union[Explicit, PowerLaw, Exponential]


@dataclass(frozen=True)
class DisplacementSpec:
    """Per-step displacement: marginal ``laws[sel_n]`` coupled across the k_n daughters.

    ``selector`` yields law indices; without one every step uses ``laws[0]``.
    """

    laws: tuple
    coupling: str = "independent"
    selector: Optional[Generator] = None

    def __post_init__(self):
        object.__setattr__(self, "laws", tuple(self.laws))
        if not self.laws:
            raise ValueError("at least one displacement law is required")
        if self.coupling not in ("independent", "common"):
            raise ValueError(f"unknown coupling {self.coupling!r}")
        if self.selector is not None:
            vals = self.selector.values()
            if np.any(vals != np.round(vals)) or vals.min() < 0 or vals.max() >= len(self.laws):
                raise ValueError("selector values must be valid law indices")

    @property
    def d(self) -> int:
        dims = {law.d for law in self.laws}
        if len(dims) != 1:
            raise ValueError("displacement laws disagree on dimension")
        return dims.pop()

    def joint(self, law_index: int, k: int):
        law = self.laws[law_index]
        if self.coupling == "common":
            return CommonCopy(law, k)
        return Independent([law] * k)


# ---------------------------------------------------------------------------
# Materialized environments


@dataclass(frozen=True)
class Initial:
    """Initial configuration: locations ``x`` (k0, d) with weights and resources."""

    x: np.ndarray
    w: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        w = np.atleast_1d(np.asarray(self.w, dtype=float))
        u = np.atleast_1d(np.asarray(self.u, dtype=float))
        if x.shape[0] == 0:
            raise ValueError("initial configuration is empty")
        if w.shape != (x.shape[0],) or u.shape != (x.shape[0],):
            raise ValueError("one (w, u) pair per initial point is required")
        if np.any(w < 0) or np.any(u < 0):
            raise ValueError("initial weights and resources must be non-negative")
        if not w.sum() > 0:
            raise ValueError("initial weights sum to zero: no selectable point")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "u", u)

    @classmethod
    def from_points(cls, points: Sequence) -> "Initial":
        """Build from a list of ``(x, w, u)`` triples."""
        if not points:
            raise ValueError("initial configuration is empty")
        xs = [np.atleast_1d(np.asarray(p[0], dtype=float)) for p in points]
        return cls(np.vstack(xs), [p[1] for p in points], [p[2] for p in points])

    @property
    def d(self) -> int:
        return self.x.shape[1]

    @property
    def k(self) -> int:
        return self.x.shape[0]

    def mixture(self) -> MixtureLaw:
        """w-weighted mixture of the initial locations (the generation-0 law)."""
        return MixtureLaw([PointMass(x) for x in self.x], self.w)


@dataclass(frozen=True)
class StepEnvironment:
    n: int
    k: int
    w_scaled: np.ndarray
    u: np.ndarray
    log_scale: float
    joint: object
    xi: float = float("nan")
    tau: float = float("nan")

    @property
    def w(self) -> np.ndarray:
        return self.w_scaled * math.exp(self.log_scale)

    @property
    def attrs(self) -> list[tuple[float, float]]:
        return list(zip(self.w.tolist(), self.u.tolist()))

    @property
    def total_weight(self) -> float:
        return float(self.w_scaled.sum()) * math.exp(self.log_scale)


@dataclass(eq=False)
class EnvironmentSequence:
    """Column store for steps 1..N; ``envs[n]`` is step ``n`` (1-based)."""

    d: int
    k: np.ndarray
    offsets: np.ndarray
    w_scaled: np.ndarray
    u: np.ndarray
    log_scale: np.ndarray
    joint_id: np.ndarray
    joints: tuple
    xi: np.ndarray
    tau: np.ndarray
    _mixtures: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        n1 = self.k.shape[0]
        if self.offsets.shape[0] != n1 + 1 or self.log_scale.shape[0] != n1:
            raise ValueError("inconsistent environment columns")
        if np.any(self.w_scaled < 0) or np.any(self.u < 0):
            raise ValueError("weights and resources must be non-negative")
        for j in self.joints:
            if j.d != self.d:
                raise ValueError("joint law dimension does not match environment")
        self.k.setflags(write=False)
        self.w_scaled.setflags(write=False)
        self.u.setflags(write=False)

    def __len__(self) -> int:
        return self.k.shape[0] - 1

    def _check(self, n: int) -> int:
        if not 1 <= n <= len(self):
            raise IndexError(f"step {n} outside 1..{len(self)}")
        return n

    def __getitem__(self, n: int) -> StepEnvironment:
        n = self._check(n)
        a, b = self.offsets[n], self.offsets[n + 1]
        jid = self.joint_id[n]
        return StepEnvironment(
            n=n,
            k=int(self.k[n]),
            w_scaled=self.w_scaled[a:b],
            u=self.u[a:b],
            log_scale=float(self.log_scale[n]),
            joint=self.joints[jid] if jid >= 0 else None,
            xi=float(self.xi[n]),
            tau=float(self.tau[n]),
        )

    def __iter__(self):
        for n in range(1, len(self) + 1):
            yield self[n]

    def truncate(self, n: int) -> "EnvironmentSequence":
        """The first ``n`` steps."""
        if not 0 <= n <= len(self):
            raise IndexError(n)
        end = self.offsets[n + 1]
        return EnvironmentSequence(
            d=self.d,
            k=self.k[: n + 1].copy(),
            offsets=self.offsets[: n + 2].copy(),
            w_scaled=self.w_scaled[:end].copy(),
            u=self.u[:end].copy(),
            log_scale=self.log_scale[: n + 1].copy(),
            joint_id=self.joint_id[: n + 1].copy(),
            joints=self.joints,
            xi=self.xi[: n + 1].copy(),
            tau=self.tau[: n + 1].copy(),
        )

    def step_weights(self, n: int) -> np.ndarray:
        self._check(n)
        return self.w_scaled[self.offsets[n] : self.offsets[n + 1]]

    def step_resources(self, n: int) -> np.ndarray:
        self._check(n)
        return self.u[self.offsets[n] : self.offsets[n + 1]]

    def mixture(self, n: int) -> Optional[MixtureLaw]:
        """w-weighted mixture of step ``n``'s marginals (law with ch.f. f_n); None if w_n = 0."""
        self._check(n)
        w = self.step_weights(n)
        if self.k[n] == 0 or not w.sum() > 0:
            return None
        jid = int(self.joint_id[n])
        wn = w / w.sum()
        key = (jid, wn.tobytes())
        mix = self._mixtures.get(key)
        if mix is None:
            mix = MixtureLaw(self.joints[jid].marginals, wn)
            self._mixtures[key] = mix
        return mix

    def mixture_keys(self) -> np.ndarray:
        """Integer label per step such that equal labels mean equal mixture laws (-1: none)."""
        N = len(self)
        labels = np.full(N + 1, -1, dtype=np.int64)
        if N == 0:
            return labels
        starts = self.offsets[1:-1]
        wpad = np.append(self.w_scaled, 0.0)
        wsum = np.add.reduceat(wpad, starts)
        live = (self.k[1:] > 0) & (wsum > 0)
        uniform = live & (np.maximum.reduceat(wpad, starts) == np.minimum.reduceat(wpad, starts))
        # equal split: the joint law alone determines the mixture
        labels[1:][uniform] = self.joint_id[1:][uniform]
        seen: dict = {}
        base = len(self.joints)
        for n in np.flatnonzero(live & ~uniform) + 1:
            w = self.step_weights(int(n))
            key = (int(self.joint_id[n]), (w / w.sum()).tobytes())
            labels[n] = base + seen.setdefault(key, len(seen))
        return labels

    def mixture_moments(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-step mixture mean (N+1, d) and second-moment matrix (N+1, d, d); row 0 is zero."""
        labels = self.mixture_keys()
        mu = np.zeros((len(self) + 1, self.d))
        m = np.zeros((len(self) + 1, self.d, self.d))
        for lab in np.unique(labels[labels >= 0]):
            steps = np.flatnonzero(labels == lab)
            a, b = self.mixture(int(steps[0])).moments()
            mu[steps] = a
            m[steps] = b
        return mu, m


def _split_equally(total: np.ndarray, k: np.ndarray) -> np.ndarray:
    per = np.divide(total, k, out=np.zeros_like(total), where=k > 0)
    return np.repeat(per, k)


def materialize(
    regime: WeightRegime,
    n_steps: int,
    seed: int,
    d: int,
    displacement: Optional[DisplacementSpec] = None,
    offspring: Union[int, Generator] = 1,
    resource: Union[float, str] = 1.0,
) -> EnvironmentSequence:
    """Realize the environment for steps 1..n_steps.

    ``offspring`` gives k_n (a constant or a generator of non-negative
    integers).  Each step's total weight w_n is split equally among its k_n
    points; steps with k_n = 0 carry no weight.  ``resource`` is either a
    constant u per point or ``"weight"`` for u_{n,j} = w_{n,j} (only for
    regimes without exponential scaling).
    """
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(4)]
    rng_xi, rng_tau, rng_k, rng_sel = streams
    idx = np.arange(1, n_steps + 1, dtype=float)
    nan = np.full(n_steps, np.nan)

    if isinstance(regime, Explicit):
        return _materialize_explicit(regime, n_steps, d, displacement)

    if displacement is None:
        raise ValueError("displacement spec required for generated regimes")
    if displacement.d != d:
        raise ValueError(f"displacement dimension {displacement.d} != d={d}")

    if isinstance(offspring, (int, np.integer)):
        k = np.full(n_steps, int(offspring), dtype=np.int64)
    else:
        kv = _as_generator(offspring).sample(n_steps, rng_k)
        if np.any(kv < 0) or np.any(kv != np.round(kv)):
            raise ValueError("offspring counts must be non-negative integers")
        k = kv.astype(np.int64)
    if np.any(k < 0):
        raise ValueError("offspring counts must be non-negative")

    if isinstance(regime, PowerLaw):
        xi = regime.xi.sample(n_steps, rng_xi)
        w_step = xi * idx**regime.alpha * regime.slowly_varying(idx)
        log_scale = np.zeros(n_steps)
        tau = nan
    elif isinstance(regime, Exponential):
        xi = regime.xi.sample(n_steps, rng_xi)
        tau = regime.tau.sample(n_steps, rng_tau)
        log_scale = np.cumsum(tau)
        w_step = xi.copy()
    else:
        raise TypeError(f"unknown regime {regime!r}")
    w_step = np.where(k > 0, w_step, 0.0)

    if displacement.selector is None:
        sel = np.zeros(n_steps, dtype=np.int64)
    else:
        sel = displacement.selector.sample(n_steps, rng_sel).astype(np.int64)

    joints: list = []
    cache: dict = {}
    joint_id = np.full(n_steps, -1, dtype=np.int64)
    for key in sorted(set(zip(sel[k > 0].tolist(), k[k > 0].tolist()))):
        cache[key] = len(joints)
        joints.append(displacement.joint(*key))
    pos = np.flatnonzero(k > 0)
    joint_id[pos] = [cache[(s, kk)] for s, kk in zip(sel[pos].tolist(), k[pos].tolist())]

    w_flat = _split_equally(w_step, k)
    if resource == "weight":
        if isinstance(regime, Exponential):
            raise ValueError("resource='weight' is not supported with exponential scaling")
        u_flat = w_flat.copy()
    else:
        u_flat = np.full(w_flat.shape[0], float(resource))
        if float(resource) < 0:
            raise ValueError("resources must be non-negative")

    return EnvironmentSequence(
        d=d,
        k=np.concatenate([[0], k]),
        offsets=np.concatenate([[0, 0], np.cumsum(k)]),
        w_scaled=w_flat,
        u=u_flat,
        log_scale=np.concatenate([[0.0], log_scale]),
        joint_id=np.concatenate([[-1], joint_id]),
        joints=tuple(joints),
        xi=np.concatenate([[np.nan], xi]),
        tau=np.concatenate([[np.nan], tau]),
    )


def _materialize_explicit(regime: Explicit, n_steps: int, d: int, displacement) -> EnvironmentSequence:
    if len(regime.steps) < n_steps:
        raise ValueError(f"explicit regime lists {len(regime.steps)} steps, {n_steps} requested")
    steps = regime.steps[:n_steps]
    k = np.array([0] + [len(s.w) for s in steps], dtype=np.int64)
    joints: list = []
    ids: dict = {}
    joint_id = np.full(n_steps + 1, -1, dtype=np.int64)
    for n, s in enumerate(steps, start=1):
        if k[n] == 0:
            continue
        joint = s.joint
        if joint is None:
            if displacement is None:
                raise ValueError(f"step {n} has no joint law and no displacement spec is given")
            joint = displacement.joint(0, int(k[n]))
        if joint.k != k[n]:
            raise ValueError(f"step {n}: joint law has {joint.k} daughters, attributes list {k[n]}")
        joint_id[n] = ids.setdefault(id(joint), len(joints))
        if joint_id[n] == len(joints):
            joints.append(joint)
    flat_w = np.array([x for s in steps for x in s.w], dtype=float)
    flat_u = np.array([x for s in steps for x in s.u], dtype=float)
    return EnvironmentSequence(
        d=d,
        k=k,
        offsets=np.concatenate([[0], np.cumsum(k)]),
        w_scaled=flat_w,
        u=flat_u,
        log_scale=np.zeros(n_steps + 1),
        joint_id=joint_id,
        joints=tuple(joints),
        xi=np.full(n_steps + 1, np.nan),
        tau=np.full(n_steps + 1, np.nan),
    )


# ---------------------------------------------------------------------------
# Derived scalar sequences


class NoSelectablePointError(ValueError):
    """W_n = 0: no point can be chosen as a mother."""


@dataclass(frozen=True)
class ScalarSeries:
    """w_n, W_n, pi_n, u_n, U_n for n = 0..N.

    ``w_rel`` and ``W_rel`` are relative to ``exp(ref[n])`` where ``ref`` is
    the running maximum of the step log-scales, so they never overflow.
    """

    w_rel: np.ndarray
    W_rel: np.ndarray
    ref: np.ndarray
    pi: np.ndarray
    u: np.ndarray
    U: np.ndarray

    def __len__(self) -> int:
        return self.pi.shape[0]

    @property
    def w(self) -> np.ndarray:
        return self.w_rel * np.exp(self.ref)

    @property
    def W(self) -> np.ndarray:
        return self.W_rel * np.exp(self.ref)

    @property
    def log_W(self) -> np.ndarray:
        return np.log(self.W_rel) + self.ref


@njit(cache=True)
def _accumulate(w_step, log_scale, u_step):
    N = w_step.shape[0]
    w_rel = np.empty(N)
    W_rel = np.empty(N)
    ref = np.empty(N)
    U = np.empty(N)
    s, c = 0.0, 0.0
    su, cu = 0.0, 0.0
    r = log_scale[0]
    for n in range(N):
        if log_scale[n] > r:
            f = math.exp(r - log_scale[n])
            s *= f
            c *= f
            r = log_scale[n]
        x = w_step[n] * math.exp(log_scale[n] - r)
        # zero terms are skipped so the sums never move backwards
        if x != 0.0:
            y = x - c
            t = s + y
            c = (t - s) - y
            s = t
        if u_step[n] != 0.0:
            y = u_step[n] - cu
            t = su + y
            cu = (t - su) - y
            su = t
        w_rel[n] = x
        W_rel[n] = s
        ref[n] = r
        U[n] = su
    return w_rel, W_rel, ref, U


def step_totals(envs: EnvironmentSequence, initial: Initial) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Scaled w_n, log-scales and u_n for n = 0..N (generation 0 first)."""
    bounds = envs.offsets[1:]
    w = np.add.reduceat(np.append(envs.w_scaled, 0.0), bounds[:-1]) if len(envs) else np.zeros(0)
    u = np.add.reduceat(np.append(envs.u, 0.0), bounds[:-1]) if len(envs) else np.zeros(0)
    # reduceat returns the element itself for empty slices
    empty = envs.k[1:] == 0
    w = np.where(empty, 0.0, w)
    u = np.where(empty, 0.0, u)
    w_all = np.concatenate([[initial.w.sum()], w])
    u_all = np.concatenate([[initial.u.sum()], u])
    return w_all, envs.log_scale.astype(float), u_all


def scalar_series(envs: EnvironmentSequence, initial: Initial) -> ScalarSeries:
    """w_n, W_n, pi_n = w_n / W_n, u_n and U_n, accumulated with compensated sums."""
    w, log_scale, u = step_totals(envs, initial)
    w_rel, W_rel, ref, U = _accumulate(w, log_scale, u)
    if np.any(W_rel <= 0):
        bad = int(np.flatnonzero(W_rel <= 0)[0])
        raise NoSelectablePointError(f"W_{bad} = 0")
    pi = w_rel / W_rel
    pi[0] = 1.0
    return ScalarSeries(w_rel=w_rel, W_rel=W_rel, ref=ref, pi=pi, u=u, U=U)


def check_uep(u_series, n: int, eps_grid) -> dict[float, float]:
    """Ratios U_{floor(eps n)} / U_n for each eps (a diagnostic, no verdict)."""
    if n < 10:
        raise ValueError("n must be at least 10")
    u = np.asarray(u_series, dtype=float)
    if u.shape[0] < n + 1:
        raise ValueError(f"need u_0..u_{n}")
    U = np.cumsum(u[: n + 1])
    out = {}
    for eps in eps_grid:
        if not 0 < eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        out[float(eps)] = float(U[int(math.floor(eps * n))] / U[n])
    return out
