"""Trapped-ion noise model: motional Rabi decay, phonon heating walk,
coherent angle errors, stochastic Pauli channels, SPAM flips, crosstalk.

Units: time in microseconds, rates per microsecond, heating in phonons/us.
Ion labels are 1-based chain positions; per-ion arrays are indexed by label
(entry 0 unused).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numba as nb
import numpy as np
from scipy.special import i0e


def rabi_decay_f(x: float) -> float:
    """Motional decay factor f(x) = exp(-x) I0(x) of the mean Rabi frequency.

    Evaluated in exponentially scaled form so it is stable for large x.
    """
    if x < 0:
        raise ValueError(f"decay argument must be >= 0, got {x}")
    return float(i0e(x))


def effective_angle_1q(theta: float, u_i: float, n: int, n_bar0: float) -> float:
    """Actual rotation angle of a single-qubit x-y carrier rotation.

    The (1 + u_i*nbar0) factor compensates the average under-rotation of the
    thermal starting state, so the angle is exact on average at t = 0.
    """
    return theta * (1.0 + u_i * n_bar0) * rabi_decay_f(u_i * n)


def effective_angle_2q(
    theta: float, u_i: float, u_j: float, n: int, n_bar0: float
) -> float:
    """Actual XX rotation angle; both ions see the same phonon number n."""
    return (
        theta
        * (1.0 + u_i * n_bar0)
        * (1.0 + u_j * n_bar0)
        * rabi_decay_f(u_i * n)
        * rabi_decay_f(u_j * n)
    )


def sample_initial_phonons(n_bar0: float, rng: np.random.Generator) -> int:
    """Draw the phonon number of the lowest axial mode from a thermal state.

    Discrete thermal (geometric) law P(n) = nbar^n / (nbar+1)^(n+1).
    """
    if n_bar0 < 0:
        raise ValueError("mean phonon number must be >= 0")
    if n_bar0 == 0:
        return 0
    return int(rng.geometric(1.0 / (n_bar0 + 1.0))) - 1


@dataclass
class MotionalState:
    """Classical phonon count of the lowest axial mode, advanced in time."""

    n: int
    t: float = 0.0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("phonon count must be >= 0")


_MIX = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


@nb.njit(nb.uint64(nb.uint64), cache=True, inline="always")
def _splitmix64(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@nb.njit(nb.int64(nb.int64, nb.float64, nb.float64, nb.uint64), cache=True)
def _walk_kernel(n, total_dt, n_dot, seed):
    # Biased random walk: up with prob (n+1)*n_dot*dt, down with n*n_dot*dt,
    # sub-stepped so the up probability never exceeds 0.1.
    t = 0.0
    state = seed
    inv = 1.0 / 9007199254740992.0  # 2^-53
    while t < total_dt:
        dt = 0.1 / ((n + 1) * n_dot)
        if t + dt > total_dt:
            dt = total_dt - t
        p_up = (n + 1) * n_dot * dt
        p_dn = n * n_dot * dt
        state += _MIX
        u = (_splitmix64(state) >> np.uint64(11)) * inv
        if u < p_up:
            n += 1
        elif u < p_up + p_dn:
            n -= 1
        t += dt
    return n


@nb.njit(nb.int64[:](nb.int64, nb.float64, nb.float64, nb.uint64, nb.int64),
         cache=True, parallel=True)
def _walk_batch(n0, total_dt, n_dot, seed, trajectories):
    out = np.empty(trajectories, dtype=np.int64)
    for i in nb.prange(trajectories):
        out[i] = _walk_kernel(n0, total_dt, n_dot,
                              _splitmix64(seed + np.uint64(i + 1)))
    return out


def advance_phonons(
    state: MotionalState, dt: float, n_dot: float, rng: np.random.Generator
) -> MotionalState:
    """Advance the phonon number by dt of wall time via the heating walk."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    if dt == 0 or n_dot <= 0:
        return MotionalState(state.n, state.t + dt)
    seed = np.uint64(rng.integers(0, 2**64, dtype=np.uint64))
    n = int(_walk_kernel(state.n, dt, n_dot, seed))
    return MotionalState(n, state.t + dt)


def walk_batch(
    n0: int, dt: float, n_dot: float, seed: int, trajectories: int
) -> np.ndarray:
    """Many independent heating-walk trajectories (shared kernel, parallel)."""
    return _walk_batch(n0, dt, n_dot, np.uint64(seed), trajectories)


def advance_phonons_exact(
    state: MotionalState, dt: float, n_dot: float, rng: np.random.Generator
) -> MotionalState:
    """Advance the phonon number by sampling the walk's exact transition law.

    The walk is a linear birth-death process (rates (n+1)*n_dot up, n*n_dot
    down).  Its generating function factorizes as G(z) = thermal(tau) *
    g(z)^n0 with tau = n_dot*dt, so n(t+dt) = T + m + NB(m, p) where
    T ~ geometric with mean tau, m ~ Binomial(n0, p), p = 1/(1+tau).
    Distribution-identical to the sub-stepped walk, O(1) draws per call.
    """
    if dt < 0:
        raise ValueError("dt must be >= 0")
    if dt == 0 or n_dot <= 0:
        return MotionalState(state.n, state.t + dt)
    tau = n_dot * dt
    p = 1.0 / (1.0 + tau)
    n = int(rng.geometric(p)) - 1
    if state.n > 0:
        m = int(rng.binomial(state.n, p))
        n += m
        if m > 0:
            n += int(rng.negative_binomial(m, p))
    return MotionalState(n, state.t + dt)


@dataclass(frozen=True)
class GateDurations:
    """Wall-clock gate durations; single-qubit gates are compound SK1 pulses."""

    sq_segment_us: float = 13.0
    sq_segments: int = 3
    xx_us: float = 200.0
    measure_us: float = 0.0

    @property
    def sq_us(self) -> float:
        return self.sq_segment_us * self.sq_segments

    def __post_init__(self):
        if self.sq_segment_us <= 0 or self.xx_us <= 0 or self.sq_segments < 1:
            raise ValueError("gate durations must be positive")
        if self.measure_us < 0:
            raise ValueError("measure duration must be >= 0")


@dataclass(frozen=True)
class CrosstalkParams:
    """Residual XX rotations on spectator ions after each entangling gate.

    chi[i, k] is the carrier crosstalk ratio of ion k when ion i is addressed;
    a[i, j, k] is the relative XX angle picked up by pair (i, k) under the
    pulse sequence tailored to pair (i, j).  Label-indexed, entry 0 unused.
    """

    chi: np.ndarray
    a: np.ndarray

    def rotations(self, i: int, j: int, ions: Sequence[int]) -> list[tuple[tuple[int, int], float]]:
        out = []
        for k in ions:
            if k == i or k == j:
                continue
            c = self.chi[i, k] + self.chi[j, k]
            if c == 0.0:
                continue
            t1 = c * self.a[i, j, k]
            t2 = c * self.a[j, i, k]
            if t1 != 0.0:
                out.append(((i, k), t1))
            if t2 != 0.0:
                out.append(((j, k), t2))
        return out


def _pair_key(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class NoiseParams:
    """All calibrated error rates and timings for one simulated chain."""

    u: np.ndarray                      # per-ion motional coupling, label-indexed
    n_bar0: float = 660.0              # initial mean phonon number
    n_dot: float = 0.18                # heating rate, phonons/us
    p_z_default: float = 0.0           # Z flip per qubit per XX gate
    p_x_default: float = 0.0           # X flip per qubit per XX gate
    p_z_pair: dict = field(default_factory=dict)   # (i,j) -> override
    p_x_pair: dict = field(default_factory=dict)
    gamma_deph: float = 0.0            # idle dephasing rate, 1/us
    p_1to0: float = 0.0                # readout flip probabilities
    p_0to1: float = 0.0
    durations: GateDurations = field(default_factory=GateDurations)
    crosstalk: CrosstalkParams | None = None
    cooling_reset: bool = False        # resample n thermally before each gate
    motional_sampler: str = "exact"    # "exact" | "walk"

    def __post_init__(self):
        if np.any(np.asarray(self.u) < 0):
            raise ValueError("u entries must be >= 0")
        if self.n_bar0 < 0 or self.n_dot < 0 or self.gamma_deph < 0:
            raise ValueError("rates must be >= 0")
        for name in ("p_z_default", "p_x_default", "p_1to0", "p_0to1"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        for m in (self.p_z_pair, self.p_x_pair):
            for (i, j), v in m.items():
                if not 0.0 <= v <= 1.0:
                    raise ValueError(f"pair probability {v} outside [0, 1]")
                if (i, j) != _pair_key(i, j):
                    raise ValueError("pair maps must use sorted (i, j) keys")
        if self.motional_sampler not in ("exact", "walk"):
            raise ValueError("motional_sampler must be 'exact' or 'walk'")

    def p_z(self, i: int, j: int) -> float:
        return self.p_z_pair.get(_pair_key(i, j), self.p_z_default)

    def p_x(self, i: int, j: int) -> float:
        return self.p_x_pair.get(_pair_key(i, j), self.p_x_default)

    def u_of(self, ion: int) -> float:
        if ion >= len(self.u):
            raise ValueError(f"no motional coupling configured for ion {ion}")
        return float(self.u[ion])

    def is_noiseless(self) -> bool:
        return (
            not np.any(np.asarray(self.u) > 0)
            and self.p_z_default == 0
            and self.p_x_default == 0
            and not any(self.p_z_pair.values())
            and not any(self.p_x_pair.values())
            and self.gamma_deph == 0
            and self.p_1to0 == 0
            and self.p_0to1 == 0
            and self.crosstalk is None
        )


def apply_improved(params: NoiseParams) -> NoiseParams:
    """Projected-hardware transform: sympathetic cooling before every gate,
    Z errors cut 5x, X errors cut 4x.  The initial temperature (n_bar0) is
    unchanged.  Not idempotent: applying twice divides twice."""
    return replace(
        params,
        cooling_reset=True,
        p_z_default=params.p_z_default / 5.0,
        p_x_default=params.p_x_default / 4.0,
        p_z_pair={k: v / 5.0 for k, v in params.p_z_pair.items()},
        p_x_pair={k: v / 4.0 for k, v in params.p_x_pair.items()},
    )


def sample_gate_faults(gate, params: NoiseParams, rng: np.random.Generator):
    """Stochastic Pauli faults following one native gate.

    XX gates suffer independent Z (dephasing) and X (spin-motion) flips on
    each of their two ions; idle periods dephase with probability
    gamma_deph * t; x-y rotations carry no stochastic channel (their
    imperfection is the coherent angle decay).  Zero-probability channels
    consume no randomness, which keeps per-shot streams stable across
    equivalent execution paths.
    """
    kind = gate.kind
    faults: list[tuple[int, str]] = []
    if kind == "xx":
        i, j = gate.ions
        pz = params.p_z(i, j)
        px = params.p_x(i, j)
        for p, ion, pauli in (
            (pz, i, "Z"), (pz, j, "Z"), (px, i, "X"), (px, j, "X"),
        ):
            if p > 0 and rng.random() < p:
                faults.append((ion, pauli))
    elif kind == "idle":
        p = params.gamma_deph * gate.duration
        if p > 1.0:
            raise ValueError(f"idle dephasing probability {p} exceeds 1")
        if p > 0 and rng.random() < p:
            faults.append((gate.ions[0], "Z"))
    return faults


def sample_readout_flip(bit: int, params: NoiseParams, rng: np.random.Generator) -> int:
    """Asymmetric SPAM flip of one measured bit."""
    if bit not in (0, 1):
        raise ValueError("bit must be 0 or 1")
    p = params.p_1to0 if bit else params.p_0to1
    if p > 0 and rng.random() < p:
        return 1 - bit
    return bit


def crosstalk_rotations(
    i: int, j: int, theta: float, params: NoiseParams, ions: Sequence[int] | None = None
) -> list[tuple[tuple[int, int], float]]:
    """Residual two-qubit rotations on spectators after an XX(i, j) gate."""
    if params.crosstalk is None:
        raise ValueError("crosstalk parameters not configured")
    if ions is None:
        ions = range(1, params.crosstalk.chi.shape[0])
    return params.crosstalk.rotations(i, j, ions)


def fit_mean_phonon(
    eps_bar: Sequence[float],
    u: Sequence[float],
    weights: Sequence[float] | None = None,
) -> tuple[float, float]:
    """Least-squares fit of eps_bar = nbar * u through the origin.

    Returns (nbar, standard error).  The same routine fits heating slopes
    gamma_i = ndot * u_i.
    """
    e = np.asarray(eps_bar, dtype=float)
    uu = np.asarray(u, dtype=float)
    if e.shape != uu.shape or e.ndim != 1:
        raise ValueError("eps_bar and u must be equal-length 1-D sequences")
    w = np.ones_like(uu) if weights is None else np.asarray(weights, dtype=float)
    denom = np.sum(w * uu * uu)
    if denom == 0:
        raise ValueError("all-zero u: fit is degenerate")
    n_bar = float(np.sum(w * uu * e) / denom)
    dof = max(len(e) - 1, 1)
    resid = e - n_bar * uu
    sigma2 = float(np.sum(w * resid * resid) / dof)
    return n_bar, math.sqrt(sigma2 / denom)
