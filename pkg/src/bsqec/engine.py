"""Dense statevector execution of native circuits.

One complex128 amplitude vector per shot; stochastic noise enters as sampled
Pauli insertions and per-gate coherent angle decay, exactly mirroring the
trajectory picture of the noise model.

Throughput structure (exact algebraic identities, no approximations):

* consecutive single-qubit operations (gates, faults, idle dephasing) on one
  ion compose lazily in 2x2 space;
* an entangling gate absorbs the pending 2x2s of its ions and becomes a
  pending 4x4 on that ion pair; later single-qubit operations on either ion
  keep composing into it.  The 4x4 is applied in one kernel pass only when
  one of its ions meets a different partner;
* kernel passes touch only the 2^active prefix of the amplitude array,
  where `active` counts the qubits used so far;
* terminal measurement samples pending pairs by the chain rule (reduced
  4x4 contraction, then conditioning, shrinking the array 4x per pair)
  instead of materializing the fully transformed state.

Reproducibility: every shot draws from its own counter-based Philox stream
keyed by (master seed, stream tag, shot index), so results are independent
of execution order and worker count.  Zero-probability channels consume no
randomness; the per-shot draw sequence is fixed by the circuit structure.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from . import _kernels
from .circuits import NativeCircuit
from .noise import (
    MotionalState,
    NoiseParams,
    advance_phonons,
    advance_phonons_exact,
    effective_angle_1q,
    effective_angle_2q,
    sample_initial_phonons,
)

_I2 = np.eye(2, dtype=np.complex128)
_PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}
_SWAP_PERM = (0, 2, 1, 3)

_WARMED = False


def _ensure_warm():
    global _WARMED
    if not _WARMED:
        _kernels.warm_kernels()
        _WARMED = True


def r_matrix(axis_phi: float, theta: float) -> np.ndarray:
    """exp(-i theta/2 (cos(phi) X + sin(phi) Y))."""
    c = math.cos(theta / 2)
    s = math.sin(theta / 2)
    e = complex(math.cos(axis_phi), -math.sin(axis_phi))
    return np.array([[c, -1j * s * e], [-1j * s * e.conjugate(), c]],
                    dtype=np.complex128)


def rz_matrix(theta: float) -> np.ndarray:
    return np.array([[complex(math.cos(theta / 2), -math.sin(theta / 2)), 0],
                     [0, complex(math.cos(theta / 2), math.sin(theta / 2))]],
                    dtype=np.complex128)


def xx_matrix(theta: float) -> np.ndarray:
    """exp(-i theta X.X) on the local (v_i + 2*v_j) ordering."""
    c = math.cos(theta)
    s = math.sin(theta)
    m = np.zeros((4, 4), dtype=np.complex128)
    for k in range(4):
        m[k, k] = c
        m[k, 3 - k] = -1j * s
    return m


def _is_diag2(m: np.ndarray) -> bool:
    return m[0, 1] == 0 and m[1, 0] == 0


def _is_diag4(m: np.ndarray) -> bool:
    return not np.any(m[~np.eye(4, dtype=bool)])


def _swap_local(m: np.ndarray) -> np.ndarray:
    """Reorder a 4x4 from (v_j + 2*v_i) to (v_i + 2*v_j) local indexing."""
    return np.ascontiguousarray(m[np.ix_(_SWAP_PERM, _SWAP_PERM)])


def _kron22(hi: np.ndarray, lo: np.ndarray) -> np.ndarray:
    """kron(hi, lo) for 2x2 blocks, much faster than np.kron."""
    out = np.empty((4, 4), dtype=np.complex128)
    out[0:2, 0:2] = hi[0, 0] * lo
    out[0:2, 2:4] = hi[0, 1] * lo
    out[2:4, 0:2] = hi[1, 0] * lo
    out[2:4, 2:4] = hi[1, 1] * lo
    return out


class _Pair:
    """Pending two-qubit unitary; local index is v_a + 2*v_b."""

    __slots__ = ("a", "b", "m")

    def __init__(self, a: int, b: int, m: np.ndarray):
        self.a = a
        self.b = b
        self.m = m


class StateVector:
    """Amplitudes over a labeled ion set, with lazy 1q/2q composition."""

    def __init__(self, ions: Sequence[int]):
        _ensure_warm()
        self.ions = tuple(ions)
        self.n = len(self.ions)
        self.pos = {ion: k for k, ion in enumerate(self.ions)}
        self.amps = np.zeros(1 << self.n, dtype=np.complex128)
        self.amps[0] = 1.0
        self._p1: list[np.ndarray | None] = [None] * self.n
        self._pair: list[_Pair | None] = [None] * self.n
        self._active = 0
        self._norm2 = 1.0

    # -- pending management -------------------------------------------------

    def _check_norm(self):
        if abs(math.sqrt(self._norm2) - 1.0) > 1e-9:
            raise RuntimeError(f"state norm drifted to {math.sqrt(self._norm2)}")

    def _limit_for(self, *positions: int) -> int:
        top = max(positions)
        if top >= self._active:
            self._active = top + 1
        return 1 << self._active

    def _pend1(self, p: int, mat: np.ndarray):
        pair = self._pair[p]
        if pair is not None:
            lift = _kron22(mat, _I2) if p == pair.b else _kron22(_I2, mat)
            pair.m = lift @ pair.m
            return
        cur = self._p1[p]
        self._p1[p] = mat if cur is None else mat @ cur

    def _flush_pair(self, pair: _Pair):
        self._pair[pair.a] = None
        self._pair[pair.b] = None
        limit = self._limit_for(pair.a, pair.b)
        self._norm2 = _kernels.apply_2q(self.amps, limit, pair.a, pair.b,
                                        np.ascontiguousarray(pair.m))
        self._check_norm()

    def _flush_1q(self, p: int):
        m = self._p1[p]
        self._p1[p] = None
        limit = self._limit_for(p)
        self._norm2 = _kernels.apply_1q(self.amps, limit, p,
                                        m[0, 0], m[0, 1], m[1, 0], m[1, 1])
        self._check_norm()

    def _pairs(self) -> list[_Pair]:
        seen: list[_Pair] = []
        for p in range(self.n):
            pair = self._pair[p]
            if pair is not None and pair.a == p:
                seen.append(pair)
        return seen

    # -- operations ----------------------------------------------------------

    def apply_rotation(self, ion: int, axis_phi: float, theta: float):
        self._pend1(self.pos[ion], r_matrix(axis_phi, theta))

    def apply_rz(self, ion: int, theta: float):
        self._pend1(self.pos[ion], rz_matrix(theta))

    def apply_pauli(self, ion: int, pauli: str):
        self._pend1(self.pos[ion], _PAULI[pauli])

    def apply_two_qubit(self, i: int, j: int, m4: np.ndarray):
        """Compose a 4x4 (local index v_i + 2*v_j) into the pending structure."""
        if i == j:
            raise ValueError("two-qubit op needs distinct ions")
        pi, pj = self.pos[i], self.pos[j]
        pair_i, pair_j = self._pair[pi], self._pair[pj]
        if pair_i is not None and pair_i is pair_j:
            pair_i.m = (m4 if pair_i.a == pi else _swap_local(m4)) @ pair_i.m
            return
        if pair_i is not None:
            self._flush_pair(pair_i)
        if pair_j is not None:
            self._flush_pair(pair_j)
        a, b = self._p1[pi], self._p1[pj]
        if a is not None or b is not None:
            m4 = m4 @ _kron22(b if b is not None else _I2,
                              a if a is not None else _I2)
            self._p1[pi] = None
            self._p1[pj] = None
        pair = _Pair(pi, pj, m4)
        self._pair[pi] = pair
        self._pair[pj] = pair

    def apply_xx(self, i: int, j: int, theta: float):
        self.apply_two_qubit(i, j, xx_matrix(theta))

    # -- flush / readout -----------------------------------------------------

    def flush(self, skip_diagonal: bool = False):
        """Apply pendings to the amplitudes.

        With skip_diagonal, pendings that are diagonal unitaries are dropped
        instead (measurement probabilities are unaffected by them); only
        valid immediately before a terminal measurement.
        """
        for pair in self._pairs():
            if skip_diagonal and _is_diag4(pair.m):
                self._pair[pair.a] = None
                self._pair[pair.b] = None
            else:
                self._flush_pair(pair)
        for p in range(self.n):
            if self._p1[p] is None:
                continue
            if skip_diagonal and _is_diag2(self._p1[p]):
                self._p1[p] = None
            else:
                self._flush_1q(p)

    def state(self) -> np.ndarray:
        """Exact current amplitudes (flushes everything)."""
        self.flush()
        return self.amps.copy()

    def measure_all(self, rng: np.random.Generator) -> int:
        """Sample one Z-basis outcome over all ions; consumes the state.

        Pending pair unitaries are sampled by the chain rule: one draw per
        pending pair (sorted by position), then one draw for the remaining
        qubits when any are left.  The draw count is fixed by the circuit
        structure, never by the noise realization.
        """
        for p in range(self.n):
            if self._pair[p] is None and self._p1[p] is not None:
                if _is_diag2(self._p1[p]):
                    self._p1[p] = None
                else:
                    self._flush_1q(p)
        if abs(math.sqrt(self._norm2) - 1.0) > 1e-6:
            raise RuntimeError("norm deviation too large to measure")
        pairs = sorted(self._pairs(), key=lambda pr: min(pr.a, pr.b))
        limit = (1 << self._active) if not pairs else self._limit_for(
            *(q for pr in pairs for q in (pr.a, pr.b)))
        w = self.amps
        cur = list(range(self._active))
        outcome = 0
        norm2 = self._norm2
        red = np.zeros((4, 4), dtype=np.complex128)
        for pair in pairs:
            ca = cur.index(pair.a)
            cb = cur.index(pair.b)
            _kernels.pair_reduce(w, limit, ca, cb, red)
            m = pair.m
            q = np.maximum(np.einsum("xa,ab,xb->x", m, red, m.conj()).real, 0.0)
            u = rng.random() * q.sum()
            acc = 0.0
            x = 3
            for cand in range(4):
                acc += q[cand]
                if acc > u:
                    x = cand
                    break
            out = np.empty(limit >> 2, dtype=np.complex128)
            norm2 = _kernels.pair_condition(w, limit, ca, cb,
                                            np.ascontiguousarray(m[x]), out)
            w = out
            limit >>= 2
            outcome |= (x & 1) << pair.a
            outcome |= (x >> 1) << pair.b
            cur.remove(pair.a)
            cur.remove(pair.b)
            self._pair[pair.a] = None
            self._pair[pair.b] = None
        if limit > 1:
            u = rng.random() * norm2
            idx = int(_kernels.sample_index(w, limit, u))
            for r, p in enumerate(cur):
                outcome |= ((idx >> r) & 1) << p
        return outcome


@dataclass(frozen=True)
class SeedPolicy:
    """Counter-based stream derivation: (master seed, stream tag, shot)."""

    master_seed: int

    def key(self, stream: str, shot_index: int) -> list[int]:
        if not 0 <= shot_index < 1 << 48:
            raise ValueError("shot index out of range")
        tag = int.from_bytes(hashlib.sha256(stream.encode()).digest()[:2], "little")
        return [self.master_seed & ((1 << 64) - 1), (tag << 48) | shot_index]

    def rng(self, stream: str, shot_index: int) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=self.key(stream, shot_index)))


@dataclass(frozen=True)
class ShotRecord:
    """Measured bitstrings per block (bit k = grid position k+1 of the block),
    plus derived per-round syndromes and optional noise bookkeeping."""

    bits: dict
    syndromes: tuple = ()
    fault_log: tuple | None = None
    phonon_trace: tuple | None = None


def _block_masks(circuit: NativeCircuit, bit_of: dict[int, int]) -> dict[str, int]:
    out = {}
    for name, block in circuit.blocks.items():
        m = 0
        for k, ion in enumerate(block):
            m |= bit_of[ion] << k
        out[name] = m
    return out


def _round_syndromes(circuit: NativeCircuit, bits: dict[str, int]) -> tuple:
    rounds = circuit.meta.get("rounds", ())
    return tuple((bits[r] & 1, (bits[r] >> 1) & 1) for r in rounds)


def _simulate_gates(
    sv: StateVector,
    circuit: NativeCircuit,
    params: NoiseParams,
    rng: np.random.Generator,
    fault_log: list | None = None,
    phonon_trace: list | None = None,
) -> None:
    """Run all unitary gates with noise; leaves the measurement to the caller.

    Per-gate draw order is fixed (idles, motional update, channel faults) so
    shot streams are stable.
    """
    u_active = any(params.u_of(ion) > 0 for ion in circuit.ions)
    mot = None
    n_now = 0
    if u_active and not params.cooling_reset:
        mot = MotionalState(sample_initial_phonons(params.n_bar0, rng))
        advance = (advance_phonons_exact if params.motional_sampler == "exact"
                   else advance_phonons)
    for gi, g in enumerate(circuit.gates):
        for ion, _istart, idur in circuit.idles_before[gi]:
            p = params.gamma_deph * idur
            if p > 1.0:
                raise ValueError(f"idle dephasing probability {p} exceeds 1")
            if p > 0 and rng.random() < p:
                sv.apply_pauli(ion, "Z")
                if fault_log is not None:
                    fault_log.append((gi, ion, "Z"))
        if g.kind == "measure":
            return
        if u_active and g.kind in ("r", "xx"):
            if params.cooling_reset:
                n_now = sample_initial_phonons(params.n_bar0, rng)
            else:
                dt = g.start - mot.t
                if dt > 0:
                    mot = advance(mot, dt, params.n_dot, rng)
                n_now = mot.n
            if phonon_trace is not None:
                phonon_trace.append(n_now)
        if g.kind == "r":
            theta = g.angle
            if u_active:
                theta = effective_angle_1q(theta, params.u_of(g.ions[0]),
                                           n_now, params.n_bar0)
            sv.apply_rotation(g.ions[0], g.axis_phi, theta)
        elif g.kind == "rz":
            sv.apply_rz(g.ions[0], g.angle)
        elif g.kind == "xx":
            i, j = g.ions
            theta = g.angle
            if u_active:
                theta = effective_angle_2q(theta, params.u_of(i),
                                           params.u_of(j), n_now, params.n_bar0)
            sv.apply_xx(i, j, theta)
            pz = params.p_z(i, j)
            px = params.p_x(i, j)
            for p, ion, pauli in ((pz, i, "Z"), (pz, j, "Z"),
                                  (px, i, "X"), (px, j, "X")):
                if p > 0 and rng.random() < p:
                    sv.apply_pauli(ion, pauli)
                    if fault_log is not None:
                        fault_log.append((gi, ion, pauli))
            if params.crosstalk is not None:
                for (a, b), ang in params.crosstalk.rotations(i, j, circuit.ions):
                    sv.apply_xx(a, b, ang)
        else:
            raise ValueError(f"unknown gate kind {g.kind!r}")


def run_shot(
    circuit: NativeCircuit,
    params: NoiseParams,
    rng: np.random.Generator,
    collect_fault_log: bool = False,
    collect_phonon_trace: bool = False,
) -> ShotRecord:
    """One noisy trajectory: gates, terminal measurement, SPAM flips."""
    if not circuit.scheduled:
        raise ValueError("circuit must be scheduled")
    sv = StateVector(circuit.ions)
    fault_log = [] if collect_fault_log else None
    trace = [] if collect_phonon_trace else None
    _simulate_gates(sv, circuit, params, rng, fault_log, trace)
    outcome = sv.measure_all(rng)
    bit_of = {}
    for ion in circuit.ions:
        b = (outcome >> sv.pos[ion]) & 1
        p = params.p_1to0 if b else params.p_0to1
        if p > 0 and rng.random() < p:
            b ^= 1
        bit_of[ion] = b
    bits = _block_masks(circuit, bit_of)
    return ShotRecord(
        bits=bits,
        syndromes=_round_syndromes(circuit, bits),
        fault_log=tuple(fault_log) if fault_log is not None else None,
        phonon_trace=tuple(trace) if trace is not None else None,
    )


def run_exact(
    circuit: NativeCircuit,
    faults: Iterable[tuple[int, int, str]] = (),
) -> np.ndarray:
    """Deterministic noiseless run with inserted Pauli faults.

    Each fault is (location, ion, pauli): location g >= 0 applies after gate
    g (at the measurement gate: just before readout), -1 applies before the
    first gate.  Returns the exact final amplitudes.
    """
    by_loc = defaultdict(list)
    for loc, ion, pauli in faults:
        by_loc[loc].append((ion, pauli))
    sv = StateVector(circuit.ions)
    for ion, pauli in by_loc.get(-1, ()):
        sv.apply_pauli(ion, pauli)
    for gi, g in enumerate(circuit.gates):
        if g.kind == "r":
            sv.apply_rotation(g.ions[0], g.axis_phi, g.angle)
        elif g.kind == "rz":
            sv.apply_rz(g.ions[0], g.angle)
        elif g.kind == "xx":
            sv.apply_xx(*g.ions, g.angle)
        elif g.kind != "measure":
            raise ValueError(f"unknown gate kind {g.kind!r}")
        for ion, pauli in by_loc.get(gi, ()):
            sv.apply_pauli(ion, pauli)
    return sv.state()


def outcome_distribution(amps: np.ndarray, tol: float = 1e-16) -> tuple[np.ndarray, np.ndarray]:
    """Outcome indices with non-negligible Born probability."""
    p = np.abs(amps) ** 2
    idx = np.flatnonzero(p > tol)
    return idx, p[idx]


def bits_of_outcome(circuit: NativeCircuit, pos: dict[int, int], outcome: int) -> dict[str, int]:
    bit_of = {ion: (outcome >> pos[ion]) & 1 for ion in circuit.ions}
    return _block_masks(circuit, bit_of)


def inject_fault_run(
    circuit: NativeCircuit,
    location: int,
    pauli: dict[int, str],
    decode_error: Callable[[dict[str, int]], bool],
) -> float:
    """Exact probability of logical error under one inserted fault.

    pauli maps ion -> 'X'|'Y'|'Z' and may touch at most two of the located
    gate's ions (any single ion at the pre-circuit and measurement
    boundaries).  No sampling: the decode is evaluated on every outcome with
    nonzero Born probability.
    """
    n_gates = len(circuit.gates)
    if not -1 <= location < n_gates:
        raise ValueError(f"location {location} outside gate boundaries")
    if len(pauli) == 0 or len(pauli) > 2:
        raise ValueError("fault must touch 1 or 2 ions")
    if location >= 0:
        g = circuit.gates[location]
        allowed = set(circuit.ions) if g.kind == "measure" else set(g.ions)
        if not set(pauli) <= allowed:
            raise ValueError(f"fault support {set(pauli)} outside gate ions {allowed}")
    amps = run_exact(circuit, [(location, ion, p) for ion, p in pauli.items()])
    pos = {ion: k for k, ion in enumerate(circuit.ions)}
    idx, probs = outcome_distribution(amps)
    p_err = 0.0
    for outcome, p in zip(idx, probs):
        if decode_error(bits_of_outcome(circuit, pos, int(outcome))):
            p_err += float(p)
    return p_err


@dataclass
class RecordBatch:
    """Column-wise store of many shot records from one circuit."""

    circuit_kind: str
    blocks: dict = field(default_factory=dict)      # name -> uint32 array
    rounds: tuple = ()

    @property
    def shots(self) -> int:
        first = next(iter(self.blocks.values()))
        return len(first)

    def record(self, i: int) -> ShotRecord:
        bits = {name: int(col[i]) for name, col in self.blocks.items()}
        syn = tuple((bits[r] & 1, (bits[r] >> 1) & 1) for r in self.rounds)
        return ShotRecord(bits=bits, syndromes=syn)

    def __iter__(self) -> Iterator[ShotRecord]:
        for i in range(self.shots):
            yield self.record(i)

    def dump(self, path: str, meta: dict | None = None) -> None:
        """Versioned JSON-lines dump for offline re-decoding."""
        with open(path, "w") as f:
            header = {
                "format": "bsqec-shot-records",
                "version": 1,
                "circuit_kind": self.circuit_kind,
                "rounds": list(self.rounds),
                "blocks": list(self.blocks),
                "shots": self.shots,
            }
            if meta:
                header["meta"] = meta
            f.write(json.dumps(header) + "\n")
            names = list(self.blocks)
            for i in range(self.shots):
                row = {name: int(self.blocks[name][i]) for name in names}
                f.write(json.dumps({"shot": i, "bits": row}) + "\n")

    @classmethod
    def load(cls, path: str) -> "RecordBatch":
        with open(path) as f:
            header = json.loads(f.readline())
            if header.get("format") != "bsqec-shot-records" or header.get("version") != 1:
                raise ValueError("unrecognized record stream format")
            cols = {name: np.zeros(header["shots"], dtype=np.uint32)
                    for name in header["blocks"]}
            for line in f:
                row = json.loads(line)
                for name, v in row["bits"].items():
                    cols[name][row["shot"]] = v
        return cls(circuit_kind=header["circuit_kind"], blocks=cols,
                   rounds=tuple(header["rounds"]))


def _mc_chunk(
    circuit: NativeCircuit,
    params: NoiseParams,
    policy: SeedPolicy,
    stream: str,
    lo: int,
    hi: int,
) -> dict[str, np.ndarray]:
    cols = {name: np.zeros(hi - lo, dtype=np.uint32) for name in circuit.blocks}
    for i in range(lo, hi):
        rec = run_shot(circuit, params, policy.rng(stream, i))
        for name, v in rec.bits.items():
            cols[name][i - lo] = v
    return cols


def _mc_chunk_star(args):
    return _mc_chunk(*args)


def default_workers() -> int:
    env = os.environ.get("BSQEC_WORKERS")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def run_monte_carlo(
    circuit: NativeCircuit,
    params: NoiseParams,
    shots: int,
    policy: SeedPolicy,
    stream: str,
    workers: int | None = None,
    dump_path: str | None = None,
) -> RecordBatch:
    """Independent noisy shots under the seed policy; worker-count invariant.

    With a fully noiseless configuration (and more than one shot) the final
    state is simulated once, flushed, and only a single readout draw is
    taken per shot; a single shot always goes through run_shot verbatim.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    _ensure_warm()
    workers = workers if workers else default_workers()
    rounds = tuple(circuit.meta.get("rounds", ()))

    if params.is_noiseless() and shots > 1:
        sv = StateVector(circuit.ions)
        _simulate_gates(sv, circuit, params,
                        np.random.Generator(np.random.Philox(key=[0, 0])))
        sv.flush(skip_diagonal=True)
        limit = 1 << sv._active
        cols = {name: np.zeros(shots, dtype=np.uint32) for name in circuit.blocks}
        for i in range(shots):
            u = policy.rng(stream, i).random() * sv._norm2
            outcome = int(_kernels.sample_index(sv.amps, limit, u))
            bit_of = {ion: (outcome >> sv.pos[ion]) & 1 for ion in circuit.ions}
            for name, v in _block_masks(circuit, bit_of).items():
                cols[name][i] = v
        batch = RecordBatch(circuit.meta.get("kind", "?"), cols, rounds)
    elif workers == 1 or shots < 64:
        cols = _mc_chunk(circuit, params, policy, stream, 0, shots)
        batch = RecordBatch(circuit.meta.get("kind", "?"), cols, rounds)
    else:
        import multiprocessing as mp

        bounds = np.linspace(0, shots, workers * 4 + 1, dtype=int)
        tasks = [(circuit, params, policy, stream, int(a), int(b))
                 for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        ctx = mp.get_context("fork")
        with ctx.Pool(workers) as pool:
            parts = pool.map(_mc_chunk_star, tasks)
        cols = {name: np.concatenate([p[name] for p in parts])
                for name in circuit.blocks}
        batch = RecordBatch(circuit.meta.get("kind", "?"), cols, rounds)

    if dump_path:
        batch.dump(dump_path, meta={"stream": stream,
                                    "master_seed": policy.master_seed})
    return batch
