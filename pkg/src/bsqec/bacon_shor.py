"""Pure algebra of the [[9,1,3]] Bacon-Shor subsystem code.

Qubits are labeled 1..9 on a 3x3 grid, row-major:

    1 2 3      row 0
    4 5 6      row 1
    7 8 9      row 2

Z-type stabilizer generators are S1 = Z1..Z6 and S2 = Z4..Z9 (adjacent row
pairs); X-type generators are adjacent column pairs.  Gauge operators are the
vertical ZZ pairs Z_i Z_{i+3} and the horizontal XX pairs X_i X_{i+1}.
Logical operators: Z_L = Z1 Z2 Z3 (any row), X_L = X1 X4 X7 (any column).

Pauli operators are represented by support masks only: phases are dropped
everywhere because all decoding here is phase-insensitive.  Bit (q-1) of a
mask corresponds to qubit q.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

N_QUBITS = 9
FULL_MASK = (1 << N_QUBITS) - 1

ROW_MASKS = (0b000000111, 0b000111000, 0b111000000)
COL_MASKS = (0b001001001, 0b010010010, 0b100100100)

# Z-type stabilizer generators (supports), X-type analogues.
S1_MASK = ROW_MASKS[0] | ROW_MASKS[1]
S2_MASK = ROW_MASKS[1] | ROW_MASKS[2]
SX1_MASK = COL_MASKS[0] | COL_MASKS[1]
SX2_MASK = COL_MASKS[1] | COL_MASKS[2]

Z_LOGICAL_MASK = ROW_MASKS[0]
X_LOGICAL_MASK = COL_MASKS[0]

# Gauge generators: Z_i Z_{i+3} (i = 1..6) and X_i X_{i+1} (i = 1,2,4,5,7,8).
Z_GAUGE_MASKS = tuple((1 << (i - 1)) | (1 << (i + 2)) for i in range(1, 7))
X_GAUGE_MASKS = tuple((1 << (i - 1)) | (1 << i) for i in (1, 2, 4, 5, 7, 8))


def mask_of(qubits: Iterable[int]) -> int:
    """Support mask for a set of qubit labels in 1..9."""
    m = 0
    for q in qubits:
        if not 1 <= q <= N_QUBITS:
            raise ValueError(f"qubit label {q} outside 1..{N_QUBITS}")
        m |= 1 << (q - 1)
    return m


def parity(mask: int) -> int:
    return mask.bit_count() & 1


def weight(x_bits: int, z_bits: int) -> int:
    """Number of qubits touched by a Pauli with the given supports."""
    return (x_bits | z_bits).bit_count()


@dataclass(frozen=True)
class PauliMask:
    """Phase-free n-qubit Pauli: X support and Z support as 9-bit masks.

    Composition is bitwise XOR of the supports (Y = overlap of both masks).
    """

    x_bits: int = 0
    z_bits: int = 0

    def __post_init__(self):
        if self.x_bits & ~FULL_MASK or self.z_bits & ~FULL_MASK:
            raise ValueError("mask uses bits outside qubits 1..9")

    def compose(self, other: "PauliMask") -> "PauliMask":
        return PauliMask(self.x_bits ^ other.x_bits, self.z_bits ^ other.z_bits)

    __mul__ = compose

    @property
    def weight(self) -> int:
        return weight(self.x_bits, self.z_bits)

    def is_identity(self) -> bool:
        return self.x_bits == 0 and self.z_bits == 0

    @classmethod
    def x_on(cls, qubits: Iterable[int]) -> "PauliMask":
        return cls(x_bits=mask_of(qubits))

    @classmethod
    def z_on(cls, qubits: Iterable[int]) -> "PauliMask":
        return cls(z_bits=mask_of(qubits))


@dataclass(frozen=True)
class Syndrome:
    """Anticommutation parities of an error with the stabilizer generators.

    s1/s2 flag the Z-type generators (flipped by X support); sx1/sx2 the
    X-type generators and are only filled in on request.
    """

    s1: int
    s2: int
    sx1: int | None = None
    sx2: int | None = None

    @property
    def pair(self) -> tuple[int, int]:
        return (self.s1, self.s2)

    @property
    def label(self) -> str:
        return f"{self.s1}{self.s2}"


SYNDROME_LABELS = ("00", "10", "11", "01")  # order used in result tables


def syndrome_of(error: PauliMask, include_x: bool = False) -> Syndrome:
    """Syndrome of a Pauli error against the four stabilizer generators."""
    s1 = parity(error.x_bits & S1_MASK)
    s2 = parity(error.x_bits & S2_MASK)
    if not include_x:
        return Syndrome(s1, s2)
    sx1 = parity(error.z_bits & SX1_MASK)
    sx2 = parity(error.z_bits & SX2_MASK)
    return Syndrome(s1, s2, sx1, sx2)


def _as_mask(bits: Sequence[int] | int) -> int:
    if isinstance(bits, (int, np.integer)):
        m = int(bits)
        if m & ~FULL_MASK:
            raise ValueError("bit mask outside 9 qubits")
        return m
    if len(bits) != N_QUBITS:
        raise ValueError(f"expected exactly {N_QUBITS} bits, got {len(bits)}")
    return sum((1 if b else 0) << i for i, b in enumerate(bits))


def decode_z_readout(bits: Sequence[int] | int) -> int:
    """Logical Z bit from a transversal Z-basis readout.

    Majority vote among the three row parities; bit i of an integer argument
    is qubit i+1's measured bit.
    """
    m = _as_mask(bits)
    flips = sum(parity(m & r) for r in ROW_MASKS)
    return 1 if flips >= 2 else 0


def decode_x_readout(bits: Sequence[int] | int) -> int:
    """Logical X bit from a transversal X-basis readout (column parities)."""
    m = _as_mask(bits)
    flips = sum(parity(m & c) for c in COL_MASKS)
    return 1 if flips >= 2 else 0


def data_syndrome_from_z_readout(bits: Sequence[int] | int) -> tuple[int, int]:
    """(s1, s2) stabilizer parities computed classically from a Z readout."""
    m = _as_mask(bits)
    return parity(m & S1_MASK), parity(m & S2_MASK)


def data_syndrome_from_x_readout(bits: Sequence[int] | int) -> tuple[int, int]:
    """X-type stabilizer parities from an X-basis readout."""
    m = _as_mask(bits)
    return parity(m & SX1_MASK), parity(m & SX2_MASK)


def _span(generators: Sequence[int]) -> np.ndarray:
    out = {0}
    for g in generators:
        out |= {v ^ g for v in out}
    return np.array(sorted(out), dtype=np.uint32)

# Support image of the full gauge-plus-stabilizer group.  The stabilizer
# generators are products of gauge generators, so the 12 gauge supports span
# everything: 64 X masks x 64 Z masks.
_X_SPAN = _span(X_GAUGE_MASKS)
_Z_SPAN = _span(Z_GAUGE_MASKS)
_XG, _ZG = np.meshgrid(_X_SPAN, _Z_SPAN, indexing="ij")
_XG = _XG.ravel()
_ZG = _ZG.ravel()


def gauge_reduce(error: PauliMask) -> PauliMask:
    """Canonical minimum-weight representative of error * (gauge group).

    Exhaustive search over the 4096-element support group; ties broken by
    lowest (x_bits, z_bits) so the result is deterministic.
    """
    xs = _XG ^ np.uint32(error.x_bits)
    zs = _ZG ^ np.uint32(error.z_bits)
    w = np.bitwise_count(xs | zs).astype(np.uint32)
    key = (w << np.uint32(18)) | (xs << np.uint32(9)) | zs
    best = int(np.argmin(key))
    return PauliMask(int(xs[best]), int(zs[best]))


def gauge_equivalent(a: PauliMask, b: PauliMask) -> bool:
    return gauge_reduce(a.compose(b)).is_identity()


@dataclass(frozen=True)
class CorrectionTable:
    """Syndrome -> X-type correction lookup for one decoder variant."""

    variant: str
    map: dict[tuple[int, int], PauliMask]

    def correction(self, s1: int, s2: int) -> PauliMask:
        return self.map[(s1, s2)]


TABLE_VARIANTS = ("single_shot_round1", "adaptive_round2", "adaptive2_round1")


def build_correction_tables() -> dict[str, CorrectionTable]:
    """Derive all correction tables by brute force.

    Each syndrome is mapped to the lowest-index single-qubit X whose syndrome
    matches (identity for the trivial syndrome).  The three decoder variants
    share the derived map; they differ only in when they are consulted.  The
    derivation is certified by the weight-1 closure property rather than
    transcribed from any published listing.
    """
    table: dict[tuple[int, int], PauliMask] = {(0, 0): PauliMask()}
    for q in range(1, N_QUBITS + 1):
        e = PauliMask.x_on([q])
        s = syndrome_of(e).pair
        if s not in table:
            table[s] = e
    missing = {(s1, s2) for s1 in (0, 1) for s2 in (0, 1)} - set(table)
    if missing:
        raise RuntimeError(f"no weight<=1 preimage for syndromes {missing}")
    # Certify: every weight-1 X error is cancelled by its correction up to gauge.
    for q in range(1, N_QUBITS + 1):
        e = PauliMask.x_on([q])
        corr = table[syndrome_of(e).pair]
        if not gauge_reduce(e.compose(corr)).is_identity():
            raise RuntimeError(f"correction table fails closure at qubit {q}")
    return {v: CorrectionTable(v, dict(table)) for v in TABLE_VARIANTS}


_TABLES = None


def correction_tables() -> dict[str, CorrectionTable]:
    """Cached, certified correction tables."""
    global _TABLES
    if _TABLES is None:
        _TABLES = build_correction_tables()
    return _TABLES
