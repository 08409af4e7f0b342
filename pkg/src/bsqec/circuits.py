"""Experiment circuits over the native trapped-ion gate set.

Native operations: single-qubit rotations about axes in the x-y plane
(R(phi, theta) = exp(-i theta/2 (cos phi X + sin phi Y))), virtual Z
rotations, two-qubit XX(theta) = exp(-i theta X.X) entangling gates, and a
terminal Z-basis measurement of every ion.  All gates are applied serially;
schedule() assigns start times and derives the per-ion idle intervals used
for idle-dephasing accounting.

Ion labels: data qubits 1-9 (grid position = label), Shor ancillas 10-13,
Steane ancilla block 10-18 (grid position p at ion 9+p).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .noise import GateDurations

PI = math.pi

EXPERIMENT_KINDS = (
    "direct_prep",
    "shor_E1",
    "shor_E2",
    "steane_plus",
    "steane_zero",
    "steane_no_cnot_plus",
    "steane_no_cnot_zero",
    "bell_zz",
    "bell_xx",
)

# Data-qubit coupling order of the Shor stabilizer measurements.  Pairing
# gauge partners consecutively makes every ancilla-fault suffix product a
# gauge times at most one data error.
S1_COUPLING_ORDER = (1, 4, 2, 5, 3, 6)
S2_COUPLING_ORDER = (4, 7, 5, 8, 6, 9)


@dataclass(frozen=True)
class NativeGate:
    kind: str                       # "r" | "rz" | "xx" | "measure"
    ions: tuple[int, ...]
    angle: float | None = None
    axis_phi: float | None = None
    start: float | None = None      # us, filled by schedule()
    duration: float | None = None

    def describe(self) -> str:
        if self.kind == "r":
            return f"R(phi={self.axis_phi:+.3f}, theta={self.angle:+.3f}) @ {self.ions[0]}"
        if self.kind == "rz":
            return f"RZ({self.angle:+.3f}) @ {self.ions[0]}"
        if self.kind == "xx":
            return f"XX({self.angle:+.3f}) @ {self.ions}"
        return f"{self.kind} @ {self.ions}"


def r(ion: int, axis_phi: float, angle: float) -> NativeGate:
    return NativeGate("r", (ion,), angle=angle, axis_phi=axis_phi)


def ry(ion: int, angle: float) -> NativeGate:
    return r(ion, PI / 2, angle)


def rx(ion: int, angle: float) -> NativeGate:
    return r(ion, 0.0, angle)


def xx(i: int, j: int, angle: float) -> NativeGate:
    if i == j:
        raise ValueError("XX gate needs two distinct ions")
    return NativeGate("xx", (i, j), angle=angle)


def measure(ions: Sequence[int]) -> NativeGate:
    return NativeGate("measure", tuple(ions))


@dataclass(frozen=True)
class NativeCircuit:
    """Ordered serial gate sequence over a labeled ion chain.

    idles_before[g] lists (ion, start, duration) idle intervals that end when
    gate g begins; idles_final lists the trailing intervals that end at the
    terminal measurement.  Both are filled by schedule().
    """

    ions: tuple[int, ...]
    gates: tuple[NativeGate, ...]
    blocks: dict[str, tuple[int, ...]]
    meta: dict = field(default_factory=dict)
    idles_before: tuple[tuple[tuple[int, float, float], ...], ...] | None = None

    def __post_init__(self):
        layout = set(self.ions)
        for g in self.gates:
            if not set(g.ions) <= layout:
                raise ValueError(f"gate {g} references ions outside layout {self.ions}")
        for name, ions in self.blocks.items():
            if not set(ions) <= layout:
                raise ValueError(f"block {name} outside layout")

    @property
    def scheduled(self) -> bool:
        return self.idles_before is not None

    @property
    def total_duration(self) -> float:
        if not self.scheduled:
            raise ValueError("circuit not scheduled")
        last = self.gates[-1]
        return last.start + last.duration

    def dump_jsonl(self) -> str:
        """One gate per line; the golden-file circuit interchange format."""
        lines = []
        for g in self.gates:
            lines.append(json.dumps({
                "kind": g.kind,
                "ions": list(g.ions),
                "angle": g.angle,
                "axis_phi": g.axis_phi,
                "start": g.start,
                "duration": g.duration,
            }))
        return "\n".join(lines) + "\n"


def build_cnot(control: int, target: int) -> list[NativeGate]:
    """CNOT from one maximally entangling XX(pi/4) plus rotation wrappers.

    The composed unitary equals CNOT up to global phase (engine-checked to
    1e-12).
    """
    if control == target:
        raise ValueError("control and target must differ")
    return [
        ry(control, PI / 2),
        xx(control, target, PI / 4),
        rx(control, -PI / 2),
        rx(target, -PI / 2),
        ry(control, -PI / 2),
    ]


def _rows(block: Sequence[int]) -> list[tuple[int, int, int]]:
    b = list(block)
    return [tuple(b[3 * r: 3 * r + 3]) for r in range(3)]


def _cols(block: Sequence[int]) -> list[tuple[int, int, int]]:
    b = list(block)
    return [(b[j], b[3 + j], b[6 + j]) for j in range(3)]


def build_prep_zero(block: Sequence[int]) -> list[NativeGate]:
    """Unitary fault-tolerant preparation of logical |0>.

    Each row is driven to the computational GHZ state from its middle qubit,
    then rotated transversally so the row holds (|+++> + |--->)/sqrt(2).
    """
    if len(block) != 9:
        raise ValueError("data block must have 9 ions")
    gates: list[NativeGate] = []
    for a, b, c in _rows(block):
        gates.append(ry(b, PI / 2))
        gates += build_cnot(b, a)
        gates += build_cnot(b, c)
        gates += [ry(a, -PI / 2), ry(b, -PI / 2), ry(c, -PI / 2)]
    return gates


def build_prep_plus(block: Sequence[int]) -> list[NativeGate]:
    """Unitary fault-tolerant preparation of logical |+>: three columns of
    computational GHZ states."""
    if len(block) != 9:
        raise ValueError("data block must have 9 ions")
    gates: list[NativeGate] = []
    for a, b, c in _cols(block):
        gates.append(ry(b, PI / 2))
        gates += build_cnot(b, a)
        gates += build_cnot(b, c)
    return gates


def build_shor_round(data_block: Sequence[int], ancilla_pair: Sequence[int]) -> list[NativeGate]:
    """One Shor extraction round: S1 then S2, each onto a bare ancilla.

    Data qubits couple to the ancilla in gauge-paired order so that any
    single ancilla fault propagates at most one data error up to gauges.
    """
    if len(ancilla_pair) != 2:
        raise ValueError("a Shor round uses exactly 2 ancilla ions")
    if len(data_block) != 9:
        raise ValueError("data block must have 9 ions")
    b = list(data_block)
    a1, a2 = ancilla_pair
    gates: list[NativeGate] = []
    for q in S1_COUPLING_ORDER:
        gates += build_cnot(b[q - 1], a1)
    for q in S2_COUPLING_ORDER:
        gates += build_cnot(b[q - 1], a2)
    return gates


def build_transversal_cnot(data_block: Sequence[int], ancilla_block: Sequence[int]) -> list[NativeGate]:
    """Nine sequential physical CNOTs, data qubit p -> ancilla qubit p."""
    if len(data_block) != 9 or len(ancilla_block) != 9:
        raise ValueError("both blocks must have 9 ions")
    gates: list[NativeGate] = []
    for d, a in zip(data_block, ancilla_block):
        gates += build_cnot(d, a)
    return gates


DATA_BLOCK = tuple(range(1, 10))
STEANE_ANCILLA_BLOCK = tuple(range(10, 19))


def build_experiment(kind: str, durations: GateDurations | None = None) -> NativeCircuit:
    """Full scheduled circuit for one registered experiment kind."""
    if kind not in EXPERIMENT_KINDS:
        raise ValueError(f"unknown experiment kind {kind!r}")
    durations = durations or GateDurations()
    gates: list[NativeGate] = []
    blocks: dict[str, tuple[int, ...]] = {}
    meta: dict = {"kind": kind, "basis": "z"}

    if kind == "direct_prep":
        gates += build_prep_zero(DATA_BLOCK)
        blocks["data"] = DATA_BLOCK

    elif kind in ("shor_E1", "shor_E2"):
        gates += build_prep_zero(DATA_BLOCK)
        gates += build_shor_round(DATA_BLOCK, (10, 11))
        blocks["data"] = DATA_BLOCK
        blocks["round1"] = (10, 11)
        meta["rounds"] = ["round1"]
        if kind == "shor_E2":
            # No mid-circuit reset: the second round uses two fresh ancillas.
            gates += build_shor_round(DATA_BLOCK, (12, 13))
            blocks["round2"] = (12, 13)
            meta["rounds"] = ["round1", "round2"]

    elif kind.startswith("steane"):
        ancilla_kind = "plus" if kind.endswith("plus") else "zero"
        gates += build_prep_zero(DATA_BLOCK)
        if ancilla_kind == "plus":
            gates += build_prep_plus(STEANE_ANCILLA_BLOCK)
        else:
            gates += build_prep_zero(STEANE_ANCILLA_BLOCK)
        if "no_cnot" not in kind:
            gates += build_transversal_cnot(DATA_BLOCK, STEANE_ANCILLA_BLOCK)
        blocks["data"] = DATA_BLOCK
        blocks["ancilla"] = STEANE_ANCILLA_BLOCK
        meta["ancilla_kind"] = ancilla_kind

    else:  # bell_zz / bell_xx
        gates += build_prep_plus(DATA_BLOCK)          # control block |+L>
        gates += build_prep_zero(STEANE_ANCILLA_BLOCK)  # target block |0L>
        gates += build_transversal_cnot(DATA_BLOCK, STEANE_ANCILLA_BLOCK)
        blocks["block_a"] = DATA_BLOCK
        blocks["block_b"] = STEANE_ANCILLA_BLOCK
        if kind == "bell_xx":
            meta["basis"] = "x"
            for ion in DATA_BLOCK + STEANE_ANCILLA_BLOCK:
                gates.append(ry(ion, -PI / 2))

    ions = tuple(sorted({i for g in gates for i in g.ions}))
    gates.append(measure(ions))
    circuit = NativeCircuit(ions=ions, gates=tuple(gates), blocks=blocks, meta=meta)
    return schedule(circuit, durations)


def gate_duration(gate: NativeGate, durations: GateDurations) -> float:
    if gate.kind == "r":
        return durations.sq_us
    if gate.kind == "rz":
        return 0.0  # virtual frame update
    if gate.kind == "xx":
        return durations.xx_us
    if gate.kind == "measure":
        return durations.measure_us
    raise ValueError(f"unknown gate kind {gate.kind!r}")


def schedule(circuit: NativeCircuit, durations: GateDurations) -> NativeCircuit:
    """Serial schedule: start times, durations, and per-ion idle gaps.

    The leading gap from t = 0 and the trailing gap before the terminal
    measurement are treated like any other idle interval.
    """
    t = 0.0
    last_end = {ion: 0.0 for ion in circuit.ions}
    gates: list[NativeGate] = []
    idles: list[tuple[tuple[int, float, float], ...]] = []
    for g in circuit.gates:
        d = gate_duration(g, durations)
        gaps = []
        for ion in g.ions:
            gap = t - last_end[ion]
            if gap > 0:
                gaps.append((ion, last_end[ion], gap))
            last_end[ion] = t + d
        idles.append(tuple(gaps))
        gates.append(replace(g, start=t, duration=d))
        t += d
    return replace(circuit, gates=tuple(gates), idles_before=tuple(idles))
