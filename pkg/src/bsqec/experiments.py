"""Experiment registry binding circuits, noise, decoders and statistics,
plus the exhaustive fault-injection certification runner.

Result rows follow the fixed schema (protocol, metric, stratum, k, n, point,
lo, hi, source); protocol strings are "<experiment>/<decode mode>".
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Iterable

import numpy as np

from . import __version__
from .bacon_shor import decode_x_readout, decode_z_readout
from .circuits import (
    DATA_BLOCK,
    NativeCircuit,
    build_experiment,
    build_prep_plus,
    measure,
    ry,
    schedule,
)
from .config import Config, load_config
from .decoders import (
    SYNDROME_ORDER,
    EstimateCI,
    build_conditional_table,
    combine_adaptive_ler,
    decode_bell,
    decode_direct,
    decode_shor_single_shot,
    decode_shor_two_round,
    decode_steane,
    estimate_ci,
)
from .engine import (
    RecordBatch,
    SeedPolicy,
    ShotRecord,
    inject_fault_run,
    run_monte_carlo,
)
from .noise import GateDurations, NoiseParams, apply_improved

PI = math.pi


@dataclass(frozen=True)
class ExperimentSpec:
    id: str
    circuits: tuple[str, ...]
    family: str  # direct | shor | steane | steane_no_cnot | bell


REGISTRY: dict[str, ExperimentSpec] = {
    "direct_prep": ExperimentSpec("direct_prep", ("direct_prep",), "direct"),
    "shor": ExperimentSpec("shor", ("shor_E1", "shor_E2"), "shor"),
    "steane_plus": ExperimentSpec("steane_plus", ("steane_plus",), "steane"),
    "steane_zero": ExperimentSpec("steane_zero", ("steane_zero",), "steane"),
    "steane_no_cnot_plus": ExperimentSpec(
        "steane_no_cnot_plus", ("steane_no_cnot_plus",), "steane_no_cnot"),
    "steane_no_cnot_zero": ExperimentSpec(
        "steane_no_cnot_zero", ("steane_no_cnot_zero",), "steane_no_cnot"),
    "bell_zz": ExperimentSpec("bell_zz", ("bell_zz",), "bell"),
    "bell_xx": ExperimentSpec("bell_xx", ("bell_xx",), "bell"),
}

CSV_COLUMNS = ("protocol", "metric", "stratum", "k", "n", "point", "lo", "hi", "source")


@dataclass(frozen=True)
class Row:
    protocol: str
    metric: str
    stratum: str
    k: int | None
    n: int | None
    point: float | None
    lo: float | None
    hi: float | None
    source: str

    @classmethod
    def from_ci(cls, protocol, metric, stratum, ci: EstimateCI | None, source) -> "Row":
        if ci is None:
            return cls(protocol, metric, stratum, None, None, None, None, None, source)
        return cls(protocol, metric, stratum, ci.k, ci.n, ci.point, ci.lo, ci.hi, source)

    def key(self) -> tuple[str, str, str, str]:
        return (self.protocol, self.metric, self.stratum, self.source)


@dataclass
class ResultTable:
    meta: dict
    rows: list[Row] = field(default_factory=list)

    def row(self, protocol: str, metric: str, stratum: str = "",
            source: str | None = None) -> Row:
        for r in self.rows:
            if (r.protocol, r.metric, r.stratum) == (protocol, metric, stratum):
                if source is None or r.source == source:
                    return r
        raise KeyError((protocol, metric, stratum, source))

    def extend(self, other: "ResultTable") -> None:
        self.rows.extend(other.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key in sorted(self.meta):
            buf.write(f"# {key}={self.meta[key]}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow(["" if getattr(r, c) is None else getattr(r, c)
                        for c in CSV_COLUMNS])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {"meta": self.meta,
             "rows": [{c: getattr(r, c) for c in CSV_COLUMNS} for r in self.rows]},
            indent=1,
        )

    @classmethod
    def from_json(cls, text: str) -> "ResultTable":
        obj = json.loads(text)
        rows = [Row(**{c: row[c] for c in CSV_COLUMNS}) for row in obj["rows"]]
        return cls(meta=obj["meta"], rows=rows)


def emit(table: ResultTable, fmt: str, path: str | None) -> str:
    """Bit-stable serialization; returns the text, optionally writing it."""
    if fmt == "csv":
        text = table.to_csv()
    elif fmt == "json":
        text = table.to_json()
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path:
        with open(path, "w") as f:
            f.write(text)
    return text


def _rows_direct(batch: RecordBatch, source: str) -> list[Row]:
    n = batch.shots
    k_maj = rej = k_ps = n_acc = 0
    for rec in batch:
        k_maj += decode_direct(rec, "majority").logical_error
        ps = decode_direct(rec, "ps_data")
        if ps.accepted:
            n_acc += 1
            k_ps += ps.logical_error
        else:
            rej += 1
    return [
        Row.from_ci("direct_prep/majority", "LER", "", estimate_ci(k_maj, n), source),
        Row.from_ci("direct_prep/ps_data", "LER", "",
                    estimate_ci(k_ps, n_acc) if n_acc else None, source),
        Row.from_ci("direct_prep/ps_data", "RR", "", estimate_ci(rej, n), source),
    ]


def _rows_shor(e1: RecordBatch, e2: RecordBatch, source: str,
               boot_rng: np.random.Generator) -> list[Row]:
    table = build_conditional_table(iter(e1), iter(e2))
    n1 = table.n1
    k_ss = sum(table.cells[(1, s)].k_lambda for s in SYNDROME_ORDER)
    k_dstb = sum(table.cells[(1, s)].k_delta for s in SYNDROME_ORDER)
    det = table.cells[(1, (0, 0))]
    rows = [
        Row.from_ci("shor/single_shot", "LER", "", estimate_ci(k_ss, n1), source),
        Row.from_ci("shor/adaptive1", "LER", "",
                    combine_adaptive_ler(table, "a1", rng=boot_rng), source),
        Row.from_ci("shor/adaptive2", "LER", "",
                    combine_adaptive_ler(table, "a2", rng=boot_rng), source),
        Row.from_ci("shor/disturbance", "DSTB", "", estimate_ci(k_dstb, n1), source),
        Row.from_ci("shor/detection", "LER", "", det.lam, source),
        Row.from_ci("shor/detection", "RR", "",
                    estimate_ci(n1 - det.n_stratum, n1), source),
    ]
    for r in (1, 2):
        for s in SYNDROME_ORDER:
            cell = table.cells[(r, s)]
            stratum = f"r{r}/{s[0]}{s[1]}"
            rows.append(Row.from_ci("shor/conditional", "mu", stratum, cell.mu, source))
            rows.append(Row.from_ci("shor/conditional", "lambda", stratum, cell.lam, source))
            rows.append(Row.from_ci("shor/conditional", "delta", stratum, cell.delta, source))
    return rows


def _rows_steane(batch: RecordBatch, ancilla_kind: str, exp_id: str, source: str,
                 include_feedback: bool) -> list[Row]:
    n = batch.shots
    modes = ["feedback", "disturbance", "ps_ancilla", "ps_data", "ps_joint"]
    if not include_feedback:
        modes.remove("feedback")
    counts = {m: [0, 0, 0] for m in modes}  # k_err, n_accepted, rejected
    for rec in batch:
        for m in modes:
            out = decode_steane(rec, ancilla_kind, m)
            if out.accepted:
                counts[m][0] += out.logical_error
                counts[m][1] += 1
            else:
                counts[m][2] += 1
    rows = []
    for m in modes:
        k, n_acc, rej = counts[m]
        metric = "DSTB" if m == "disturbance" else "LER"
        rows.append(Row.from_ci(f"{exp_id}/{m}", metric, "",
                                estimate_ci(k, n_acc) if n_acc else None, source))
        if m.startswith("ps_"):
            rows.append(Row.from_ci(f"{exp_id}/{m}", "RR", "",
                                    estimate_ci(rej, n), source))
    return rows


def _rows_bell(batch: RecordBatch, basis: str, exp_id: str, source: str) -> list[Row]:
    n = batch.shots
    k_ec = k_ps = n_acc = rej = 0
    for rec in batch:
        k_ec += decode_bell(rec, basis).logical_error
        ps = decode_bell(rec, basis, postselect=True)
        if ps.accepted:
            n_acc += 1
            k_ps += ps.logical_error
        else:
            rej += 1
    return [
        Row.from_ci(f"{exp_id}/ec", "LER", "", estimate_ci(k_ec, n), source),
        Row.from_ci(f"{exp_id}/ps", "LER", "",
                    estimate_ci(k_ps, n_acc) if n_acc else None, source),
        Row.from_ci(f"{exp_id}/ps", "RR", "", estimate_ci(rej, n), source),
    ]


def expected_row_keys(exp_id: str, source: str) -> list[tuple[str, str, str, str]]:
    """Manifest of (protocol, metric, stratum, source) rows per experiment."""
    fam = REGISTRY[exp_id].family
    keys: list[tuple[str, str, str, str]] = []
    if fam == "direct":
        keys = [("direct_prep/majority", "LER", ""),
                ("direct_prep/ps_data", "LER", ""),
                ("direct_prep/ps_data", "RR", "")]
    elif fam == "shor":
        keys = [("shor/single_shot", "LER", ""), ("shor/adaptive1", "LER", ""),
                ("shor/adaptive2", "LER", ""), ("shor/disturbance", "DSTB", ""),
                ("shor/detection", "LER", ""), ("shor/detection", "RR", "")]
        for r in (1, 2):
            for s in SYNDROME_ORDER:
                for metric in ("mu", "lambda", "delta"):
                    keys.append(("shor/conditional", metric, f"r{r}/{s[0]}{s[1]}"))
    elif fam in ("steane", "steane_no_cnot"):
        modes = ("feedback", "disturbance", "ps_ancilla", "ps_data", "ps_joint")
        if fam == "steane_no_cnot":
            modes = modes[1:]
        for m in modes:
            metric = "DSTB" if m == "disturbance" else "LER"
            keys.append((f"{exp_id}/{m}", metric, ""))
            if m.startswith("ps_"):
                keys.append((f"{exp_id}/{m}", "RR", ""))
    else:
        keys = [(f"{exp_id}/ec", "LER", ""), (f"{exp_id}/ps", "LER", ""),
                (f"{exp_id}/ps", "RR", "")]
    return [(p, m, s, source) for p, m, s in keys]


def run_experiment(
    exp_id: str,
    shots: int,
    seed: int,
    config: Config | None = None,
    improved: bool = False,
    workers: int | None = None,
    dump_dir: str | None = None,
) -> ResultTable:
    """Monte-Carlo run of one registered experiment, decoded in every mode."""
    if exp_id not in REGISTRY:
        raise KeyError(f"unknown experiment {exp_id!r}; "
                       f"registered: {', '.join(REGISTRY)}")
    cfg = config if config is not None else load_config(None)
    params = apply_improved(cfg.params) if improved else cfg.params
    source = "IMP" if improved else "SIM"
    spec = REGISTRY[exp_id]
    policy = SeedPolicy(seed)
    batches: dict[str, RecordBatch] = {}
    for kind in spec.circuits:
        circuit = build_experiment(kind, params.durations)
        dump = None
        if dump_dir:
            os.makedirs(dump_dir, exist_ok=True)
            dump = os.path.join(dump_dir, f"{exp_id}_{kind}_{source}.jsonl")
        batches[kind] = run_monte_carlo(
            circuit, params, shots, policy,
            stream=f"{exp_id}:{kind}:{source}",
            workers=workers, dump_path=dump,
        )
    if spec.family == "direct":
        rows = _rows_direct(batches["direct_prep"], source)
    elif spec.family == "shor":
        boot_rng = np.random.Generator(np.random.Philox(key=[seed, 0xB007]))
        rows = _rows_shor(batches["shor_E1"], batches["shor_E2"], source, boot_rng)
    elif spec.family == "steane":
        kind = spec.circuits[0]
        rows = _rows_steane(batches[kind], REGISTRY[exp_id].id.rsplit("_", 1)[-1],
                            exp_id, source, include_feedback=True)
    elif spec.family == "steane_no_cnot":
        kind = spec.circuits[0]
        rows = _rows_steane(batches[kind], kind.rsplit("_", 1)[-1],
                            exp_id, source, include_feedback=False)
    else:
        kind = spec.circuits[0]
        rows = _rows_bell(batches[kind], kind.rsplit("_", 1)[-1], exp_id, source)
    meta = {
        "experiment": exp_id,
        "shots": shots,
        "seed": seed,
        "config_hash": cfg.hash,
        "code_version": __version__,
    }
    return ResultTable(meta=meta, rows=rows)


def run_all(
    shots: int,
    seed: int,
    config: Config | None = None,
    workers: int | None = None,
    sources: tuple[str, ...] = ("SIM", "IMP"),
) -> ResultTable:
    """Every registry experiment at every requested source, one merged table."""
    cfg = config if config is not None else load_config(None)
    merged = ResultTable(meta={
        "shots": shots, "seed": seed, "config_hash": cfg.hash,
        "code_version": __version__, "experiments": ",".join(REGISTRY),
        "sources": ",".join(sources),
    })
    for exp_id in REGISTRY:
        for source in sources:
            t = run_experiment(exp_id, shots, seed, config=cfg,
                               improved=(source == "IMP"), workers=workers)
            merged.extend(t)
    return merged


# ---------------------------------------------------------------------------
# Fault-injection certification
# ---------------------------------------------------------------------------

ORACLE_PROTOCOLS = ("prep_zero", "prep_plus", "shor_single_shot",
                    "shor_adaptive2", "steane_feedback")

# Protocols whose certification is expected to report zero violations.
ORACLE_EXPECTED_CLEAN = {
    "prep_zero": True,
    "prep_plus": True,
    "shor_single_shot": False,
    "shor_adaptive2": True,
    "steane_feedback": True,
}


@dataclass(frozen=True)
class OracleViolation:
    location: int
    gate: str
    pauli: tuple            # ((ion, 'X'|'Y'|'Z'), ...)
    p_error: float


@dataclass
class OracleReport:
    protocol: str
    faults_checked: int
    violations: list[OracleViolation]
    expect_clean: bool
    circuit: NativeCircuit

    @property
    def passed(self) -> bool:
        clean = not self.violations
        return clean if self.expect_clean else not clean

    def summary(self) -> str:
        lines = [f"oracle {self.protocol}: {self.faults_checked} faults, "
                 f"{len(self.violations)} violation(s)"]
        for v in self.violations[:50]:
            lines.append(f"  loc={v.location:4d} {v.gate:<40s} "
                         f"fault={v.pauli} p_err={v.p_error:.4f}")
        if len(self.violations) > 50:
            lines.append(f"  ... {len(self.violations) - 50} more")
        return "\n".join(lines)


def _record_from_bits(bits: dict, rounds: tuple) -> ShotRecord:
    syn = tuple((bits[r] & 1, (bits[r] >> 1) & 1) for r in rounds)
    return ShotRecord(bits=bits, syndromes=syn)


def _build_prep_plus_circuit(durations: GateDurations) -> NativeCircuit:
    """|+L> preparation with a transversal X-basis readout."""
    gates = build_prep_plus(DATA_BLOCK)
    gates += [ry(i, -PI / 2) for i in DATA_BLOCK]
    gates.append(measure(DATA_BLOCK))
    circuit = NativeCircuit(ions=DATA_BLOCK, gates=tuple(gates),
                            blocks={"data": DATA_BLOCK},
                            meta={"kind": "prep_plus_readout", "basis": "x"})
    return schedule(circuit, durations)


def oracle_setup(protocol: str) -> tuple[NativeCircuit, Callable[[dict], bool]]:
    """Circuit and logical-error predicate for a certification protocol."""
    durations = GateDurations()
    if protocol == "prep_zero":
        circ = build_experiment("direct_prep", durations)
        return circ, lambda bits: decode_z_readout(bits["data"]) != 0
    if protocol == "prep_plus":
        circ = _build_prep_plus_circuit(durations)
        return circ, lambda bits: decode_x_readout(bits["data"]) != 0
    if protocol == "shor_single_shot":
        circ = build_experiment("shor_E1", durations)
        rounds = tuple(circ.meta["rounds"])
        return circ, lambda bits: bool(decode_shor_single_shot(
            _record_from_bits(bits, rounds)).logical_error)
    if protocol == "shor_adaptive2":
        circ = build_experiment("shor_E2", durations)
        rounds = tuple(circ.meta["rounds"])
        return circ, lambda bits: bool(decode_shor_two_round(
            _record_from_bits(bits, rounds), "a2").logical_error)
    if protocol == "steane_feedback":
        circ = build_experiment("steane_plus", durations)
        return circ, lambda bits: bool(decode_steane(
            _record_from_bits(bits, ()), "plus", "feedback").logical_error)
    raise ValueError(f"unknown oracle protocol {protocol!r}; "
                     f"choose from {ORACLE_PROTOCOLS}")


_PAULIS = ("X", "Y", "Z")


def enumerate_faults(circuit: NativeCircuit) -> Iterable[tuple[int, dict]]:
    """All single-location Pauli faults: every single-qubit Pauli before the
    circuit and at the readout, singles after one-qubit gates, and all 15
    one- or two-qubit Paulis after each entangling gate."""
    for ion in circuit.ions:
        for p in _PAULIS:
            yield -1, {ion: p}
    for gi, g in enumerate(circuit.gates):
        if g.kind == "measure":
            for ion in circuit.ions:
                for p in _PAULIS:
                    yield gi, {ion: p}
        elif g.kind == "xx":
            i, j = g.ions
            for pi, pj in product((None,) + _PAULIS, repeat=2):
                if pi is None and pj is None:
                    continue
                fault = {}
                if pi is not None:
                    fault[i] = pi
                if pj is not None:
                    fault[j] = pj
                yield gi, fault
        else:
            for p in _PAULIS:
                yield gi, {g.ions[0]: p}


def run_ft_oracle(protocol: str, p_tol: float = 1e-9) -> OracleReport:
    """Exhaustive single-fault certification of one protocol.

    A violation is any fault whose exact logical-error probability exceeds
    p_tol under the protocol's fault-tolerant decode path.
    """
    circuit, decode_error = oracle_setup(protocol)
    violations = []
    count = 0
    for loc, pauli in enumerate_faults(circuit):
        count += 1
        p_err = inject_fault_run(circuit, loc, pauli, decode_error)
        if p_err > p_tol:
            gate = "input" if loc < 0 else circuit.gates[loc].describe()
            violations.append(OracleViolation(
                location=loc, gate=gate,
                pauli=tuple(sorted(pauli.items())), p_error=p_err))
    return OracleReport(protocol=protocol, faults_checked=count,
                        violations=violations,
                        expect_clean=ORACLE_EXPECTED_CLEAN[protocol],
                        circuit=circuit)
