"""Classical post-processing: Shor and Steane decoders, Bell parity analysis,
post-selection filters, conditional probability tables, adaptive logical
error combination, and exact binomial confidence intervals.

All experiments prepare logical |0> (or the Bell pair), so "logical error"
means the decoded outcome differs from the ideal one.  Every decoder is a
pure function of the shot record; re-decoding a dumped record stream
reproduces tallies exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import beta as beta_dist

from .bacon_shor import (
    PauliMask,
    correction_tables,
    data_syndrome_from_x_readout,
    data_syndrome_from_z_readout,
    decode_x_readout,
    decode_z_readout,
)
from .engine import ShotRecord

STEANE_MODES = ("feedback", "disturbance", "ps_ancilla", "ps_data", "ps_joint")
SYNDROME_ORDER = ((0, 0), (1, 0), (1, 1), (0, 1))


@dataclass(frozen=True)
class EstimateCI:
    """Point estimate with 95% Clopper-Pearson bounds.

    k/n are retained for count-based estimates; derived estimates (e.g. the
    adaptive combinations) carry bootstrap bounds and k = n = None.
    """

    k: int | None
    n: int | None
    point: float
    lo: float | None
    hi: float | None

    def __post_init__(self):
        if self.lo is not None and self.hi is not None:
            if not (0.0 <= self.lo <= self.point + 1e-12
                    and self.point - 1e-12 <= self.hi <= 1.0 + 1e-12):
                raise ValueError(f"inconsistent interval {self}")


def estimate_ci(k: int, n: int, level: float = 0.95) -> EstimateCI:
    """Exact (Clopper-Pearson) binomial interval from beta quantiles."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 <= k <= n:
        raise ValueError(f"k={k} outside 0..{n}")
    alpha = 1.0 - level
    lo = 0.0 if k == 0 else float(beta_dist.ppf(alpha / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(beta_dist.ppf(1 - alpha / 2, k + 1, n - k))
    return EstimateCI(k, n, k / n, lo, hi)


@dataclass(frozen=True)
class DecodeOutcome:
    accepted: bool
    logical_error: bool | None          # None when the shot is rejected
    syndrome_path: tuple = ()
    correction_applied: PauliMask = PauliMask()

    def __post_init__(self):
        if not self.accepted and self.logical_error is not None:
            raise ValueError("rejected shots carry no logical_error claim")


def _round1_table():
    return correction_tables()["single_shot_round1"]


def _round2_table():
    return correction_tables()["adaptive_round2"]


def decode_direct(record: ShotRecord, mode: str = "majority") -> DecodeOutcome:
    """Plain error-corrected readout of a |0L> block, optionally data-post-selected."""
    data = record.bits["data"]
    if mode == "ps_data":
        if data_syndrome_from_z_readout(data) != (0, 0):
            return DecodeOutcome(False, None)
    elif mode != "majority":
        raise ValueError(f"unknown direct mode {mode!r}")
    return DecodeOutcome(True, decode_z_readout(data) != 0)


def decode_shor_single_shot(record: ShotRecord) -> DecodeOutcome:
    """Correct off the first-round syndrome immediately, then majority-vote."""
    if not record.syndromes:
        raise ValueError("record carries no extraction round")
    s = record.syndromes[0]
    corr = _round1_table().correction(*s)
    data = record.bits["data"] ^ corr.x_bits
    return DecodeOutcome(True, decode_z_readout(data) != 0,
                         syndrome_path=(s,), correction_applied=corr)


def decode_shor_disturbance(record: ShotRecord) -> DecodeOutcome:
    """Majority-vote only; the syndrome information is discarded."""
    return DecodeOutcome(True, decode_z_readout(record.bits["data"]) != 0,
                         syndrome_path=tuple(record.syndromes))


def decode_shor_detection(record: ShotRecord) -> DecodeOutcome:
    """Keep the shot only when the first-round syndrome is trivial."""
    s = record.syndromes[0]
    if s != (0, 0):
        return DecodeOutcome(False, None, syndrome_path=(s,))
    return DecodeOutcome(True, decode_z_readout(record.bits["data"]) != 0,
                         syndrome_path=(s,))


def decode_shor_two_round(record: ShotRecord, variant: str) -> DecodeOutcome:
    """Adaptive decode of a two-round record (both rounds present).

    Variant I consults round 2 whenever round 1 is nontrivial; variant II
    corrects immediately from round 1 for syndromes 10 and 11 and consults
    round 2 only for 01.
    """
    if len(record.syndromes) < 2:
        raise ValueError("two-round record required")
    s1, s2 = record.syndromes[0], record.syndromes[1]
    if variant not in ("a1", "a2"):
        raise ValueError(f"unknown adaptive variant {variant!r}")
    if s1 == (0, 0):
        corr = PauliMask()
    elif variant == "a2" and s1 in ((1, 0), (1, 1)):
        corr = _round1_table().correction(*s1)
    else:
        corr = _round2_table().correction(*s2)
    data = record.bits["data"] ^ corr.x_bits
    return DecodeOutcome(True, decode_z_readout(data) != 0,
                         syndrome_path=(s1, s2), correction_applied=corr)


def decode_shor_round2_correction(record: ShotRecord) -> DecodeOutcome:
    """Correct a two-round record off its second syndrome unconditionally.

    This is the conditional-rate building block lambda_2: the second-round
    syndrome drives the correction regardless of what round 1 reported.
    """
    if len(record.syndromes) < 2:
        raise ValueError("two-round record required")
    s1, s2 = record.syndromes[0], record.syndromes[1]
    corr = _round2_table().correction(*s2)
    data = record.bits["data"] ^ corr.x_bits
    return DecodeOutcome(True, decode_z_readout(data) != 0,
                         syndrome_path=(s1, s2), correction_applied=corr)


def decode_shor_adaptive(
    record_e1: ShotRecord,
    record_e2: ShotRecord | None,
    variant: str,
) -> DecodeOutcome:
    """Adaptive decode emulated from paired one- and two-round records.

    The one-round record settles every branch that does not consult round 2;
    otherwise the paired two-round record is decoded off its own second
    syndrome.
    """
    s1 = record_e1.syndromes[0]
    first_round = (s1 == (0, 0)) or (variant == "a2" and s1 in ((1, 0), (1, 1)))
    if first_round:
        corr = PauliMask() if s1 == (0, 0) else _round1_table().correction(*s1)
        data = record_e1.bits["data"] ^ corr.x_bits
        return DecodeOutcome(True, decode_z_readout(data) != 0,
                             syndrome_path=(s1,), correction_applied=corr)
    if record_e2 is None:
        raise ValueError(f"syndrome {s1} requires a second extraction round")
    s2 = record_e2.syndromes[1]
    corr = _round2_table().correction(*s2)
    data = record_e2.bits["data"] ^ corr.x_bits
    return DecodeOutcome(True, decode_z_readout(data) != 0,
                         syndrome_path=(s1, s2), correction_applied=corr)


def steane_syndrome(block_bits: int) -> tuple[int, int]:
    """Z-stabilizer parities of a 9-bit Z readout (works for either ancilla
    preparation: both leave the stabilizer parities deterministically even)."""
    return data_syndrome_from_z_readout(block_bits)


def decode_steane(record: ShotRecord, ancilla_kind: str, mode: str) -> DecodeOutcome:
    """Steane extraction decode in one of five modes.

    feedback      correct data off the ancilla syndrome, then majority-vote
    disturbance   majority-vote only
    ps_ancilla    keep shots with trivial ancilla syndrome (|0L> ancilla:
                  also require its decoded logical bit, an extra check)
    ps_data       keep shots with trivial data syndrome
    ps_joint      both post-selections
    """
    if ancilla_kind not in ("plus", "zero"):
        raise ValueError(f"unknown ancilla kind {ancilla_kind!r}")
    data = record.bits["data"]
    anc = record.bits["ancilla"]
    anc_s = steane_syndrome(anc)
    if mode == "feedback":
        corr = _round1_table().correction(*anc_s)
        return DecodeOutcome(True, decode_z_readout(data ^ corr.x_bits) != 0,
                             syndrome_path=(anc_s,), correction_applied=corr)
    if mode == "disturbance":
        return DecodeOutcome(True, decode_z_readout(data) != 0,
                             syndrome_path=(anc_s,))
    if mode not in ("ps_ancilla", "ps_data", "ps_joint"):
        raise ValueError(f"unknown steane mode {mode!r}")
    accept = True
    if mode in ("ps_ancilla", "ps_joint"):
        accept &= anc_s == (0, 0)
        if ancilla_kind == "zero":
            accept &= decode_z_readout(anc) == 0
    if mode in ("ps_data", "ps_joint"):
        accept &= data_syndrome_from_z_readout(data) == (0, 0)
    if not accept:
        return DecodeOutcome(False, None, syndrome_path=(anc_s,))
    return DecodeOutcome(True, decode_z_readout(data) != 0,
                         syndrome_path=(anc_s,))


def decode_bell(record: ShotRecord, basis: str, postselect: bool = False) -> DecodeOutcome:
    """Independent per-block decode; error when the joint logical parity flips."""
    a = record.bits["block_a"]
    b = record.bits["block_b"]
    if basis == "zz":
        sa, sb = data_syndrome_from_z_readout(a), data_syndrome_from_z_readout(b)
        pa, pb = decode_z_readout(a), decode_z_readout(b)
    elif basis == "xx":
        sa, sb = data_syndrome_from_x_readout(a), data_syndrome_from_x_readout(b)
        pa, pb = decode_x_readout(a), decode_x_readout(b)
    else:
        raise ValueError(f"unknown bell basis {basis!r}")
    if postselect and (sa != (0, 0) or sb != (0, 0)):
        return DecodeOutcome(False, None, syndrome_path=(sa, sb))
    return DecodeOutcome(True, (pa ^ pb) != 0, syndrome_path=(sa, sb))


@dataclass(frozen=True)
class ConditionalCell:
    mu: EstimateCI
    lam: EstimateCI | None      # None when the stratum is empty
    delta: EstimateCI | None
    n_stratum: int
    k_lambda: int
    k_delta: int


@dataclass(frozen=True)
class ConditionalTable:
    """mu/lambda/delta per first-round syndrome for the one- and two-round
    experiments, with retained counts for bootstrap propagation."""

    n1: int | None
    n2: int | None
    cells: dict  # (round, (s1, s2)) -> ConditionalCell

    def mu(self, r: int, s: tuple[int, int]) -> float:
        return self.cells[(r, s)].mu.point

    def lam(self, r: int, s: tuple[int, int]) -> float:
        cell = self.cells[(r, s)]
        if cell.lam is None:
            raise ValueError(f"empty stratum {s} in round {r}")
        return cell.lam.point

    @property
    def has_counts(self) -> bool:
        return self.n1 is not None

    @classmethod
    def from_points(cls, mu1, lam1, delta1, mu2, lam2, delta2) -> "ConditionalTable":
        """Build from externally reported probabilities (no counts, no CIs):
        each argument maps syndrome pair -> probability."""
        cells = {}
        for r, (mu, lam, dl) in ((1, (mu1, lam1, delta1)), (2, (mu2, lam2, delta2))):
            for s in SYNDROME_ORDER:
                cells[(r, s)] = ConditionalCell(
                    mu=EstimateCI(None, None, mu[s], None, None),
                    lam=EstimateCI(None, None, lam[s], None, None),
                    delta=EstimateCI(None, None, dl[s], None, None),
                    n_stratum=0, k_lambda=0, k_delta=0,
                )
        return cls(None, None, cells)


def build_conditional_table(
    records_e1: Iterable[ShotRecord],
    records_e2: Iterable[ShotRecord],
) -> ConditionalTable:
    """Stratify both experiment populations by the first-round syndrome.

    lambda uses the round-r correction; delta uses no ancilla information.
    Empty strata keep their zero occurrence count and carry no fabricated
    conditional estimates.
    """
    counts: dict = {}
    totals = {}
    for r, records in ((1, records_e1), (2, records_e2)):
        n_tot = 0
        strat = {s: [0, 0, 0] for s in SYNDROME_ORDER}  # n, k_lambda, k_delta
        for rec in records:
            s1 = rec.syndromes[0]
            n_tot += 1
            row = strat[s1]
            row[0] += 1
            if r == 1:
                err = decode_shor_single_shot(rec).logical_error
            else:
                err = decode_shor_round2_correction(rec).logical_error
            row[1] += bool(err)
            row[2] += decode_shor_disturbance(rec).logical_error
        totals[r] = n_tot
        counts[r] = strat
    cells = {}
    for r in (1, 2):
        n_tot = totals[r]
        if n_tot == 0:
            raise ValueError("empty record population")
        for s in SYNDROME_ORDER:
            n_s, k_l, k_d = counts[r][s]
            cells[(r, s)] = ConditionalCell(
                mu=estimate_ci(n_s, n_tot),
                lam=estimate_ci(k_l, n_s) if n_s else None,
                delta=estimate_ci(k_d, n_s) if n_s else None,
                n_stratum=n_s, k_lambda=k_l, k_delta=k_d,
            )
    return ConditionalTable(totals[1], totals[2], cells)


# Which (round, stratum) conditional LER each decoder variant combines with
# the first-round occurrence probabilities.
_VARIANT_ROUNDS = {
    "ss": {(0, 0): 1, (1, 0): 1, (1, 1): 1, (0, 1): 1},
    "a1": {(0, 0): 1, (1, 0): 2, (1, 1): 2, (0, 1): 2},
    "a2": {(0, 0): 1, (1, 0): 1, (1, 1): 1, (0, 1): 2},
}


def combine_adaptive_ler(
    table: ConditionalTable,
    variant: str,
    n_boot: int = 10_000,
    rng: np.random.Generator | None = None,
) -> EstimateCI:
    """Total logical error rate of a decoder variant from the conditional table.

    p_L = sum_s mu_1(s) * lambda_r(s)(s), with the consulted round r(s) fixed
    by the variant.  Confidence bounds (when the table carries counts) come
    from a parametric bootstrap over the per-stratum binomials.
    """
    if variant not in _VARIANT_ROUNDS:
        raise ValueError(f"unknown variant {variant!r}")
    rounds = _VARIANT_ROUNDS[variant]
    point = 0.0
    for s in SYNDROME_ORDER:
        mu = table.mu(1, s)
        if mu == 0.0:
            continue
        point += mu * table.lam(rounds[s], s)
    if not table.has_counts:
        return EstimateCI(None, None, point, None, None)

    if rng is None:
        rng = np.random.Generator(np.random.Philox(key=[0xB007, 0]))
    mu_hat = np.array([table.cells[(1, s)].mu.point for s in SYNDROME_ORDER])
    mu_star = rng.multinomial(table.n1, mu_hat / mu_hat.sum(), size=n_boot) / table.n1
    total = np.zeros(n_boot)
    for col, s in enumerate(SYNDROME_ORDER):
        cell = table.cells[(rounds[s], s)]
        if cell.n_stratum == 0:
            if np.any(mu_star[:, col] > 0) and table.cells[(1, s)].n_stratum > 0:
                raise ValueError(f"stratum {s} empty in consulted round")
            continue
        lam_star = rng.binomial(cell.n_stratum, cell.lam.point, size=n_boot) / cell.n_stratum
        total += mu_star[:, col] * lam_star
    lo = float(np.quantile(total, 0.025))
    hi = float(np.quantile(total, 0.975))
    return EstimateCI(None, None, point, min(lo, point), max(hi, point))
