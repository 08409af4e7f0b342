import math

import numpy as np
import pytest

from bsqec.bacon_shor import decode_z_readout
from bsqec.circuits import NativeCircuit, build_experiment, measure, ry, schedule, xx
from bsqec.config import load_config
from bsqec.engine import (
    RecordBatch,
    SeedPolicy,
    StateVector,
    bits_of_outcome,
    inject_fault_run,
    outcome_distribution,
    r_matrix,
    run_exact,
    run_monte_carlo,
    run_shot,
    xx_matrix,
)
from bsqec.noise import GateDurations
from _oracles import fidelity


def fresh(n_ions=1):
    return StateVector(list(range(1, n_ions + 1)))


class TestGates:
    def test_pi_rotation_flips(self):
        sv = fresh()
        sv.apply_rotation(1, 0.0, math.pi)
        amps = sv.state()
        assert abs(amps[1]) ** 2 == pytest.approx(1.0)

    def test_zero_angle_identity(self):
        sv = fresh()
        sv.apply_rotation(1, 0.3, 0.0)
        assert abs(sv.state()[0]) ** 2 == pytest.approx(1.0)

    def test_half_rotations_compose(self):
        a, b = fresh(), fresh()
        a.apply_rotation(1, 0.7, math.pi / 2)
        a.apply_rotation(1, 0.7, math.pi / 2)
        b.apply_rotation(1, 0.7, math.pi)
        assert fidelity(a.state(), b.state()) == pytest.approx(1.0, abs=1e-12)

    def test_xx_zero_identity(self):
        sv = fresh(2)
        sv.apply_xx(1, 2, 0.0)
        assert abs(sv.state()[0]) ** 2 == pytest.approx(1.0)

    def test_xx_maximally_entangling(self):
        sv = fresh(2)
        sv.apply_xx(1, 2, math.pi / 4)
        amps = sv.state()
        assert abs(amps[0]) ** 2 == pytest.approx(0.5, abs=1e-12)
        assert abs(amps[3]) ** 2 == pytest.approx(0.5, abs=1e-12)
        assert amps[3] == pytest.approx(-1j * amps[0])

    def test_xx_inverse(self):
        sv = fresh(2)
        sv.apply_rotation(1, 0.2, 0.9)
        sv.apply_xx(1, 2, 0.6)
        sv.apply_xx(1, 2, -0.6)
        ref = fresh(2)
        ref.apply_rotation(1, 0.2, 0.9)
        assert fidelity(sv.state(), ref.state()) == pytest.approx(1.0, abs=1e-12)

    def test_rz_phases(self):
        sv = fresh()
        sv.apply_rotation(1, math.pi / 2, math.pi / 2)   # |0> -> |+>-like
        sv.apply_rz(1, math.pi)                          # Z up to phase
        sv.apply_rotation(1, math.pi / 2, -math.pi / 2)
        amps = sv.state()
        assert abs(amps[1]) ** 2 == pytest.approx(1.0, abs=1e-12)

    def test_pauli_y(self):
        sv = fresh()
        sv.apply_pauli(1, "Y")
        assert abs(sv.state()[1]) ** 2 == pytest.approx(1.0)

    def test_pair_reorientation(self):
        # same pair addressed with swapped ion order must compose correctly
        sv = fresh(2)
        sv.apply_rotation(1, 0.0, 0.4)
        sv.apply_xx(1, 2, 0.3)
        sv.apply_xx(2, 1, -0.3)
        ref = fresh(2)
        ref.apply_rotation(1, 0.0, 0.4)
        assert fidelity(sv.state(), ref.state()) == pytest.approx(1.0, abs=1e-12)

    def test_norm_preserved_through_long_sequence(self):
        rng = np.random.Generator(np.random.Philox(key=[5, 0]))
        sv = fresh(4)
        for _ in range(60):
            i, j = rng.choice(np.arange(1, 5), size=2, replace=False)
            sv.apply_xx(int(i), int(j), float(rng.uniform(-1, 1)))
            sv.apply_rotation(int(i), float(rng.uniform(0, 2 * math.pi)),
                              float(rng.uniform(-1, 1)))
        amps = sv.state()
        assert abs(np.linalg.norm(amps) - 1) < 1e-9


class TestMeasurement:
    def test_deterministic_one(self):
        rng = np.random.Generator(np.random.Philox(key=[1, 1]))
        sv = fresh()
        sv.apply_rotation(1, 0.0, math.pi)
        assert sv.measure_all(rng) == 1

    def test_uniform_superposition_frequencies(self):
        pol = SeedPolicy(3)
        ones = 0
        n = 10**5
        for i in range(n):
            sv = fresh()
            sv.apply_rotation(1, math.pi / 2, math.pi / 2)
            ones += sv.measure_all(pol.rng("meas", i))
        assert abs(ones / n - 0.5) < 0.01

    def test_ghz_outcomes(self):
        pol = SeedPolicy(4)
        for i in range(300):
            sv = fresh(3)
            sv.apply_rotation(1, math.pi / 2, math.pi / 2)
            sv.apply_xx(1, 2, math.pi / 4)   # entangles; outcomes correlated
            sv.apply_rotation(2, 0.0, -math.pi / 2)
            sv.apply_rotation(1, 0.0, -math.pi / 2)
            sv.apply_rotation(1, math.pi / 2, -math.pi / 2)  # CNOT(1,2) wrapper set
            out = sv.measure_all(pol.rng("ghz", i))
            assert (out & 1) == ((out >> 1) & 1)

    def test_chain_rule_matches_flushed_distribution(self):
        # pending pairs at measurement: chain-rule sampling must reproduce
        # the exact flushed Born distribution
        def build(flush_first):
            sv = fresh(5)
            sv.apply_rotation(1, 0.3, 1.1)
            sv.apply_rotation(3, 1.2, 0.7)
            sv.apply_xx(1, 2, 0.45)
            sv.apply_pauli(2, "Y")
            sv.apply_xx(3, 4, -0.8)
            sv.apply_rotation(4, 0.5, 0.6)
            sv.apply_xx(5, 1, 0.2)  # forces flush of pair (1,2)
            if flush_first:
                sv.flush()
            return sv

        probs = np.abs(build(True).amps) ** 2
        pol = SeedPolicy(11)
        n = 40000
        counts = np.zeros(32)
        for i in range(n):
            out = build(False).measure_all(pol.rng("chain", i))
            counts[out] += 1
        emp = counts / n
        # generous 5-sigma binomial envelope per outcome
        tol = 5 * np.sqrt(np.maximum(probs * (1 - probs), 1e-9) / n)
        assert np.all(np.abs(emp - probs) <= tol + 1e-3)

    def test_norm_guard(self):
        sv = fresh(2)
        sv.amps[0] = 2.0
        sv._norm2 = 4.0
        with pytest.raises(RuntimeError):
            sv.measure_all(np.random.Generator(np.random.Philox(key=[0, 2])))


def tiny_circuit():
    gates = (ry(1, math.pi / 2), xx(1, 2, math.pi / 4), measure((1, 2)))
    circ = NativeCircuit((1, 2), gates, {"data": (1, 2)}, meta={"kind": "tiny"})
    return schedule(circ, GateDurations())


class TestRunShot:
    def test_noiseless_reproducible(self, noiseless_config):
        pol = SeedPolicy(21)
        circ = build_experiment("shor_E1")
        a = run_shot(circ, noiseless_config.params, pol.rng("s", 3))
        b = run_shot(circ, noiseless_config.params, pol.rng("s", 3))
        assert a == b

    def test_noisy_reproducible(self, default_config):
        pol = SeedPolicy(22)
        circ = build_experiment("shor_E2")
        a = run_shot(circ, default_config.params, pol.rng("s", 5),
                     collect_fault_log=True, collect_phonon_trace=True)
        b = run_shot(circ, default_config.params, pol.rng("s", 5),
                     collect_fault_log=True, collect_phonon_trace=True)
        assert a == b
        assert a.fault_log is not None and a.phonon_trace is not None

    def test_noiseless_syndromes_trivial(self, noiseless_config):
        pol = SeedPolicy(23)
        circ = build_experiment("shor_E2")
        for i in range(25):
            rec = run_shot(circ, noiseless_config.params, pol.rng("t", i))
            assert rec.syndromes == ((0, 0), (0, 0))
            assert decode_z_readout(rec.bits["data"]) == 0

    def test_requires_schedule(self, noiseless_config):
        circ = NativeCircuit((1, 2), (xx(1, 2, 0.1), measure((1, 2))), {})
        with pytest.raises(ValueError):
            run_shot(circ, noiseless_config.params,
                     SeedPolicy(1).rng("x", 0))


class TestMonteCarlo:
    def test_single_shot_equals_run_shot(self, default_config):
        pol = SeedPolicy(31)
        circ = build_experiment("shor_E1")
        batch = run_monte_carlo(circ, default_config.params, 1, pol, "mc")
        assert batch.record(0) == run_shot(circ, default_config.params,
                                           pol.rng("mc", 0))

    def test_single_shot_equals_run_shot_noiseless(self, noiseless_config):
        pol = SeedPolicy(32)
        circ = tiny_circuit()
        batch = run_monte_carlo(circ, noiseless_config.params, 1, pol, "mc")
        assert batch.record(0) == run_shot(circ, noiseless_config.params,
                                           pol.rng("mc", 0))

    def test_tally_additivity(self, default_config):
        pol = SeedPolicy(33)
        circ = tiny_circuit()
        full = run_monte_carlo(circ, default_config.params, 128, pol, "add", workers=1)
        first = run_monte_carlo(circ, default_config.params, 64, pol, "add", workers=1)
        np.testing.assert_array_equal(full.blocks["data"][:64], first.blocks["data"])

    def test_worker_invariance(self, default_config):
        pol = SeedPolicy(34)
        circ = build_experiment("direct_prep")
        one = run_monte_carlo(circ, default_config.params, 200, pol, "w", workers=1)
        two = run_monte_carlo(circ, default_config.params, 200, pol, "w", workers=2)
        np.testing.assert_array_equal(one.blocks["data"], two.blocks["data"])

    def test_noiseless_fast_path_lers_zero(self, noiseless_config):
        pol = SeedPolicy(35)
        circ = build_experiment("steane_plus")
        batch = run_monte_carlo(circ, noiseless_config.params, 500, pol, "nl")
        for rec in batch:
            assert decode_z_readout(rec.bits["data"]) == 0

    def test_dump_and_reload(self, tmp_path, default_config):
        pol = SeedPolicy(36)
        circ = build_experiment("shor_E1")
        path = str(tmp_path / "records.jsonl")
        batch = run_monte_carlo(circ, default_config.params, 50, pol, "d",
                                workers=1, dump_path=path)
        loaded = RecordBatch.load(path)
        assert loaded.circuit_kind == batch.circuit_kind
        assert loaded.rounds == batch.rounds
        for name in batch.blocks:
            np.testing.assert_array_equal(loaded.blocks[name], batch.blocks[name])

    def test_shots_validated(self, default_config):
        with pytest.raises(ValueError):
            run_monte_carlo(build_experiment("direct_prep"),
                            default_config.params, 0, SeedPolicy(1), "x")


class TestExactRuns:
    def test_identity_fault_no_error(self):
        circ = build_experiment("direct_prep")
        p = inject_fault_run(circ, -1, {1: "Z"},
                             lambda bits: decode_z_readout(bits["data"]) != 0)
        assert p == pytest.approx(0.0, abs=1e-12)

    def test_invalid_location(self):
        circ = build_experiment("direct_prep")
        with pytest.raises(ValueError):
            inject_fault_run(circ, len(circ.gates), {1: "X"}, lambda b: False)

    def test_fault_support_validated(self):
        circ = build_experiment("direct_prep")
        gi = next(i for i, g in enumerate(circ.gates) if g.kind == "xx")
        ions = set(circ.gates[gi].ions)
        bad = (set(circ.ions) - ions).pop()
        with pytest.raises(ValueError):
            inject_fault_run(circ, gi, {bad: "X"}, lambda b: False)

    def test_exact_matches_sampled(self, noiseless_config):
        # exact logical-error probability vs Born sampling of the same
        # faulty state, 3-sigma binomial agreement
        circ = build_experiment("direct_prep")
        decode = lambda bits: decode_z_readout(bits["data"]) != 0
        rng = np.random.Generator(np.random.Philox(key=[77, 0]))
        pos = {ion: k for k, ion in enumerate(circ.ions)}
        xx_locs = [i for i, g in enumerate(circ.gates) if g.kind == "xx"]
        checked = 0
        for loc in xx_locs[:5]:
            for pauli in ({circ.gates[loc].ions[0]: "Y"},
                          {circ.gates[loc].ions[0]: "Z",
                           circ.gates[loc].ions[1]: "X"}):
                p_exact = inject_fault_run(circ, loc, pauli, decode)
                amps = run_exact(circ, [(loc, i, p) for i, p in pauli.items()])
                idx, probs = outcome_distribution(amps)
                cum = np.cumsum(probs)
                n = 10**4
                draws = np.searchsorted(cum, rng.random(n) * cum[-1])
                k = sum(decode(bits_of_outcome(circ, pos, int(idx[d])))
                        for d in draws)
                sigma = math.sqrt(max(p_exact * (1 - p_exact), 1e-9) / n)
                assert abs(k / n - p_exact) <= 3 * sigma + 1e-3
                checked += 1
        assert checked == 10

    def test_seed_policy_bounds(self):
        pol = SeedPolicy(1)
        with pytest.raises(ValueError):
            pol.key("s", 1 << 48)
