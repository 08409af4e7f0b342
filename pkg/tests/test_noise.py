import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bsqec.noise import (
    GateDurations,
    MotionalState,
    NoiseParams,
    advance_phonons,
    advance_phonons_exact,
    apply_improved,
    crosstalk_rotations,
    CrosstalkParams,
    effective_angle_1q,
    effective_angle_2q,
    fit_mean_phonon,
    rabi_decay_f,
    sample_gate_faults,
    sample_initial_phonons,
    sample_readout_flip,
    walk_batch,
)
from _oracles import rabi_decay_quadrature


def make_rng(seed=7):
    return np.random.Generator(np.random.Philox(key=[seed, 0]))


class TestRabiDecay:
    def test_at_zero(self):
        assert rabi_decay_f(0.0) == 1.0

    def test_small_x_series(self):
        x = 1e-4
        series = 1 - x + 0.75 * x * x
        assert abs(rabi_decay_f(x) - series) < 1e-12

    @pytest.mark.parametrize("x", [0.01, 0.5, 1.0, 5.0, 25.0, 50.0])
    def test_matches_phase_average_quadrature(self, x):
        ref = rabi_decay_quadrature(x)
        assert abs(rabi_decay_f(x) - ref) / ref < 1e-10

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            rabi_decay_f(-0.1)

    def test_monotone_decreasing_and_bounded(self):
        xs = np.linspace(0, 60, 400)
        vals = [rabi_decay_f(x) for x in xs]
        assert all(0 < v <= 1 for v in vals)
        assert all(a > b for a, b in zip(vals, vals[1:]))


class TestEffectiveAngles:
    def test_no_coupling_is_identity(self):
        assert effective_angle_1q(math.pi, 0.0, 1234, 660) == math.pi
        assert effective_angle_2q(0.5, 0.0, 0.0, 99, 660) == 0.5

    def test_zero_phonons_leaves_compensation(self):
        u, nbar = 1e-4, 660.0
        assert effective_angle_1q(1.0, u, 0, nbar) == pytest.approx(1 + u * nbar)

    def test_reference_point(self):
        # theta * (1 + u*nbar0) * f(u*n) evaluated against the quadrature oracle
        u, n, nbar = 1e-4, 660, 660.0
        expected = math.pi * (1 + u * nbar) * rabi_decay_quadrature(u * n)
        assert effective_angle_1q(math.pi, u, n, nbar) == pytest.approx(expected, rel=1e-9)

    @given(st.floats(0, 1e-3), st.floats(0, 1e-3))
    @settings(max_examples=30)
    def test_two_qubit_symmetric(self, ui, uj):
        a = effective_angle_2q(0.7, ui, uj, 100, 660)
        b = effective_angle_2q(0.7, uj, ui, 100, 660)
        assert a == pytest.approx(b, rel=1e-15)

    def test_two_qubit_factorizes(self):
        theta, ui, uj, n, nbar = 0.7, 2e-4, 3e-4, 480, 660.0
        lhs = effective_angle_2q(theta, ui, uj, n, nbar)
        rhs = (effective_angle_1q(theta, ui, n, nbar)
               * effective_angle_1q(theta, uj, n, nbar) / theta)
        assert lhs == pytest.approx(rhs, rel=1e-12)


class TestThermalSampling:
    def test_mean_and_variance(self):
        rng = make_rng(1)
        draws = np.array([sample_initial_phonons(660.0, rng) for _ in range(10**6)])
        assert abs(draws.mean() - 660.0) < 2.0
        assert abs(draws.var() - 660 * 661) / (660 * 661) < 0.01

    def test_zero_limit(self):
        rng = make_rng(2)
        assert all(sample_initial_phonons(0.0, rng) == 0 for _ in range(10))

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            sample_initial_phonons(-1.0, make_rng())


class TestPhononWalk:
    def test_zero_rate_constant(self):
        s = advance_phonons(MotionalState(42), 500.0, 0.0, make_rng())
        assert (s.n, s.t) == (42, 500.0)

    def test_never_negative_from_zero(self):
        rng = make_rng(3)
        for _ in range(20):
            s = advance_phonons(MotionalState(0), 5.0, 0.18, rng)
            assert s.n >= 0

    def test_short_time_drift(self):
        out = walk_batch(660, 100.0, 0.18, seed=11, trajectories=20000)
        expected = 660 + 0.18 * 100
        assert abs(out.mean() - expected) / expected < 0.02

    def test_exact_sampler_matches_walk_moments(self):
        # transition law check at moderate parameters: mean n0+tau,
        # variance tau^2 + tau + 2*n0*tau
        n0, dt, ndot = 30, 20.0, 0.1
        tau = dt * ndot
        rng = make_rng(4)
        draws = np.array([advance_phonons_exact(MotionalState(n0), dt, ndot, rng).n
                          for _ in range(60000)])
        walk = walk_batch(n0, dt, ndot, seed=5, trajectories=60000)
        var_expected = tau * tau + tau + 2 * n0 * tau
        assert abs(draws.mean() - (n0 + tau)) < 0.1
        assert abs(walk.mean() - (n0 + tau)) < 0.1
        assert abs(draws.var() - var_expected) / var_expected < 0.05
        assert abs(walk.var() - var_expected) / var_expected < 0.05

    def test_exact_sampler_distribution_matches_walk(self):
        n0, dt, ndot = 8, 10.0, 0.1
        rng = make_rng(6)
        ex = np.array([advance_phonons_exact(MotionalState(n0), dt, ndot, rng).n
                       for _ in range(40000)])
        wk = walk_batch(n0, dt, ndot, seed=9, trajectories=40000)
        hi = int(max(ex.max(), wk.max())) + 1
        pe = np.bincount(ex, minlength=hi) / len(ex)
        pw = np.bincount(wk, minlength=hi) / len(wk)
        assert np.abs(pe - pw).max() < 0.015

    def test_zero_dt_consumes_no_draws(self):
        a, b = make_rng(7), make_rng(7)
        advance_phonons_exact(MotionalState(5), 0.0, 0.18, a)
        advance_phonons(MotionalState(5), 0.0, 0.18, a)
        assert a.random() == b.random()


def params_with(**kw) -> NoiseParams:
    base = dict(u=np.zeros(19))
    base.update(kw)
    return NoiseParams(**base)


class _FakeGate:
    def __init__(self, kind, ions, duration=0.0):
        self.kind = kind
        self.ions = ions
        self.duration = duration


class TestChannels:
    def test_zero_probability_no_faults_no_draws(self):
        p = params_with()
        a, b = make_rng(8), make_rng(8)
        assert sample_gate_faults(_FakeGate("xx", (1, 2)), p, a) == []
        assert a.random() == b.random()

    def test_half_probability_rates(self):
        p = params_with(p_z_default=0.5)
        rng = make_rng(9)
        hits = {1: 0, 2: 0}
        n = 10**5
        for _ in range(n):
            for ion, pauli in sample_gate_faults(_FakeGate("xx", (1, 2)), p, rng):
                assert pauli == "Z"
                hits[ion] += 1
        for ion in (1, 2):
            assert abs(hits[ion] / n - 0.5) < 0.01

    def test_pair_override(self):
        p = params_with(p_z_default=0.2, p_z_pair={(1, 2): 0.9})
        assert p.p_z(2, 1) == 0.9
        assert p.p_z(1, 3) == 0.2

    def test_idle_dephasing_probability(self):
        p = params_with(gamma_deph=1e-3)
        rng = make_rng(10)
        n = 10**5
        hits = sum(bool(sample_gate_faults(_FakeGate("idle", (4,), duration=100.0), p, rng))
                   for _ in range(n))
        assert abs(hits / n - 0.1) < 0.01

    def test_idle_probability_above_one_rejected(self):
        p = params_with(gamma_deph=1.0)
        with pytest.raises(ValueError):
            sample_gate_faults(_FakeGate("idle", (4,), duration=2.0), p, make_rng())

    def test_rotations_carry_no_stochastic_channel(self):
        p = params_with(p_z_default=0.9, p_x_default=0.9)
        assert sample_gate_faults(_FakeGate("r", (3,)), p, make_rng()) == []


class TestReadoutFlips:
    def test_rates(self):
        p = params_with(p_1to0=4e-3, p_0to1=1.5e-3)
        rng = make_rng(11)
        n = 10**6
        flips1 = sum(sample_readout_flip(1, p, rng) == 0 for _ in range(n))
        flips0 = sum(sample_readout_flip(0, p, rng) == 1 for _ in range(n))
        assert abs(flips1 / n - 4e-3) / 4e-3 < 0.05
        assert abs(flips0 / n - 1.5e-3) / 1.5e-3 < 0.05

    def test_zero_probability_identity(self):
        p = params_with()
        assert sample_readout_flip(1, p, make_rng()) == 1
        assert sample_readout_flip(0, p, make_rng()) == 0

    def test_invalid_bit(self):
        with pytest.raises(ValueError):
            sample_readout_flip(2, params_with(), make_rng())


class TestCrosstalk:
    def _params(self, chi, a):
        n = 4
        chi_p = np.zeros((n + 1, n + 1))
        a_p = np.zeros((n + 1, n + 1, n + 1))
        for (i, k), v in chi.items():
            chi_p[i, k] = v
        for (i, j, k), v in a.items():
            a_p[i, j, k] = v
        return params_with(crosstalk=CrosstalkParams(chi=chi_p, a=a_p))

    def test_zero_chi_empty(self):
        p = self._params({}, {})
        assert crosstalk_rotations(1, 2, 0.7, p, ions=[1, 2, 3, 4]) == []

    def test_single_coupling(self):
        c = 0.03
        p = self._params({(1, 3): c}, {(i, j, k): 1.0 for i in range(1, 5)
                                       for j in range(1, 5) for k in range(1, 5)})
        rots = crosstalk_rotations(1, 2, 0.7, p, ions=[1, 2, 3, 4])
        assert rots == [((1, 3), pytest.approx(c)), ((2, 3), pytest.approx(c))]

    def test_linear_scaling(self):
        for scale in (1.0, 2.0, 5.0):
            c = 0.01 * scale
            p = self._params({(1, 3): c}, {(1, 2, 3): 1.0, (2, 1, 3): 1.0})
            rots = crosstalk_rotations(1, 2, 0.7, p, ions=[1, 2, 3])
            assert rots[0][1] == pytest.approx(c)

    def test_missing_config_rejected(self):
        with pytest.raises(ValueError):
            crosstalk_rotations(1, 2, 0.7, params_with(), ions=[1, 2, 3])


class TestPhononFit:
    def test_exact_fit(self):
        u = np.array([1.0, 2.0, 3.0, 4.0]) * 1e-5
        n_bar, se = fit_mean_phonon(660 * u, u)
        assert n_bar == pytest.approx(660.0)
        assert se == pytest.approx(0.0, abs=1e-6)

    def test_noisy_fit_calibration(self):
        rng = make_rng(12)
        u = np.linspace(1, 3, 13) * 1e-5
        scale = 0.03 * np.mean(660 * u)
        covered = 0
        for _ in range(100):
            eps = 660 * u + scale * rng.standard_normal(len(u))
            n_bar, se = fit_mean_phonon(eps, u)
            if abs(n_bar - 660) <= 2 * se:
                covered += 1
        assert covered >= 90

    def test_degenerate_rejected(self):
        with pytest.raises(ValueError):
            fit_mean_phonon([1.0, 2.0], [0.0, 0.0])


class TestImproved:
    def test_divisions(self):
        p = params_with(p_z_default=0.01, p_x_default=0.008,
                        p_z_pair={(1, 2): 0.05}, n_bar0=660.0)
        q = apply_improved(p)
        assert q.p_z_default == pytest.approx(0.002)
        assert q.p_x_default == pytest.approx(0.002)
        assert q.p_z_pair[(1, 2)] == pytest.approx(0.01)
        assert q.cooling_reset
        assert q.n_bar0 == 660.0

    def test_not_idempotent(self):
        p = params_with(p_z_default=0.01)
        q = apply_improved(apply_improved(p))
        assert q.p_z_default == pytest.approx(0.01 / 25)


class TestValidation:
    def test_probability_range(self):
        with pytest.raises(ValueError):
            params_with(p_z_default=1.5)

    def test_negative_u(self):
        with pytest.raises(ValueError):
            NoiseParams(u=np.array([0, -1e-5]))

    def test_pair_keys_sorted(self):
        with pytest.raises(ValueError):
            params_with(p_z_pair={(2, 1): 0.1})

    def test_durations_positive(self):
        with pytest.raises(ValueError):
            GateDurations(xx_us=-1.0)

    def test_sampler_name(self):
        with pytest.raises(ValueError):
            params_with(motional_sampler="magic")
