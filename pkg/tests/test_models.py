import math

import numpy as np
import pytest

from qcollide.core import DensityMatrix, reduce_amps, state_defects
from qcollide.errors import CapacityError, IntegrityError
from qcollide.gates import SWAP, ThermalSpec, partial_swap_amps, thermal_state
from qcollide.measures import blp_measure, coherence, trace_distance
from qcollide.models import (
    DirectConfig,
    IndirectConfig,
    StopPolicy,
    full_chain_oracle,
    initial_pair,
    run_model,
    step_direct,
    step_indirect,
    with_param,
)

HALF_PI = math.pi / 2


def short(n):
    return StopPolicy(n_max=n, settle_window=min(n, 50))


def iterate_direct(cfg, steps):
    fresh = thermal_state(cfg.thermal)
    pair = tuple(DensityMatrix(x) for x in initial_pair(cfg))
    out = []
    for n in range(1, steps + 1):
        a, b, rec = step_direct(pair, fresh, cfg, n=n)
        pair = (a, b)
        out.append((a, b, rec))
    return out


class TestConfigs:
    def test_strength_validation(self):
        with pytest.raises(ValueError):
            DirectConfig(J=2.0)
        with pytest.raises(ValueError):
            IndirectConfig(kappa=-0.1)

    def test_stop_policy_validation(self):
        with pytest.raises(ValueError):
            StopPolicy(n_max=10, settle_window=50)
        with pytest.raises(ValueError):
            StopPolicy(eps_settle=0.0)

    def test_with_param(self):
        cfg = with_param(DirectConfig(), "T", 2.5)
        assert cfg.thermal.T == 2.5
        assert with_param(cfg, "Omega", 0.4).Omega == 0.4
        with pytest.raises(ValueError):
            with_param(cfg, "kappa", 0.1)
        with pytest.raises(ValueError):
            with_param(cfg, "g", 0.1)


class TestStepDirect:
    def test_identity_collision(self):
        cfg = DirectConfig(J=0.0, Omega=0.7, thermal=ThermalSpec(1.0))
        for a, b, rec in iterate_direct(cfg, 20):
            assert rec.D == pytest.approx(1.0, abs=1e-14)
            assert np.allclose(reduce_amps(a.amps, 2, [0]), np.full((2, 2), 0.5), atol=1e-14)

    def test_full_swap_with_ground_ancilla(self):
        cfg = DirectConfig(J=HALF_PI, Omega=0.0, thermal=ThermalSpec(0.0))
        a, b, rec = iterate_direct(cfg, 1)[0]
        assert np.allclose(reduce_amps(a.amps, 2, [0]), np.diag([1.0, 0.0]), atol=1e-15)
        assert rec.D == pytest.approx(0.0, abs=1e-15)

    def test_markovian_zero_temperature(self):
        cfg = DirectConfig(J=0.4, Omega=0.0, thermal=ThermalSpec(0.0))
        pops = [0.5]
        for a, b, rec in iterate_direct(cfg, 60):
            assert rec.dD <= 0
            pops.append(rec.pop_S)
        assert np.all(np.diff(pops) < 0)

    def test_matches_two_qubit_closed_form(self):
        # with Omega = 0 each step is the channel rho -> Tr_R[U (rho x R) U^dag]
        cfg = DirectConfig(J=0.5, Omega=0.0, thermal=ThermalSpec(1.5))
        r = thermal_state(cfg.thermal).amps
        u = partial_swap_amps(cfg.J)
        rho = np.full((2, 2), 0.5, dtype=complex)
        for a, b, rec in iterate_direct(cfg, 10):
            big = u @ np.kron(rho, r) @ u.conj().T
            rho = big.reshape(2, 2, 2, 2).trace(axis1=1, axis2=3)
            assert np.allclose(reduce_amps(a.amps, 2, [0]), rho, atol=1e-14)

    def test_pair_symmetry_and_cr_choice(self):
        cfg = DirectConfig(J=0.3, Omega=0.95, thermal=ThermalSpec(5.0))
        for a, b, rec in iterate_direct(cfg, 40):
            sa, sb = reduce_amps(a.amps, 2, [0]), reduce_amps(b.amps, 2, [0])
            ra, rb = reduce_amps(a.amps, 2, [1]), reduce_amps(b.amps, 2, [1])
            assert abs(coherence(sa) - coherence(sb)) < 1e-14
            assert abs(coherence(ra) - coherence(rb)) < 1e-14
            assert rec.C_R == coherence(ra)

    def test_integrity_error_carries_step(self):
        bad = DensityMatrix(np.diag([-0.5, 0.0, 0.0, 1.5]).astype(complex), check=False)
        cfg = DirectConfig(J=0.0, Omega=0.0)
        with pytest.raises(IntegrityError) as info:
            step_direct((bad, bad), thermal_state(cfg.thermal), cfg, n=7)
        assert info.value.step == 7

    def test_shape_check(self):
        cfg = DirectConfig()
        with pytest.raises(ValueError):
            step_direct((np.eye(8) / 8, np.eye(8) / 8), thermal_state(cfg.thermal), cfg)


class TestStepIndirect:
    def _iterate(self, cfg, steps):
        fresh = thermal_state(cfg.thermal)
        pair = tuple(DensityMatrix(x) for x in initial_pair(cfg))
        recs = []
        for n in range(1, steps + 1):
            a, b, rec = step_indirect(pair, fresh, cfg, n=n)
            pair = (a, b)
            recs.append(rec)
        return recs

    def test_kappa_zero_decouples(self):
        cfg = IndirectConfig(kappa=0.0, J=0.6, Omega=0.8, thermal=ThermalSpec(2.0))
        assert all(r.D == pytest.approx(1.0, abs=1e-14) for r in self._iterate(cfg, 15))

    def test_full_swap_oscillation(self):
        # two-qubit closed form: S and S' exchange states each step
        cfg = IndirectConfig(kappa=HALF_PI, J=0.0, Omega=0.0, thermal=ThermalSpec(1.0))
        th = thermal_state(cfg.thermal).amps
        pair = [np.kron(np.full((2, 2), 0.5), th), np.kron(np.array([[0.5, -0.5], [-0.5, 0.5]]), th)]
        expected = []
        for _ in range(8):
            pair = [SWAP @ p @ SWAP for p in pair]
            s = [p.reshape(2, 2, 2, 2).trace(axis1=1, axis2=3) for p in pair]
            expected.append(trace_distance(s[0], s[1]))
        got = [r.D for r in self._iterate(cfg, 8)]
        assert np.allclose(got, expected, atol=1e-14)
        assert np.allclose(got, [0, 1] * 4, atol=1e-14)

    def test_weak_kappa_is_markovian(self):
        cfg = IndirectConfig(kappa=0.1, J=0.6, Omega=0.0, thermal=ThermalSpec(1.0))
        traj = run_model(cfg)
        assert np.all(traj.column("dD")[1:] <= 1e-12)


class TestRunModel:
    def test_initial_record(self):
        traj = run_model(DirectConfig(stop=short(5)))
        r0 = traj.records[0]
        assert (r0.n, r0.D, r0.dD, r0.C_S, r0.pop_S) == (0, 1.0, 0.0, 0.5, 0.5)
        assert len(traj.records) == traj.n_steps_run + 1

    def test_markovian_converges(self):
        traj = run_model(DirectConfig(J=0.3, Omega=0.0, thermal=ThermalSpec(1.0)))
        assert traj.converged
        assert traj.n_steps_run < traj.config.stop.n_max
        assert np.all(traj.column("dD") <= 1e-12)

    def test_settle_window_respected(self):
        traj = run_model(DirectConfig(J=0.3, Omega=0.0))
        tail = traj.records[-50:]
        assert all(r.D < 1e-7 and abs(r.dD) < 1e-7 for r in tail)
        assert not (traj.records[-51].D < 1e-7 and abs(traj.records[-51].dD) < 1e-7)

    def test_zero_temperature_non_markovian(self):
        traj = run_model(DirectConfig(J=0.3, Omega=0.95, thermal=ThermalSpec(0.0)))
        assert np.any(traj.column("dD") > 0)

    def test_indirect_kappa_zero_runs_to_n_max(self):
        traj = run_model(IndirectConfig(kappa=0.0, J=0.5, Omega=0.5, stop=short(200)))
        assert not traj.converged
        assert traj.n_steps_run == 200
        assert np.all(traj.D == 1.0)

    def test_long_run_keeps_states_valid(self):
        # engine validates every step; an unconverged 3000-step run must finish cleanly
        cfg = DirectConfig(J=0.3, Omega=HALF_PI, thermal=ThermalSpec(0.0))
        traj = run_model(cfg)
        assert traj.n_steps_run == 3000
        D = traj.D
        assert np.all((D >= 0) & (D <= 1))
        cs, cr = traj.column("C_S"), traj.column("C_R")
        assert np.all((cs >= 0) & (cs <= 0.5)) and np.all((cr >= 0) & (cr <= 0.5))

    def test_final_state_valid_after_long_indirect_run(self):
        cfg = IndirectConfig(kappa=0.4, J=0.6, Omega=1.2, thermal=ThermalSpec(3.0), stop=short(3000))
        fresh = thermal_state(cfg.thermal)
        pair = tuple(DensityMatrix(x) for x in initial_pair(cfg))
        for n in range(1, 301):
            a, b, _ = step_indirect(pair, fresh, cfg, n=n)
            pair = (a, b)
        assert state_defects(np.stack([a.amps, b.amps])) == []

    def test_d_equals_twice_coherence(self):
        for cfg in (DirectConfig(J=0.7, Omega=1.1, thermal=ThermalSpec(2.0)),
                    IndirectConfig(kappa=0.4, J=0.5, Omega=0.9, thermal=ThermalSpec(1.0))):
            traj = run_model(cfg)
            assert np.max(np.abs(traj.D - 2 * traj.column("C_S"))) < 1e-12

    @pytest.mark.parametrize("J,T", [(0.1, 0.0), (0.5, 3.0), (1.2, 10.0)])
    def test_markovian_baseline(self, J, T):
        traj = run_model(DirectConfig(J=J, Omega=0.0, thermal=ThermalSpec(T)))
        assert blp_measure(traj).N == 0.0


class TestOracle:
    @pytest.mark.parametrize("cfg", [
        DirectConfig(J=0.3, Omega=0.95, thermal=ThermalSpec(1.0)),
        IndirectConfig(kappa=0.3, J=0.5, Omega=0.9, thermal=ThermalSpec(1.0)),
    ])
    def test_agrees_with_engine(self, cfg):
        ref = full_chain_oracle(cfg, 6)
        got = run_model(cfg)
        for field in ("D", "dD", "C_S", "C_R", "pop_S"):
            assert np.max(np.abs(ref.column(field) - got.column(field)[:7])) < 1e-10

    def test_first_step_identical(self):
        cfg = DirectConfig(J=1.0, Omega=0.4, thermal=ThermalSpec(0.7))
        ref = full_chain_oracle(cfg, 1).records[1]
        got = run_model(cfg).records[1]
        for field in ("D", "C_S", "C_R", "pop_S"):
            assert getattr(ref, field) == pytest.approx(getattr(got, field), abs=1e-14)

    def test_oracle_uses_independent_register(self):
        # the oracle register holds every ancilla: 8 direct collisions fill 10 qubits
        cfg = DirectConfig(J=0.2, Omega=0.3, thermal=ThermalSpec(0.5))
        assert full_chain_oracle(cfg, 8).n_steps_run == 8

    def test_capacity(self):
        with pytest.raises(CapacityError):
            full_chain_oracle(IndirectConfig(), 8)
        with pytest.raises(ValueError):
            full_chain_oracle(DirectConfig(), 9)
