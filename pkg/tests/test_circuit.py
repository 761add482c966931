import numpy as np
import pytest

from projens import circuit, gates, qstate, rng as rngmod
from projens.circuit import (
    BELL,
    BELL_PAIRS,
    COMPUTATIONAL,
    MU_INTERPOLATED,
    MeasurementBasis,
)
from projens.qstate import StateVector

import oracles


HAAR = gates.HaarDU()


class TestBrickworkTiling:
    def test_layer_zero_couples_neighboring_pairs(self):
        # the initial Bell pairs sit on even bonds, so the first layer must
        # act on odd bonds or the circuit would start by undoing the pairs
        circ = circuit.build_circuit(6, 3, HAAR, 0)
        assert circ.layer_bonds(0) == [1, 3]
        assert circ.layer_bonds(1) == [0, 2, 4]
        assert circ.layer_bonds(2) == [1, 3]

    def test_gate_table_matches_layer_bonds(self):
        circ = circuit.build_circuit(5, 2, HAAR, 1)
        assert sorted(circ.gates) == [(0, 1), (0, 3), (1, 0), (1, 2)]

    def test_minimal_lattices(self):
        assert sorted(circuit.build_circuit(2, 1, HAAR, 0).gates) == []
        assert sorted(circuit.build_circuit(3, 1, HAAR, 0).gates) == [(0, 1)]
        assert sorted(circuit.build_circuit(4, 2, HAAR, 0).gates) == [
            (0, 1), (1, 0), (1, 2)]

    def test_gates_are_slot_deterministic(self):
        a = circuit.build_circuit(6, 2, HAAR, 42)
        b = circuit.build_circuit(8, 3, HAAR, 42)
        for slot, gate in a.gates.items():
            assert np.array_equal(gate, b.gates[slot])

    def test_invalid_sizes_rejected(self):
        with pytest.raises(ValueError):
            circuit.build_circuit(1, 1, HAAR, 0)
        with pytest.raises(ValueError):
            circuit.build_circuit(4, 0, HAAR, 0)


class TestEvolve:
    @pytest.mark.parametrize("N,t", [(4, 2), (5, 3), (6, 2)])
    def test_matches_dense_oracle(self, N, t):
        circ = circuit.build_circuit(N, t, HAAR, 3)
        psi0 = circuit.initial_state(BELL_PAIRS, N)
        got = circuit.evolve(circ, BELL_PAIRS)
        want = oracles.evolve_oracle(circ, psi0.amplitudes)
        assert np.allclose(got.amplitudes, want, atol=1e-10)

    def test_initial_states(self):
        zero = circuit.initial_state(circuit.ALL_ZERO, 3)
        assert zero.amplitudes[0] == 1.0
        plus = circuit.initial_state(circuit.ALL_PLUS, 3)
        assert np.allclose(plus.amplitudes, 2 ** -1.5)
        bell = circuit.initial_state(BELL_PAIRS, 4)
        # pair (0, 1) is pure Bell: one bit of entropy per half, zero across
        # the pair boundary
        assert qstate.renyi2_entropy(qstate.partial_trace(bell, [0])) == \
            pytest.approx(1.0)
        assert qstate.renyi2_entropy(qstate.partial_trace(bell, [0, 1])) == \
            pytest.approx(0.0, abs=1e-12)

    def test_size_mismatch_rejected(self):
        circ = circuit.build_circuit(4, 1, HAAR, 0)
        with pytest.raises(ValueError):
            circuit.evolve(circ, StateVector.computational(3))

    def test_json_roundtrip_reproduces_circuit(self):
        circ = circuit.build_circuit(5, 2, HAAR, 17)
        doc = circuit.to_json(circ, init_kind=BELL_PAIRS,
                              basis=MeasurementBasis(BELL))
        circ2, init_kind, basis = circuit.from_json(doc)
        assert init_kind == BELL_PAIRS
        assert basis.kind == BELL
        for slot, gate in circ.gates.items():
            assert np.array_equal(gate, circ2.gates[slot])


class TestMeasurementBases:
    def test_basis_states_orthonormal(self):
        for mu in (0.0, 0.25, 0.6, 1.0):
            states = circuit.basis_states(MeasurementBasis(MU_INTERPOLATED, mu))
            assert np.allclose(states @ states.conj().T, np.eye(4), atol=1e-12)

    def test_mu_zero_is_bell_basis(self):
        a = circuit.basis_states(MeasurementBasis(MU_INTERPOLATED, 0.0))
        b = circuit.basis_states(MeasurementBasis(BELL))
        assert np.allclose(a, b)

    def test_mu_one_is_computational_pair_basis_up_to_phase(self):
        states = circuit.basis_states(MeasurementBasis(MU_INTERPOLATED, 1.0))
        for row in states:
            assert np.count_nonzero(np.abs(row) > 1e-12) == 1
            assert np.max(np.abs(row)) == pytest.approx(1.0)

    def test_invalid_mu_rejected(self):
        with pytest.raises(ValueError):
            MeasurementBasis(MU_INTERPOLATED, 1.2)
        with pytest.raises(ValueError):
            MeasurementBasis(MU_INTERPOLATED)

    def test_effective_mu(self):
        assert MeasurementBasis(BELL).effective_mu() == 0.0
        assert MeasurementBasis(COMPUTATIONAL).effective_mu() == 1.0
        assert MeasurementBasis(MU_INTERPOLATED, 0.4).effective_mu() == 0.4


class TestMeasurementUnits:
    def test_clean_pairing_odd_parity(self):
        # N_A + t odd and even bath: pairs sit on bonds == t+1 (mod 2)
        units = circuit.measurement_units(9, 1, 2, MeasurementBasis(BELL))
        assert [sites for sites, _ in units] == [(1, 2), (3, 4), (5, 6), (7, 8)]

    def test_boundary_site_needed_when_parities_match(self):
        with pytest.raises(ValueError, match="parity"):
            circuit.measurement_units(8, 2, 2, MeasurementBasis(BELL))
        units = circuit.measurement_units(
            8, 2, 2, MeasurementBasis(BELL), allow_boundary=True
        )
        assert [sites for sites, _ in units] == [(2,), (3, 4), (5, 6), (7,)]
        assert units[0][1].shape == (2, 2)  # computational readout

    def test_units_tile_the_bath(self):
        for n_a in (1, 2, 3):
            for t in (1, 2, 3):
                units = circuit.measurement_units(
                    9, n_a, t, MeasurementBasis(BELL), allow_boundary=True
                )
                covered = sorted(s for sites, _ in units for s in sites)
                assert covered == list(range(n_a, 9))

    def test_computational_basis_measures_sites_singly(self):
        units = circuit.measurement_units(5, 1, 2, MeasurementBasis(COMPUTATIONAL))
        assert [sites for sites, _ in units] == [(1,), (2,), (3,), (4,)]


class TestTransferMatrix:
    def _column(self, t, seed):
        stream = rngmod.stream(seed, 0)
        return [HAAR.sample(stream) for _ in range(t)]

    @pytest.mark.parametrize("t", [1, 2, 3])
    def test_bell_chain_operator_is_unitary(self, t):
        # DU gates + Bell init + Bell readout: every branch matrix unitary
        column = self._column(t, 5)
        for a in range(4):
            tm = circuit.build_transfer_matrix(
                column, BELL_PAIRS, MeasurementBasis(BELL), a
            )
            m = tm.matrix
            assert np.allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=1e-10)
            assert tm.prefactor == 0.5

    @pytest.mark.parametrize("mu", [0.0, 0.35, 1.0])
    @pytest.mark.parametrize("t", [1, 2])
    def test_kraus_completeness(self, t, mu):
        column = self._column(t, 9)
        basis = MeasurementBasis(MU_INTERPOLATED, mu)
        total = np.zeros((1 << (t + 1),) * 2, dtype=np.complex128)
        for a in range(4):
            tm = circuit.build_transfer_matrix(column, BELL_PAIRS, basis, a)
            k = tm.prefactor * tm.matrix
            total += k.conj().T @ k
        assert np.allclose(total, np.eye(total.shape[0]), atol=1e-10)

    def test_outcome_operator_is_pauli_shift(self):
        # T_a = T_0 . (conj(sigma^a) on the input edge qubit d_t)
        t = 2
        column = self._column(t, 13)
        basis = MeasurementBasis(BELL)
        t0 = circuit.build_transfer_matrix(column, BELL_PAIRS, basis, 0).matrix
        for a in range(4):
            ta = circuit.build_transfer_matrix(column, BELL_PAIRS, basis, a).matrix
            shift = np.kron(gates.PAULIS[a].conj(), np.eye(1 << t))
            assert np.allclose(ta, t0 @ shift, atol=1e-12)

    def test_outcome_edge_ops_are_conjugated_paulis_for_bell(self):
        basis = MeasurementBasis(BELL)
        for a in range(4):
            op = circuit.outcome_edge_op(basis, a)
            assert np.allclose(op, gates.PAULIS[a].conj(), atol=1e-12)

    def test_edge_ops_resolve_identity(self):
        for mu in (0.0, 0.5, 1.0):
            basis = MeasurementBasis(MU_INTERPOLATED, mu)
            total = sum(
                circuit.outcome_edge_op(basis, a).conj().T
                @ circuit.outcome_edge_op(basis, a)
                for a in range(4)
            )
            assert np.allclose(total, 4.0 * np.eye(2), atol=1e-12)


class TestSidewaysContraction:
    @pytest.mark.parametrize(
        "N,N_A,t", [(7, 1, 2), (8, 2, 1), (8, 2, 3), (9, 1, 4), (9, 3, 2)]
    )
    @pytest.mark.parametrize("mu", [0.0, 0.4, 1.0])
    def test_reproduces_statevector_evolution(self, N, N_A, t, mu):
        basis = MeasurementBasis(MU_INTERPOLATED, mu)
        circ = circuit.build_circuit(N, t, HAAR, 1000 * N + 10 * N_A + t)
        psi = circuit.evolve(circ, BELL_PAIRS)
        units = circuit.measurement_units(N, N_A, t, basis)
        want, kept = qstate.outcome_amplitude_table(psi, units)
        assert kept == list(range(N_A))
        got = circuit.sideways_amplitude_table(circ, N_A, basis)
        assert np.max(np.abs(got - want)) < 1e-9

    def test_requires_clean_pairing(self):
        circ = circuit.build_circuit(8, 2, HAAR, 0)
        with pytest.raises(ValueError):
            circuit.sideways_amplitude_table(circ, 2, MeasurementBasis(BELL))


class TestDualStepMonitored:
    def _rig(self, outcome):
        class Rig:
            def random(self):
                return 0.0 if outcome in (0, 2) else 1.0

            def integers(self, m):
                return outcome // 2 if m == 2 else outcome

        return Rig()

    @pytest.mark.parametrize("t", [1, 2, 3])
    @pytest.mark.parametrize("mu", [0.0, 0.3, 1.0])
    def test_step_equals_normalized_kraus_branch(self, t, mu):
        basis = MeasurementBasis(MU_INTERPOLATED, mu)
        stream = rngmod.stream(5, t)
        column = [HAAR.sample(stream) for _ in range(t)]
        psi = circuit.solvable_edge_state(t)
        for a in range(4):
            tm = circuit.build_transfer_matrix(column, BELL_PAIRS, basis, a)
            branch = tm.prefactor * tm.matrix @ psi.amplitudes
            p = np.linalg.norm(branch)
            if p < 1e-8:
                continue
            new, out = circuit.dual_step_monitored(psi, column, basis, self._rig(a))
            assert out == a
            assert np.max(np.abs(new.amplitudes - branch / p)) < 1e-12

    def test_outcome_frequencies_follow_born_rule(self):
        t, mu = 2, 0.6
        basis = MeasurementBasis(MU_INTERPOLATED, mu)
        stream = rngmod.stream(9, 0)
        column = [HAAR.sample(stream) for _ in range(t)]
        psi = circuit.solvable_edge_state(t)
        exact = []
        for a in range(4):
            tm = circuit.build_transfer_matrix(column, BELL_PAIRS, basis, a)
            exact.append(np.linalg.norm(tm.prefactor * tm.matrix @ psi.amplitudes) ** 2)
        rng = np.random.default_rng(2)
        counts = np.zeros(4)
        shots = 20000
        for _ in range(shots):
            _, out = circuit.dual_step_monitored(psi, column, basis, rng)
            counts[out] += 1
        for a in range(4):
            sigma = np.sqrt(exact[a] * (1 - exact[a]) / shots)
            assert abs(counts[a] / shots - exact[a]) < 5 * sigma + 1e-3

    def test_bell_basis_step_preserves_entropy(self):
        # mu = 0: the step is unitary on the chain, so the reference qubit
        # entanglement cannot change -- purification freezes
        t = 3
        psi = circuit.solvable_edge_state(t)
        rng = rngmod.stream(1, 2)
        stream = rngmod.stream(1, 3)
        basis = MeasurementBasis(MU_INTERPOLATED, 0.0)
        before = qstate.partial_trace(psi, [0]).purity()
        for _ in range(5):
            column = [HAAR.sample(stream) for _ in range(t)]
            psi, _ = circuit.dual_step_monitored(psi, column, basis, rng)
        # d_0 entropy is not conserved, but the norm is; check unitarity
        assert psi.norm() == pytest.approx(1.0, abs=1e-10)
        assert before == pytest.approx(0.5, abs=1e-12)

    def test_reference_qubit_is_a_spectator_at_mu_zero(self):
        # a mu = 0 step acts unitarily on the chain and not at all on the
        # reference qubit above it, so rho_R is exactly invariant
        t = 3
        psi = StateVector.computational(t + 2)
        psi = qstate.apply_gate(psi, circuit._BELL_PREP, (t + 1, 0))
        psi = qstate.apply_gate(psi, circuit._BELL_PREP, (1, 2))
        basis = MeasurementBasis(MU_INTERPOLATED, 0.0)
        stream = rngmod.stream(4, 0)
        rng = rngmod.stream(4, 1)
        before = qstate.partial_trace(psi, [t + 1]).entries
        for _ in range(4):
            column = [HAAR.sample(stream) for _ in range(t)]
            psi, _ = circuit.dual_step_monitored(psi, column, basis, rng)
        after = qstate.partial_trace(psi, [t + 1]).entries
        assert np.allclose(after, before, atol=1e-12)


class TestKickedIsing:
    @pytest.mark.parametrize("N", [4, 6])
    @pytest.mark.parametrize("t", [1, 2, 3])
    def test_brickwork_equals_floquet_power(self, N, t):
        g = float(rngmod.stream(77, N, t).uniform(0, 2 * np.pi))
        assert circuit.verify_kim_brickwork(N, t, g, atol=1e-8) < 1e-8

    def test_floquet_operator_is_unitary(self):
        u = circuit.kicked_ising_floquet(4, 0.9)
        assert np.allclose(u.conj().T @ u, np.eye(16), atol=1e-12)
