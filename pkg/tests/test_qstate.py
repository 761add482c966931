import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from projens import qstate
from projens.circuit import _BELL_PREP
from projens.qstate import DensityMatrix, StateVector

import oracles


def random_state(n, seed):
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(n, amps / np.linalg.norm(amps))


def random_unitary(dim, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(m)
    return q * (np.diag(r) / np.abs(np.diag(r)))


class TestStateVector:
    def test_computational_basis_state(self):
        psi = StateVector.computational(3, index=5)
        assert psi.amplitudes[5] == 1.0
        assert np.count_nonzero(psi.amplitudes) == 1

    def test_all_plus_is_uniform(self):
        psi = StateVector.all_plus(4)
        assert np.allclose(psi.amplitudes, 0.25)

    def test_wrong_length_rejected(self):
        with pytest.raises(ValueError):
            StateVector(3, np.zeros(7, dtype=np.complex128))

    def test_norm_and_overlap(self):
        psi = random_state(4, 0)
        assert psi.norm() == pytest.approx(1.0)
        assert psi.overlap(psi) == pytest.approx(1.0)


class TestApplyGate:
    @pytest.mark.parametrize("qa,qb", [(0, 1), (1, 0), (0, 2), (3, 1), (4, 2)])
    def test_matches_dense_oracle(self, qa, qb):
        n = 5
        psi = random_state(n, hash((qa, qb)) % 2**31)
        gate = random_unitary(4, 7)
        got = qstate.apply_gate(psi, gate, (qa, qb))
        want = oracles.apply_gate_oracle(psi.amplitudes, gate, (qa, qb))
        assert np.allclose(got.amplitudes, want, atol=1e-12)

    def test_one_qubit_matches_oracle(self):
        n = 4
        psi = random_state(n, 3)
        gate = random_unitary(2, 5)
        for q in range(n):
            got = qstate.apply_one_qubit_gate(psi, gate, q)
            want = oracles.apply_gate_oracle(psi.amplitudes, gate, (q,))
            assert np.allclose(got.amplitudes, want, atol=1e-12)

    def test_input_state_not_mutated(self):
        psi = random_state(3, 1)
        before = psi.amplitudes.copy()
        qstate.apply_gate(psi, random_unitary(4, 2), (0, 2))
        assert np.array_equal(psi.amplitudes, before)

    def test_non_unitary_gate_rejected(self):
        psi = random_state(2, 0)
        with pytest.raises(ValueError, match="unitary"):
            qstate.apply_gate(psi, np.ones((4, 4)), (0, 1))

    def test_apply_matrix_allows_non_unitary(self):
        psi = random_state(3, 2)
        kraus = np.diag([1.0, 0.0]).astype(np.complex128)
        got = qstate.apply_matrix(psi, kraus, (1,))
        want = oracles.apply_gate_oracle(psi.amplitudes, kraus, (1,))
        assert np.allclose(got.amplitudes, want, atol=1e-12)

    def test_same_qubit_twice_rejected(self):
        with pytest.raises(ValueError):
            qstate.apply_gate(random_state(3, 0), np.eye(4), (1, 1))


class TestPartialTrace:
    @pytest.mark.parametrize("keep", [[0], [2], [0, 1], [1, 3], [0, 2, 3]])
    def test_matches_oracle(self, keep):
        psi = random_state(4, sum(keep) + 11)
        got = qstate.partial_trace(psi, keep)
        want = oracles.partial_trace_oracle(psi.amplitudes, keep)
        assert np.allclose(got.entries, want, atol=1e-12)

    def test_density_matrix_input_matches_statevector_path(self):
        psi = random_state(4, 9)
        rho_full = DensityMatrix(4, np.outer(psi.amplitudes, psi.amplitudes.conj()))
        a = qstate.partial_trace(psi, [1, 2]).entries
        b = qstate.partial_trace(rho_full, [1, 2]).entries
        assert np.allclose(a, b, atol=1e-12)

    def test_bell_pair_reduces_to_maximally_mixed(self):
        psi = StateVector.computational(2)
        psi = qstate.apply_gate(psi, _BELL_PREP, (0, 1))
        rho = qstate.partial_trace(psi, [0])
        assert np.allclose(rho.entries, np.eye(2) / 2, atol=1e-12)
        assert qstate.renyi2_entropy(rho) == pytest.approx(1.0)

    def test_validate_accepts_physical_state(self):
        qstate.partial_trace(random_state(5, 4), [0, 3]).validate()


class TestMeasurement:
    def _pair_units(self, basis_seed):
        pair = random_unitary(4, basis_seed)
        return [((0, 1), pair), ((2, 3), random_unitary(4, basis_seed + 1))]

    def test_outcome_table_matches_oracle(self):
        psi = random_state(5, 21)
        units = [((1, 3), random_unitary(4, 2)), ((4,), random_unitary(2, 3))]
        table, kept = qstate.outcome_amplitude_table(psi, units)
        assert kept == [0, 2]
        probs, states, _ = oracles.projected_ensemble_oracle(
            psi.amplitudes, kept, units
        )
        assert np.allclose(np.sum(np.abs(table) ** 2, axis=1), probs, atol=1e-12)
        for z in range(table.shape[0]):
            if probs[z] > 1e-12:
                assert np.allclose(table[z] / np.sqrt(probs[z]), states[z], atol=1e-10)

    def test_enumeration_probabilities_sum_to_one(self):
        psi = random_state(4, 5)
        outs = qstate.enumerate_projective(psi, self._pair_units(8))
        assert sum(o.probability for o in outs) == pytest.approx(1.0)
        for o in outs:
            assert o.post_state.norm() == pytest.approx(1.0)

    def test_born_sampling_matches_enumeration(self):
        psi = random_state(4, 6)
        units = self._pair_units(12)
        exact = {o.label: o.probability for o in qstate.enumerate_projective(psi, units)}
        rng = np.random.default_rng(0)
        counts = {}
        n_shots = 4000
        for _ in range(n_shots):
            out = qstate.measure_projective(psi, units, rng)
            counts[out.label] = counts.get(out.label, 0) + 1
        for label, p in exact.items():
            freq = counts.get(label, 0) / n_shots
            sigma = np.sqrt(p * (1 - p) / n_shots)
            assert abs(freq - p) < 5 * sigma + 1e-3

    def test_non_orthonormal_basis_rejected(self):
        psi = random_state(2, 7)
        bad = np.ones((4, 4), dtype=np.complex128)
        with pytest.raises(ValueError, match="orthonormal"):
            qstate.outcome_amplitude_table(psi, [((0, 1), bad)])

    def test_weak_measurement_kraus_completeness(self):
        for mu in (0.0, 0.3, 0.8, 1.0):
            kp, km = qstate.weak_measurement_kraus(mu)
            total = kp.conj().T @ kp + km.conj().T @ km
            assert np.allclose(total, np.eye(2), atol=1e-14)

    def test_weak_measurement_statistics(self):
        psi = random_state(3, 13)
        mu = 0.6
        kp, _ = qstate.weak_measurement_kraus(mu)
        p_plus_exact = qstate.apply_matrix(psi, kp, (1,)).norm() ** 2
        rng = np.random.default_rng(1)
        hits = sum(
            qstate.apply_weak_measurement(psi, 1, mu, rng).label == +1
            for _ in range(3000)
        )
        sigma = np.sqrt(p_plus_exact * (1 - p_plus_exact) / 3000)
        assert abs(hits / 3000 - p_plus_exact) < 5 * sigma + 1e-3


@settings(max_examples=25, deadline=None)
@given(
    n=st.integers(min_value=2, max_value=5),
    seed=st.integers(min_value=0, max_value=2**31 - 1),
)
def test_unitary_preserves_norm_property(n, seed):
    psi = random_state(n, seed)
    gate = random_unitary(4, seed ^ 0x5A5A)
    rng = np.random.default_rng(seed)
    qa, qb = rng.choice(n, size=2, replace=False)
    out = qstate.apply_gate(psi, gate, (int(qa), int(qb)))
    assert out.norm() == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**31 - 1))
def test_measurement_branches_resolve_identity_property(seed):
    psi = random_state(3, seed)
    units = [((0,), random_unitary(2, seed % 1000)), ((2,), np.eye(2, dtype=complex))]
    outs = qstate.enumerate_projective(psi, units)
    assert sum(o.probability for o in outs) == pytest.approx(1.0, abs=1e-10)
