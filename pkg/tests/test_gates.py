import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from projens import gates, rng as rngmod


def is_unitary(m, atol=1e-12):
    return np.allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=atol)


class TestSpacetimeDual:
    def test_index_permutation_definition(self):
        rng = np.random.default_rng(0)
        u = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        d = gates.spacetime_dual(u)
        for i in range(2):
            for j in range(2):
                for k in range(2):
                    for l in range(2):
                        assert d[2 * j + l, 2 * i + k] == u[2 * k + l, 2 * i + j]

    def test_involution(self):
        u = gates.HaarDU().sample(rngmod.stream(0, 1))
        assert np.allclose(gates.spacetime_dual(gates.spacetime_dual(u)), u)

    def test_swap_is_self_dual(self):
        assert np.allclose(gates.spacetime_dual(gates.SWAP), gates.SWAP)

    def test_identity_dualizes_to_bell_projector(self):
        bell = np.array([1, 0, 0, 1], dtype=np.complex128) / np.sqrt(2)
        assert np.allclose(gates.spacetime_dual(np.eye(4)), 2 * np.outer(bell, bell))

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            gates.spacetime_dual(np.eye(3))


class TestDualUnitaryFamilies:
    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2**31 - 1))
    def test_haar_du_samples_are_dual_unitary(self, seed):
        u = gates.HaarDU().sample(rngmod.stream(seed, 0))
        assert gates.is_dual_unitary(u)

    @settings(max_examples=20, deadline=None)
    @given(
        seed=st.integers(min_value=0, max_value=2**31 - 1),
        coupling=st.floats(min_value=0.0, max_value=1.0),
    )
    def test_restricted_j_samples_are_dual_unitary(self, seed, coupling):
        u = gates.RestrictedJ(coupling).sample(rngmod.stream(seed, 0))
        assert gates.is_dual_unitary(u)

    def test_swap_gate_is_dual_unitary_but_cz_is_not(self):
        assert gates.is_dual_unitary(gates.SWAP)
        cz = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)
        assert not gates.is_dual_unitary(cz)

    def test_haar_su2_is_special_unitary(self):
        u = gates.haar_su2(rngmod.stream(3, 1))
        assert is_unitary(u)
        assert np.linalg.det(u) == pytest.approx(1.0)

    def test_assemble_du_structure(self):
        # J = 0 must be locally equivalent to SWAP: assemble with trivial
        # one-site factors and check it is exactly SWAP
        assert np.allclose(
            gates.assemble_du(*(np.eye(2),) * 4, 0.0), gates.SWAP, atol=1e-15
        )

    def test_restricted_j_coupling_range_enforced(self):
        with pytest.raises(ValueError):
            gates.RestrictedJ(1.5)

    def test_fixed_gate_roundtrip(self):
        fam = gates.FixedGate.of(gates.SWAP)
        assert np.array_equal(fam.sample(None), gates.SWAP)


class TestBatchSampling:
    @pytest.mark.parametrize(
        "family", [gates.HaarDU(), gates.RestrictedJ(0.4), gates.KIM(0.7)]
    )
    def test_batch_matches_sequential_draws(self, family):
        stream = rngmod.stream(11, 2, 5)
        a = [family.sample(stream) for _ in range(7)]
        b = gates.sample_gates(family, rngmod.stream(11, 2, 5), 7)
        assert b.shape == (7, 4, 4)
        for x, y in zip(a, b):
            assert np.allclose(x, y, atol=1e-14)

    def test_empty_batch(self):
        out = gates.sample_gates(gates.HaarDU(), rngmod.stream(0, 0), 0)
        assert out.shape == (0, 4, 4)


class TestKimGates:
    def test_kim_dual_gate_is_exactly_self_dual(self):
        g = 0.37
        u = gates.kim_dual_gate(g)
        assert is_unitary(u)
        assert np.allclose(gates.spacetime_dual(u), u, atol=1e-14)

    def test_kim_gate_is_dual_unitary(self):
        assert gates.is_dual_unitary(gates.kim_gate(1.23))

    def test_kim_gate_locally_equivalent_to_kim_dual_gate(self):
        # equal two-qubit local invariants: spectra of U (U^T)_{SWAP-basis}
        # are a complete local invariant; compare via the Makhlin-style
        # characteristic of M = (Q^dag U Q)^T (Q^dag U Q) in the magic basis
        q = np.array(
            [[1, 0, 0, 1j], [0, 1j, 1, 0], [0, 1j, -1, 0], [1, 0, 0, -1j]],
            dtype=np.complex128,
        ) / np.sqrt(2)
        def invariants(u):
            m = q.conj().T @ u @ q
            mm = m.T @ m
            ev = np.linalg.eigvals(mm / np.linalg.det(u) ** 0.5)
            return np.sort_complex(ev)
        g = 0.81
        a = invariants(gates.kim_gate(g))
        b = invariants(gates.kim_dual_gate(g))
        match_direct = np.allclose(a, b, atol=1e-8)
        match_conj = np.allclose(a, np.conj(b)[np.argsort(np.conj(b))], atol=1e-8)
        assert match_direct or match_conj


class TestPhaseDistance:
    def test_zero_up_to_phase(self):
        u = gates.HaarDU().sample(rngmod.stream(2, 0))
        assert gates.phase_distance(u, np.exp(0.3j) * u) == pytest.approx(0.0, abs=1e-12)

    def test_positive_for_different_matrices(self):
        assert gates.phase_distance(gates.SWAP, np.eye(4)) > 1.0


class TestFamilySpecs:
    @pytest.mark.parametrize(
        "spec",
        [
            {"kind": "haar_du"},
            {"kind": "restricted_j", "coupling": 0.25},
            {"kind": "kim", "g": 0.5},
            {"kind": "swap"},
        ],
    )
    def test_roundtrip(self, spec):
        family = gates.family_from_spec(**spec)
        assert gates.family_to_spec(family) == spec

    def test_unknown_family_rejected(self):
        with pytest.raises(ValueError):
            gates.family_from_spec("rainbow")

    def test_sample_gate_is_deterministic_per_slot(self):
        fam = gates.HaarDU()
        a = gates.sample_gate(fam, 5, 0, 3)
        b = gates.sample_gate(fam, 5, 0, 3)
        c = gates.sample_gate(fam, 5, 0, 4)
        assert np.array_equal(a, b)
        assert not np.allclose(a, c)
