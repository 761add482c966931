"""Two-qubit gates: dual-unitary families and the space-time dual map.

A two-qubit gate is a 4x4 complex array in the local basis |x y> with
local index 2*x + y (first tensor factor = first site of the bond).

Dual-unitary gates are parametrized as

    U = (r (x) s) . SWAP . exp(-i J Z(x)Z) . (u (x) v)

with r, s, u, v in SU(2) and J in [0, pi/4]. J = pi/4 gives the SWAP-like
"fully chaotic" corner of the family; J = 0 leaves U equivalent to SWAP.
"""

from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod

PAULI_I = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PAULIS = (PAULI_I, PAULI_X, PAULI_Y, PAULI_Z)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=np.complex128
)


def zz_phase(J):
    """exp(-i J Z(x)Z), diagonal in the computational basis."""
    return np.diag(np.exp(-1j * J * np.array([1.0, -1.0, -1.0, 1.0])))


def rot_z(theta):
    """exp(-i theta Z / 2)."""
    return np.diag(np.exp(-0.5j * theta * np.array([1.0, -1.0])))


def haar_su2(rng):
    """Haar-random SU(2) element via a uniform unit quaternion."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    a, b, c, d = q
    return np.array([[a + 1j * b, c + 1j * d], [-c + 1j * d, a - 1j * b]])


def assemble_du(r, s, u, v, J):
    """Build a dual-unitary gate from four SU(2) factors and the coupling J."""
    return np.kron(r, s) @ SWAP @ zz_phase(J) @ np.kron(u, v)


def _su2_batch(quaternions):
    """SU(2) matrices (n, 2, 2) from rows of unnormalized quaternions (n, 4)."""
    q = quaternions / np.linalg.norm(quaternions, axis=-1, keepdims=True)
    a, b, c, d = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    out = np.empty((len(q), 2, 2), dtype=np.complex128)
    out[:, 0, 0] = a + 1j * b
    out[:, 0, 1] = c + 1j * d
    out[:, 1, 0] = -c + 1j * d
    out[:, 1, 1] = a - 1j * b
    return out


def _kron_batch(x, y):
    """Batched Kronecker product of (n, 2, 2) factors -> (n, 4, 4)."""
    return np.einsum("nij,nkl->nikjl", x, y).reshape(len(x), 4, 4)


def _assemble_du_batch(quaternions, J):
    """Vectorized assemble_du for quaternion rows (n, 4, 4) and couplings (n,).

    quaternions[i] holds the four unnormalized SU(2) quaternions (r, s, u, v)
    of gate i; returns the (n, 4, 4) gate stack, matching assemble_du gate by
    gate up to floating-point association.
    """
    mats = _su2_batch(quaternions.reshape(-1, 4)).reshape(-1, 4, 2, 2)
    phase = np.exp(-1j * np.asarray(J)[:, None] * np.array([1.0, -1.0, -1.0, 1.0]))
    left = _kron_batch(mats[:, 0], mats[:, 1]) @ SWAP
    return (left * phase[:, None, :]) @ _kron_batch(mats[:, 2], mats[:, 3])


def spacetime_dual(gate):
    """Space-time dual: the gate read sideways, right legs as outputs.

    With U[2k+l, 2i+j] = <k l|U|i j> (inputs i, j at the bottom, outputs
    k, l at the top), the dual gate takes the two left legs (i, k) to the
    two right legs (j, l): dual(U)[2j+l, 2i+k] = U[2k+l, 2i+j]. The map is
    an exact involution; dual(SWAP) = SWAP and dual(I) = 2 |Phi><Phi| with
    Phi the two-site Bell pair.
    """
    gate = np.asarray(gate, dtype=np.complex128)
    if gate.shape != (4, 4):
        raise ValueError(f"expected a 4x4 gate, got shape {gate.shape}")
    return gate.reshape(2, 2, 2, 2).transpose(3, 1, 2, 0).reshape(4, 4)


def is_dual_unitary(gate, atol=1e-10):
    """True when both the gate and its space-time dual are unitary."""
    gate = np.asarray(gate, dtype=np.complex128)
    if np.linalg.norm(gate.conj().T @ gate - np.eye(4)) > atol:
        return False
    dual = spacetime_dual(gate)
    return bool(np.linalg.norm(dual.conj().T @ dual - np.eye(4)) <= atol)


def phase_distance(a, b):
    """Distance between matrices up to a global phase: min_phi ||a - e^{i phi} b||.

    Zero iff a and b are equal up to a global phase (for equal-norm inputs).
    """
    a = np.asarray(a)
    b = np.asarray(b)
    inner = np.vdot(b, a)
    phase = inner / abs(inner) if abs(inner) > 0 else 1.0
    return float(np.linalg.norm(a - phase * b))


def kim_gate(g):
    """Self-dual kicked-Ising gate with longitudinal field g.

    assemble_du with r = s = exp(-i g Z / 2) H,
    u = v = exp(i pi/4 Z) H exp(-i g Z / 2), J = pi/4. Locally equivalent
    to kim_dual_gate(g), whose staircase composes to the kicked-Ising
    Floquet step; see circuit.kim_brickwork_operator.
    """
    rs = rot_z(g) @ HADAMARD
    uv = np.diag(np.exp(1j * np.pi / 4 * np.array([1.0, -1.0]))) @ HADAMARD @ rot_z(g)
    return assemble_du(rs, rs, uv, uv, np.pi / 4)


def kim_dual_gate(g):
    """Exactly self-dual kicked-Ising gate in the staircase (tilted) frame.

    SWAP . (W (x) I) . CZ with W = H exp(-i g Z). Its space-time dual equals
    itself exactly (not just up to phase), and it is locally equivalent to
    kim_gate(g) (same two-qubit invariants). An ascending staircase of
    these gates, read with the SWAP undone as the change of wiring between
    the tilted and site-aligned frames, composes to one kicked-Ising
    Floquet period; see circuit.kim_brickwork_operator.
    """
    w = HADAMARD @ np.diag(np.exp(-1j * g * np.array([1.0, -1.0])))
    cz = np.diag(np.array([1.0, 1.0, 1.0, -1.0], dtype=np.complex128))
    return SWAP @ np.kron(w, PAULI_I) @ cz


@dataclass(frozen=True)
class HaarDU:
    """Dual-unitary gates with Haar-random SU(2) factors and uniform J in [0, pi/4]."""

    def sample(self, rng):
        J = rng.uniform(0.0, np.pi / 4)
        return assemble_du(haar_su2(rng), haar_su2(rng), haar_su2(rng), haar_su2(rng), J)

    def sample_batch(self, rng, count):
        J = np.empty(count)
        quats = np.empty((count, 4, 4))
        for i in range(count):
            J[i] = rng.uniform(0.0, np.pi / 4)
            quats[i] = rng.normal(size=(4, 4))
        return _assemble_du_batch(quats, J)


@dataclass(frozen=True)
class RestrictedJ:
    """Haar SU(2) factors with the coupling restricted to J < coupling * pi/4.

    coupling = 0 gives non-interacting (SWAP-equivalent) gates; coupling = 1
    has the same support as HaarDU.
    """

    coupling: float

    def __post_init__(self):
        if not 0.0 <= self.coupling <= 1.0:
            raise ValueError(f"coupling {self.coupling} outside [0, 1]")

    def sample(self, rng):
        J = rng.uniform(0.0, self.coupling * np.pi / 4)
        return assemble_du(haar_su2(rng), haar_su2(rng), haar_su2(rng), haar_su2(rng), J)

    def sample_batch(self, rng, count):
        J = np.empty(count)
        quats = np.empty((count, 4, 4))
        for i in range(count):
            J[i] = rng.uniform(0.0, self.coupling * np.pi / 4)
            quats[i] = rng.normal(size=(4, 4))
        return _assemble_du_batch(quats, J)


@dataclass(frozen=True)
class KIM:
    """Kicked-Ising gate at fixed longitudinal field g (non-random)."""

    g: float

    def sample(self, rng):
        return kim_gate(self.g)


@dataclass(frozen=True)
class FixedGate:
    """A single user-supplied gate, repeated everywhere (non-random)."""

    gate: tuple = field(repr=False)

    @classmethod
    def of(cls, matrix):
        matrix = np.asarray(matrix, dtype=np.complex128)
        if matrix.shape != (4, 4):
            raise ValueError("fixed gate must be 4x4")
        return cls(tuple(map(tuple, matrix)))

    def sample(self, rng):
        return np.array(self.gate, dtype=np.complex128)


def sample_gate(family, master_seed, *path):
    """Draw the gate for one (layer, bond) slot from its dedicated stream."""
    return family.sample(rngmod.stream(master_seed, rngmod.GATES, *path))


def sample_gates(family, rng, count):
    """Draw ``count`` gates from one stream as a (count, 4, 4) stack.

    Uses the family's vectorized path when it has one; the draws match
    ``count`` successive family.sample(rng) calls.
    """
    batch = getattr(family, "sample_batch", None)
    if batch is not None and count:
        return batch(rng, count)
    stack = [family.sample(rng) for _ in range(count)]
    return np.stack(stack) if count else np.empty((0, 4, 4), dtype=np.complex128)


def family_from_spec(kind, **kwargs):
    """Construct a gate family from a plain-text name (used by the CLI)."""
    kind = kind.lower()
    if kind == "haar_du":
        return HaarDU()
    if kind == "restricted_j":
        return RestrictedJ(float(kwargs["coupling"]))
    if kind == "kim":
        return KIM(float(kwargs["g"]))
    if kind == "swap":
        return FixedGate.of(SWAP)
    raise ValueError(f"unknown gate family {kind!r}")


def family_to_spec(family):
    """Inverse of family_from_spec for manifest serialization."""
    if isinstance(family, HaarDU):
        return {"kind": "haar_du"}
    if isinstance(family, RestrictedJ):
        return {"kind": "restricted_j", "coupling": family.coupling}
    if isinstance(family, KIM):
        return {"kind": "kim", "g": family.g}
    if isinstance(family, FixedGate):
        if np.array_equal(family.sample(None), SWAP):
            return {"kind": "swap"}
        raise ValueError("only the SWAP fixed gate has a spec name")
    raise TypeError(f"unknown family type {type(family).__name__}")
