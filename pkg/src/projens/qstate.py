"""Dense statevector engine.

Conventions (used everywhere in the package, including file outputs):

* little-endian amplitude ordering: qubit q is bit q of the array index,
  i.e. index = sum_q bit_q * 2**q;
* a two-qubit gate on (qa, qb) acts in the local basis |x y> with
  x = bit(qa), y = bit(qb) and local index 2*x + y (qa is the first
  tensor factor of the 4x4 matrix).

States are treated as immutable by callers: operations return new
statevectors and only mutate buffers they own.
"""

from dataclasses import dataclass, field

import numpy as np

from . import backend

ATOL_UNITARY = 1e-8
ATOL_NORM = 1e-10
PROB_FLOOR = 1e-14


@dataclass
class StateVector:
    """Pure state of ``num_qubits`` qubits as a dense amplitude array."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (1 << self.num_qubits,):
            raise ValueError(
                f"amplitude array has length {self.amplitudes.size}, "
                f"expected 2**{self.num_qubits}"
            )

    @classmethod
    def computational(cls, num_qubits, index=0):
        amps = np.zeros(1 << num_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(num_qubits, amps)

    @classmethod
    def all_plus(cls, num_qubits):
        dim = 1 << num_qubits
        amps = np.full(dim, 1.0 / np.sqrt(dim), dtype=np.complex128)
        return cls(num_qubits, amps)

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def copy(self):
        return StateVector(self.num_qubits, self.amplitudes.copy())

    def overlap(self, other):
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass
class DensityMatrix:
    """Density operator on ``num_qubits`` qubits."""

    num_qubits: int
    entries: np.ndarray

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=np.complex128)
        dim = 1 << self.num_qubits
        if self.entries.shape != (dim, dim):
            raise ValueError(f"matrix shape {self.entries.shape}, expected ({dim}, {dim})")

    def validate(self, atol=1e-10):
        if not np.allclose(self.entries, self.entries.conj().T, atol=atol):
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(self.entries).real - 1.0) > atol:
            raise ValueError("density matrix does not have unit trace")
        if np.linalg.eigvalsh(self.entries).min() < -atol:
            raise ValueError("density matrix has a negative eigenvalue")
        return self

    def purity(self):
        return float(np.sum(np.abs(self.entries) ** 2))


@dataclass
class MeasurementOutcome:
    """One sampled (or enumerated) measurement branch."""

    label: object
    probability: float
    post_state: StateVector
    # mass dropped from branches below the probability floor (enumeration only)
    dropped_mass: float = field(default=0.0)


def _check_unitary(gate, dim, atol=ATOL_UNITARY):
    gate = np.ascontiguousarray(gate, dtype=np.complex128)
    if gate.shape != (dim, dim):
        raise ValueError(f"gate shape {gate.shape}, expected ({dim}, {dim})")
    defect = np.linalg.norm(gate.conj().T @ gate - np.eye(dim))
    if defect > atol:
        raise ValueError(f"gate is not unitary (defect {defect:.2e})")
    return gate


def apply_gate(state, gate, qubits):
    """Apply a two-qubit gate to sites ``qubits = (qa, qb)``; returns a new state."""
    qa, qb = qubits
    n = state.num_qubits
    if qa == qb or not (0 <= qa < n) or not (0 <= qb < n):
        raise ValueError(f"invalid qubit pair ({qa}, {qb}) for {n} qubits")
    gate = _check_unitary(gate, 4)
    amps = state.amplitudes.copy()
    backend.apply_two_qubit(amps, gate, n, qa, qb)
    return StateVector(n, amps)


def apply_one_qubit_gate(state, gate, qubit):
    """Apply a single-qubit gate; returns a new state."""
    n = state.num_qubits
    if not 0 <= qubit < n:
        raise ValueError(f"qubit {qubit} out of range for {n} qubits")
    gate = _check_unitary(gate, 2)
    amps = state.amplitudes.copy()
    backend.apply_one_qubit(amps, gate, n, qubit)
    return StateVector(n, amps)


def apply_matrix(state, matrix, qubits):
    """Apply an arbitrary (possibly non-unitary) matrix to a site tuple.

    Used for Kraus branches and transfer-matrix edges; does not normalize.
    """
    n = state.num_qubits
    qubits = tuple(qubits)
    k = len(qubits)
    matrix = np.asarray(matrix, dtype=np.complex128)
    if matrix.shape != (1 << k, 1 << k):
        raise ValueError("matrix does not match the number of target qubits")
    tensor = state.amplitudes.reshape([2] * n)
    axes = [n - 1 - q for q in qubits]
    rest = [a for a in range(n) if a not in axes]
    moved = np.moveaxis(tensor, axes, range(k))
    out = (matrix @ moved.reshape(1 << k, -1)).reshape([2] * k + [2] * (n - k))
    out = np.moveaxis(out, range(k), axes)
    return StateVector(n, np.ascontiguousarray(out.reshape(-1)))


def _axis(num_qubits, site):
    # axis index of `site` when amplitudes are reshaped to [2]*n (C order)
    return num_qubits - 1 - site


def _check_unit_basis(unit_sites, states, atol=1e-12):
    states = np.asarray(states, dtype=np.complex128)
    dim = 1 << len(unit_sites)
    if states.shape != (dim, dim):
        raise ValueError("measurement basis must be a complete orthonormal family")
    gram = states @ states.conj().T
    if np.linalg.norm(gram - np.eye(dim)) > atol:
        raise ValueError("measurement basis is not orthonormal")
    return states


def outcome_amplitude_table(state, units):
    """Unnormalized branch states for a projective measurement.

    ``units`` is a list of (sites, states) pairs, where ``sites`` is a tuple
    of one or two site indices and ``states`` is a (m, m) array whose rows
    are the orthonormal basis kets on that unit.

    Returns ``(table, kept_sites)`` where ``table`` has one row per joint
    outcome (first unit most significant) and ``table[i] / ||table[i]||`` is
    the post-measurement state on the kept sites (ascending site order,
    re-indexed from 0).
    """
    n = state.num_qubits
    measured = []
    psi = state.copy()
    for sites, states in units:
        sites = tuple(sites)
        states = _check_unit_basis(sites, states)
        if any(s in measured for s in sites):
            raise ValueError("duplicate measured site")
        # rotate the unit so that ket chi_a maps to computational |a>
        psi = apply_matrix(psi, states.conj(), sites)
        measured.extend(sites)
    kept = sorted(s for s in range(n) if s not in measured)
    meas_axes = [_axis(n, s) for s in measured]
    kept_axes = [_axis(n, s) for s in sorted(kept, reverse=True)]
    tensor = psi.amplitudes.reshape([2] * n).transpose(meas_axes + kept_axes)
    table = np.ascontiguousarray(tensor.reshape(1 << len(measured), -1))
    return table, kept


def enumerate_projective(state, units, prob_floor=PROB_FLOOR):
    """All measurement branches with probability above ``prob_floor``."""
    table, kept = outcome_amplitude_table(state, units)
    probs = np.sum(np.abs(table) ** 2, axis=1)
    dropped = float(probs[probs < prob_floor].sum())
    outcomes = []
    sizes = [1 << len(sites) for sites, _ in units]
    for flat in range(table.shape[0]):
        p = float(probs[flat])
        if p < prob_floor:
            continue
        label = _unflatten_label(flat, sizes)
        post = StateVector(len(kept), table[flat] / np.sqrt(p))
        outcomes.append(MeasurementOutcome(label, p, post, dropped_mass=dropped))
    return outcomes


def _unflatten_label(flat, sizes):
    parts = []
    for m in reversed(sizes):
        parts.append(flat % m)
        flat //= m
    parts.reverse()
    return tuple(parts)


def measure_projective(state, units, rng):
    """Sample one measurement branch according to the Born rule."""
    table, kept = outcome_amplitude_table(state, units)
    probs = np.sum(np.abs(table) ** 2, axis=1)
    total = probs.sum()
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"outcome probabilities sum to {total}, state not normalized")
    flat = int(rng.choice(len(probs), p=probs / total))
    p = float(probs[flat])
    if p < PROB_FLOOR:
        raise ValueError("sampled a zero-probability branch")
    sizes = [1 << len(sites) for sites, _ in units]
    post = StateVector(len(kept), table[flat] / np.sqrt(p))
    return MeasurementOutcome(_unflatten_label(flat, sizes), p, post)


def weak_measurement_kraus(mu):
    """Kraus pair K_+/- = (I +/- mu Z) / sqrt(2 (1 + mu^2))."""
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"measurement strength mu={mu} outside [0, 1]")
    norm = np.sqrt(2.0 * (1.0 + mu * mu))
    z = np.diag([1.0, -1.0]).astype(np.complex128)
    eye = np.eye(2, dtype=np.complex128)
    return (eye + mu * z) / norm, (eye - mu * z) / norm


def apply_weak_measurement(state, site, mu, rng):
    """Weak Z measurement of strength mu on one site; Born-sampled outcome."""
    k_plus, k_minus = weak_measurement_kraus(mu)
    branch_plus = apply_matrix(state, k_plus, (site,))
    p_plus = branch_plus.norm() ** 2
    if rng.random() < p_plus:
        post = StateVector(state.num_qubits, branch_plus.amplitudes / np.sqrt(p_plus))
        return MeasurementOutcome(+1, p_plus, post)
    branch_minus = apply_matrix(state, k_minus, (site,))
    p_minus = branch_minus.norm() ** 2
    post = StateVector(state.num_qubits, branch_minus.amplitudes / np.sqrt(p_minus))
    return MeasurementOutcome(-1, p_minus, post)


def partial_trace(obj, keep):
    """Reduced density matrix on ``keep`` (ascending site order)."""
    keep = list(keep)
    if len(set(keep)) != len(keep):
        raise ValueError("duplicate sites in keep list")
    if not keep:
        raise ValueError("empty keep list")
    if isinstance(obj, StateVector):
        n = obj.num_qubits
        if any(not 0 <= s < n for s in keep):
            raise ValueError("keep site out of range")
        kept_axes = [_axis(n, s) for s in sorted(keep, reverse=True)]
        rest_axes = [a for a in range(n) if a not in kept_axes]
        tensor = obj.amplitudes.reshape([2] * n).transpose(kept_axes + rest_axes)
        mat = tensor.reshape(1 << len(keep), -1)
        return DensityMatrix(len(keep), mat @ mat.conj().T)
    if isinstance(obj, DensityMatrix):
        n = obj.num_qubits
        if any(not 0 <= s < n for s in keep):
            raise ValueError("keep site out of range")
        tensor = obj.entries.reshape([2] * (2 * n))
        kept_sorted = sorted(keep, reverse=True)
        row_axes = [_axis(n, s) for s in kept_sorted]
        col_axes = [n + _axis(n, s) for s in kept_sorted]
        drop = [s for s in range(n) if s not in keep]
        drop_rows = [_axis(n, s) for s in drop]
        drop_cols = [n + _axis(n, s) for s in drop]
        perm = row_axes + col_axes + drop_rows + drop_cols
        d_keep = 1 << len(keep)
        d_drop = 1 << len(drop)
        t = tensor.transpose(perm).reshape(d_keep, d_keep, d_drop, d_drop)
        return DensityMatrix(len(keep), np.einsum("ijkk->ij", t))
    raise TypeError(f"cannot take a partial trace of {type(obj).__name__}")


def renyi2_entropy(rho):
    """Second Renyi entropy -log2 Tr(rho^2), in bits."""
    return float(-np.log2(rho.purity()))
