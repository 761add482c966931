"""Projected ensembles and their distance to the uniform state ensemble.

Measuring the bath B of a pure state in a fixed local basis leaves, for
each outcome z, a pure state |psi_z> on subsystem A with Born weight
p(z). This module builds that weighted ensemble, its replicated moments
rho^(k) = sum_z p(z) (|psi_z><psi_z|)^{x k}, the uniform (Haar) moments
Pi_symm / C(2^N_A + k - 1, k), frame potentials, and the normalized
Schatten distances Delta^(k)_alpha used to define design times.

Two evaluation pathways coexist: an overlap-Gram pathway (pairwise state
overlaps only) that scales to large k for the frame potential and the
alpha = 2 distance, and a dense-moment pathway for alpha in {1, inf} and
symmetric-subspace checks, guarded to k * N_A <= 14 qubits.
"""

import itertools
from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import qstate
from . import rng as rngmod
from .circuit import COMPUTATIONAL, MeasurementBasis, basis_states
from .qstate import PROB_FLOOR, StateVector

DENSE_QUBIT_GUARD = 14
NOT_REACHED = "not reached"


@dataclass
class ProjectedEnsemble:
    """Weighted set {p(z), |psi_z>} of pure states on ``subsystem_size`` qubits.

    ``states`` holds one normalized state per row; ``probabilities`` the
    matching Born weights. ``dropped_mass`` is the total probability of
    enumerated branches below the probability floor (zero for sampled
    ensembles, whose rows are equal-weight Born draws).
    """

    subsystem_size: int
    probabilities: np.ndarray
    states: np.ndarray  # (num_entries, 2**subsystem_size)
    outcome_labels: list = field(repr=False)
    dropped_mass: float = 0.0
    sampled: bool = False

    def __post_init__(self):
        self.probabilities = np.asarray(self.probabilities, dtype=float)
        self.states = np.asarray(self.states, dtype=np.complex128)
        if self.states.shape != (self.probabilities.size, 1 << self.subsystem_size):
            raise ValueError("state table does not match probabilities / subsystem size")

    def __len__(self):
        return self.probabilities.size

    def validate(self, atol=1e-9):
        if np.any(self.probabilities < -atol):
            raise ValueError("negative ensemble probability")
        total = self.probabilities.sum() + self.dropped_mass
        if abs(total - 1.0) > atol:
            raise ValueError(f"ensemble probabilities sum to {total}")
        norms = np.linalg.norm(self.states, axis=1)
        if norms.size and np.max(np.abs(norms - 1.0)) > atol:
            raise ValueError("ensemble contains an unnormalized state")
        return self

    def entries(self):
        for p, row in zip(self.probabilities, self.states):
            yield float(p), StateVector(self.subsystem_size, row.copy())


@dataclass
class MomentMatrix:
    """k-th replicated moment rho^(k) on the 2^(k*N_A)-dimensional space."""

    k: int
    subsystem_size: int
    entries: np.ndarray

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=np.complex128)
        dim = 1 << (self.k * self.subsystem_size)
        if self.entries.shape != (dim, dim):
            raise ValueError(f"moment matrix shape {self.entries.shape}, expected {dim}")

    def purity(self):
        return float(np.sum(np.abs(self.entries) ** 2))

    def validate(self, atol=1e-9):
        if not np.allclose(self.entries, self.entries.conj().T, atol=atol):
            raise ValueError("moment matrix is not Hermitian")
        if abs(np.trace(self.entries).real - 1.0) > atol:
            raise ValueError("moment matrix does not have unit trace")
        if np.linalg.eigvalsh(self.entries).min() < -atol:
            raise ValueError("moment matrix has a negative eigenvalue")
        return self


@dataclass(frozen=True)
class DesignDistance:
    """Normalized Schatten-alpha distance of rho^(k) from the uniform moment."""

    k: int
    alpha: object  # 1, 2, or np.inf
    value: float


def measurement_tiling(num_qubits, measured_sites, basis):
    """Default measurement units: ``basis`` tiled over the measured sites.

    Single-site bases measure every site separately; pair bases pair
    consecutive measured sites in ascending order (requires an even
    count). Callers with a circuit geometry in hand should pass explicit
    units built by ``circuit.measurement_units`` instead.
    """
    sites = sorted(measured_sites)
    if any(not 0 <= s < num_qubits for s in sites) or len(set(sites)) != len(sites):
        raise ValueError("invalid measured-site list")
    if basis.kind == COMPUTATIONAL:
        states = basis_states(basis)
        return [((s,), states) for s in sites]
    if len(sites) % 2:
        raise ValueError("pair basis needs an even number of measured sites")
    states = basis_states(basis)
    return [((sites[i], sites[i + 1]), states) for i in range(0, len(sites), 2)]


def project(global_state, A_sites, basis, units=None, prob_floor=PROB_FLOOR,
            num_samples=None, seed=None):
    """Projected ensemble on A from measuring the complement of A.

    Exact mode (default) enumerates every outcome branch; it is guarded
    to baths of at most ``DENSE_QUBIT_GUARD`` qubits. For larger baths
    pass ``num_samples`` and ``seed``: outcomes are then Born-sampled one
    measurement unit at a time and the ensemble rows are equal-weight
    draws (``sampled=True``), which makes plain averages over the rows
    unbiased estimators of ensemble means.
    """
    n = global_state.num_qubits
    A = sorted(A_sites)
    if not A or len(A) >= n:
        raise ValueError("subsystem A must be a nonempty proper subset of the sites")
    if any(not 0 <= s < n for s in A) or len(set(A)) != len(A):
        raise ValueError("invalid subsystem site list")
    bath = [s for s in range(n) if s not in A]
    if units is None:
        units = measurement_tiling(n, bath, basis)
    covered = sorted(s for sites, _ in units for s in sites)
    if covered != bath:
        raise ValueError("measurement units must tile exactly the complement of A")
    if num_samples is not None:
        if seed is None:
            raise ValueError("sampled projection needs a seed")
        return _project_sampled(global_state, A, units, num_samples, seed)
    if len(bath) > DENSE_QUBIT_GUARD:
        raise ValueError(
            f"bath of {len(bath)} qubits exceeds the exact-enumeration guard "
            f"({DENSE_QUBIT_GUARD}); pass num_samples/seed for Born sampling"
        )
    table, kept = qstate.outcome_amplitude_table(global_state, units)
    assert kept == A
    probs = np.sum(np.abs(table) ** 2, axis=1)
    keep = probs >= prob_floor
    dropped = float(probs[~keep].sum())
    sizes = [1 << len(sites) for sites, _ in units]
    labels = [qstate._unflatten_label(f, sizes) for f in np.flatnonzero(keep)]
    states = table[keep] / np.sqrt(probs[keep])[:, None]
    return ProjectedEnsemble(len(A), probs[keep], states, labels, dropped_mass=dropped)


def _project_sampled(global_state, A, units, num_samples, seed):
    rng = rngmod.stream(seed, rngmod.ENSEMBLE_SAMPLING)
    dim = 1 << len(A)
    rows = np.empty((num_samples, dim), dtype=np.complex128)
    labels = []
    # measure units highest-sites-first so lower site indices stay valid
    # as measured sites are peeled off the register
    order = sorted(range(len(units)), key=lambda i: units[i][0], reverse=True)
    for row in range(num_samples):
        psi = global_state
        drawn = [None] * len(units)
        for i in order:
            out = qstate.measure_projective(psi, [units[i]], rng)
            drawn[i] = out.label[0]
            psi = out.post_state
        rows[row] = psi.amplitudes
        labels.append(tuple(drawn))
    probs = np.full(num_samples, 1.0 / num_samples)
    return ProjectedEnsemble(len(A), probs, rows, labels, sampled=True)


def _guard(N_A, k):
    if k < 1:
        raise ValueError(f"moment order k={k} must be >= 1")
    if k * N_A > DENSE_QUBIT_GUARD:
        raise ValueError(
            f"replicated space of {k * N_A} qubits exceeds the dense guard "
            f"({DENSE_QUBIT_GUARD})"
        )


def moment(ens, k):
    """Dense k-th moment sum_z p(z) (|psi_z><psi_z|)^{x k}."""
    _guard(ens.subsystem_size, k)
    dim = 1 << (k * ens.subsystem_size)
    rho = np.zeros((dim, dim), dtype=np.complex128)
    for p, row in zip(ens.probabilities, ens.states):
        v = row
        for _ in range(k - 1):
            v = np.kron(v, row)
        rho += p * np.outer(v, v.conj())
    if ens.dropped_mass:
        rho /= ens.probabilities.sum()
    return MomentMatrix(k, ens.subsystem_size, rho)


def symmetric_projector(dim, k):
    """Projector onto the symmetric subspace of (C^dim)^{x k}.

    Built as the average of the k! replica-permutation operators.
    """
    full = dim**k
    digits = np.empty((full, k), dtype=np.int64)
    idx = np.arange(full)
    for pos in range(k - 1, -1, -1):
        digits[:, pos] = idx % dim
        idx //= dim
    weights = dim ** np.arange(k - 1, -1, -1)
    proj = np.zeros((full, full))
    for perm in itertools.permutations(range(k)):
        target = digits[:, list(perm)] @ weights
        proj[target, np.arange(full)] += 1.0
    return proj / _fact(k)


def _fact(k):
    out = 1
    for i in range(2, k + 1):
        out *= i
    return out


def haar_moment(N_A, k):
    """Uniform-ensemble moment Pi_symm / C(2^N_A + k - 1, k)."""
    _guard(N_A, k)
    d = 1 << N_A
    proj = symmetric_projector(d, k)
    return MomentMatrix(k, N_A, proj / comb(d + k - 1, k))


def haar_frame_potential(N_A, k):
    return 1.0 / comb((1 << N_A) + k - 1, k)


_GRAM_BLOCK = 1024  # rows of the overlap Gram matrix held at once


def frame_potential(ens, k):
    """F^(k) = sum_{z, z'} p_z p_z' |<psi_z|psi_z'>|^{2k} = Tr[(rho^(k))^2].

    The overlap Gram matrix is processed in row blocks so large exactly
    enumerated ensembles (10^4+ outcomes) stay within memory.
    """
    if k < 1:
        raise ValueError(f"moment order k={k} must be >= 1")
    weight = ens.probabilities
    if ens.dropped_mass:
        weight = weight / weight.sum()
    states_t = ens.states.T
    total = 0.0
    for lo in range(0, len(ens), _GRAM_BLOCK):
        block = ens.states[lo : lo + _GRAM_BLOCK].conj() @ states_t
        total += weight[lo : lo + _GRAM_BLOCK] @ (np.abs(block) ** (2 * k)) @ weight
    return float(total)


def design_distance(ens, k, alpha=2):
    """Normalized distance ||rho^(k) - rho_H^(k)||_alpha / ||rho_H^(k)||_alpha.

    alpha = 2 is evaluated from frame potentials alone (no dense moment):
    (Delta_2)^2 = F^(k)/F_H^(k) - 1. alpha in {1, inf} go through the
    dense moment and its eigenvalues.
    """
    N_A = ens.subsystem_size
    if alpha == 2:
        ratio = frame_potential(ens, k) / haar_frame_potential(N_A, k)
        return DesignDistance(k, 2, float(np.sqrt(max(ratio - 1.0, 0.0))))
    if alpha not in (1, np.inf):
        raise ValueError(f"unsupported Schatten index {alpha!r}")
    diff = moment(ens, k).entries - haar_moment(N_A, k).entries
    eig = np.linalg.eigvalsh(diff)
    denom = 1.0 if alpha == 1 else haar_frame_potential(N_A, k)  # ||rho_H||_inf = 1/C
    num = float(np.sum(np.abs(eig))) if alpha == 1 else float(np.max(np.abs(eig)))
    return DesignDistance(k, alpha, num / denom)


def conditional_observable_moments(ens, observable, k, check=True):
    """k-th ensemble moment of the conditional expectation value of O.

    Returns sum_z p(z) <psi_z|O|psi_z>^k, which equals Tr(rho^(k) O^{x k});
    the dense-trace pathway is cross-checked whenever it is representable.
    """
    O = np.asarray(observable, dtype=np.complex128)
    dim = 1 << ens.subsystem_size
    if O.shape != (dim, dim):
        raise ValueError("observable does not act on the subsystem")
    if np.linalg.norm(O - O.conj().T) > 1e-10:
        raise ValueError("observable is not Hermitian")
    expect = np.einsum("zi,ij,zj->z", ens.states.conj(), O, ens.states).real
    weight = ens.probabilities
    if ens.dropped_mass:
        weight = weight / weight.sum()
    direct = float(weight @ expect**k)
    if check and k * ens.subsystem_size <= 12:
        Ok = O
        for _ in range(k - 1):
            Ok = np.kron(Ok, O)
        via_trace = float(np.trace(moment(ens, k).entries @ Ok).real)
        if abs(direct - via_trace) > 1e-8:
            raise AssertionError(
                f"conditional-moment pathways disagree: {direct} vs {via_trace}"
            )
    return direct


def design_time(scan, epsilon=0.05):
    """Least depth t with Delta^(k)(t) < epsilon, else ``NOT_REACHED``."""
    if not scan:
        raise ValueError("empty design-distance scan")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    for t in sorted(scan):
        value = scan[t].value if isinstance(scan[t], DesignDistance) else float(scan[t])
        if value < epsilon:
            return t
    return NOT_REACHED
