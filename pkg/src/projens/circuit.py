"""Brickwork circuits, measurement layouts, and the sideways transfer matrix.

Geometry (drawn with time flowing up):

* sites x = 0 .. N-1, layers l = 0 .. t-1;
* layer l holds gates on bonds b = (x, x+1) with b congruent to l+1 mod 2,
  so the first layer (odd bonds) couples neighboring initial pairs rather
  than acting inside them;
* the Bell-pair initial state occupies even bonds (0,1), (2,3), ...;
* final projective measurements pair neighboring sites on bonds congruent
  to t+1 mod 2 -- exactly the bonds not coupled by the last gate layer.
  A clean pairing of the bath therefore needs N_A + t odd; the other
  parity measures the single boundary site computationally instead.

The sideways ("dual") picture cuts the network along one site's worldline.
A worldline of depth t has t+1 wire segments, giving a dual chain of t+1
qubits d_0 .. d_t: d_0 is the initial-state leg, d_t the measured leg, and
d_l sits between layers l-1 and l. Each two-site period of the bath
(one measured pair plus the diagonal staircase of gates feeding it, layer
l at bond m-t+l) dualizes to a chain operator: the measured pair becomes
a single-qubit edge operator at d_t (exactly a conjugated Pauli for the
Bell basis), the period's initial pair becomes an edge operator at d_0,
and the gates become their space-time duals applied top-down on dual
bonds (d_{t-1}, d_t), ..., (d_0, d_1). For DU gates the chain operator is
unitary, which is the mechanism behind purification freezing in the Bell
basis.

``build_transfer_matrix`` returns that t+1-qubit chain operator and
``dual_step_monitored`` Born-samples its Kraus branches. The exact
amplitude-level correspondence with the bottom-to-top contraction sweeps
the complete columns right-to-left between an explicitly contracted right
lattice edge and the leftover triangle next to subsystem A;
``sideways_amplitude_table`` implements it and reproduces ``evolve`` plus
projective readout elementwise.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import backend
from . import gates as gatesmod
from . import qstate
from . import rng as rngmod
from .qstate import StateVector

BELL_PAIRS = "bell_pairs"
ALL_ZERO = "all_zero"
ALL_PLUS = "all_plus"

COMPUTATIONAL = "computational"
BELL = "bell"
MU_INTERPOLATED = "mu_interpolated"

# real orthogonal map taking |00> to the Bell pair (first column)
_BELL_PREP = (
    np.array(
        [[1, 0, 0, 1], [0, 1, 1, 0], [0, 1, -1, 0], [1, 0, 0, -1]], dtype=np.complex128
    ).T
    / np.sqrt(2)
)


@dataclass(frozen=True)
class MeasurementBasis:
    kind: str
    mu: float = None

    def __post_init__(self):
        if self.kind not in (COMPUTATIONAL, BELL, MU_INTERPOLATED):
            raise ValueError(f"unknown measurement basis {self.kind!r}")
        if self.kind == MU_INTERPOLATED:
            if self.mu is None or not 0.0 <= self.mu <= 1.0:
                raise ValueError(f"mu={self.mu} outside [0, 1]")

    @property
    def pair_sized(self):
        return self.kind != COMPUTATIONAL

    def effective_mu(self):
        """Measurement strength this basis dualizes to at the chain edge."""
        if self.kind == BELL:
            return 0.0
        if self.kind == COMPUTATIONAL:
            return 1.0
        return self.mu


def basis_states(basis):
    """Rows = the orthonormal local basis kets, on one site or one pair.

    For pair bases the first tensor factor is the lower-numbered site. The
    mu-interpolated family |psi_mu^a> prop. to (I +/- mu Z_1)|Phi^a| uses
    + for a in {0, x} and - for a in {y, z}; mu=0 is the Bell basis and
    mu=1 the computational pair basis up to phases.
    """
    if basis.kind == COMPUTATIONAL:
        return np.eye(2, dtype=np.complex128)
    mu = basis.effective_mu()
    bell = np.array(
        [
            [1, 0, 0, 1],
            [0, 1, 1, 0],
            [0, -1j, 1j, 0],
            [1, 0, 0, -1],
        ],
        dtype=np.complex128,
    ) / np.sqrt(2)
    signs = np.array([1.0, 1.0, -1.0, -1.0])
    z1 = np.array([1.0, 1.0, -1.0, -1.0])  # Z on the first factor
    out = bell * (1.0 + np.outer(signs * mu, z1))
    return out / np.sqrt(1.0 + mu * mu)


@dataclass(frozen=True)
class BrickworkCircuit:
    num_qubits: int
    depth: int
    family: object
    master_seed: int
    gates: dict = field(repr=False)

    def layer_bonds(self, layer):
        return [b for b in range(self.num_qubits - 1) if b % 2 != layer % 2]


def build_circuit(N, t, family, master_seed):
    """Brickwork circuit with gates drawn independently per (layer, bond)."""
    if N < 2 or t < 1:
        raise ValueError(f"need N >= 2 and t >= 1, got N={N}, t={t}")
    table = {}
    for layer in range(t):
        for bond in range(N - 1):
            if bond % 2 != layer % 2:
                table[(layer, bond)] = gatesmod.sample_gate(family, master_seed, layer, bond)
    return BrickworkCircuit(N, t, family, master_seed, table)


def initial_state(kind, N):
    if kind == ALL_ZERO:
        return StateVector.computational(N)
    if kind == ALL_PLUS:
        return StateVector.all_plus(N)
    if kind == BELL_PAIRS:
        psi = StateVector.computational(N)
        for b in range(0, N - 1, 2):
            psi = qstate.apply_gate(psi, _BELL_PREP, (b, b + 1))
        return psi
    raise ValueError(f"unknown initial state {kind!r}")


def evolve(circuit, init):
    """Run the circuit bottom-to-top on the given initial state."""
    psi = init if isinstance(init, StateVector) else initial_state(init, circuit.num_qubits)
    if psi.num_qubits != circuit.num_qubits:
        raise ValueError("initial state size does not match the circuit")
    for layer in range(circuit.depth):
        for bond in circuit.layer_bonds(layer):
            psi = qstate.apply_gate(psi, circuit.gates[(layer, bond)], (bond, bond + 1))
    return psi


def measurement_units(N, N_A, t, basis, allow_boundary=False):
    """Partition sites N_A .. N-1 into measurement units for the final readout.

    Pair bases pair sites across the bonds not coupled by the last gate
    layer (bonds congruent to t+1 mod 2). A clean pairing needs N_A + t
    odd and an even bath; with allow_boundary=True a leftover site (next
    to A and/or at the right edge) is measured in the computational basis
    instead.
    """
    if not 0 <= N_A < N:
        raise ValueError(f"invalid subsystem size N_A={N_A} for N={N}")
    sites = list(range(N_A, N))
    if basis.kind == COMPUTATIONAL:
        comp = basis_states(MeasurementBasis(COMPUTATIONAL))
        return [((s,), comp) for s in sites]
    states = basis_states(basis)
    comp = basis_states(MeasurementBasis(COMPUTATIONAL))
    units = []
    start = N_A
    if start % 2 == t % 2:
        if not allow_boundary:
            raise ValueError(
                f"N_A={N_A} and t={t} have equal parity; pairing would "
                "straddle the A|B boundary (pass allow_boundary=True to "
                "measure the boundary site in the computational basis)"
            )
        units.append(((start,), comp))
        start += 1
    pair_end = start + 2 * ((N - start) // 2)
    for s in range(start, pair_end - 1, 2):
        units.append(((s, s + 1), states))
    if pair_end < N:
        if not allow_boundary:
            raise ValueError(
                f"odd bath remainder at site {pair_end} (pass "
                "allow_boundary=True to measure it in the computational basis)"
            )
        units.append(((pair_end,), comp))
    return units


def to_json(circuit, init_kind=None, basis=None):
    """Serializable description sufficient for exact replay."""
    doc = {
        "num_qubits": circuit.num_qubits,
        "depth": circuit.depth,
        "master_seed": circuit.master_seed,
        "family": gatesmod.family_to_spec(circuit.family),
    }
    if init_kind is not None:
        doc["initial_state"] = init_kind
    if basis is not None:
        doc["basis"] = {"kind": basis.kind, "mu": basis.mu}
    return json.dumps(doc)


def from_json(doc):
    d = json.loads(doc) if isinstance(doc, str) else doc
    family = gatesmod.family_from_spec(**d["family"])
    circuit = build_circuit(d["num_qubits"], d["depth"], family, d["master_seed"])
    init_kind = d.get("initial_state")
    basis = None
    if "basis" in d:
        b = d["basis"]
        basis = MeasurementBasis(b["kind"], b.get("mu"))
    return circuit, init_kind, basis


# --- sideways (dual-chain) machinery -------------------------------------

_IDENTITY_GATE = np.eye(4, dtype=np.complex128)


def _init_edge_op(init_kind):
    """The initial state on one bond, read sideways (wire to wire).

    A Bell pair passes the d_0 wire through untouched; its 1/sqrt(2)
    weight lives in the transfer-matrix prefactor so the Bell-basis chain
    operator stays exactly unitary. Product initial states terminate the
    wire instead (rank-one operator).
    """
    if init_kind == BELL_PAIRS:
        return np.eye(2, dtype=np.complex128)
    if init_kind == ALL_ZERO:
        op = np.zeros((2, 2), dtype=np.complex128)
        op[0, 0] = 1.0
        return op
    if init_kind == ALL_PLUS:
        return np.full((2, 2), 0.5, dtype=np.complex128)
    raise ValueError(f"no sideways form for initial state {init_kind!r}")


def outcome_edge_op(basis, outcome):
    """One measured pair's basis bra, read sideways (right leg -> left leg).

    For a pair ket chi on sites (x, x+1) the sideways matrix is
    M[i, j] = sqrt(2) * conj(chi[2i + j]): the incoming index j is the
    right-site wire, the outgoing index i the left-site wire (consumed by
    the top gate of the next staircase). Bell outcomes give exactly the
    (conjugated) Paulis; the mu-interpolated basis gives
    sqrt(2) K_{+/-} sigma^a* with the weak Kraus pair
    K_{+/-} = (I +/- mu Z)/sqrt(2 (1 + mu^2)). The sqrt(2) keeps
    Sum_a op^dag op = 4 I for every basis, matching the 1/2
    transfer-matrix prefactor.
    """
    states = basis_states(basis)
    if states.shape == (2, 2):
        # single-site basis: the pair outcome is (z at x, z' at x+1)
        z, z_next = outcome if isinstance(outcome, tuple) else divmod(outcome, 2)
        chi = np.kron(states[z], states[z_next])
    else:
        chi = states[outcome]
    return np.sqrt(2.0) * chi.conj().reshape(2, 2)


@dataclass
class TransferMatrix:
    matrix: np.ndarray  # 2^(t+1) x 2^(t+1)
    outcome_label: object
    prefactor: float  # Kraus branch = prefactor * matrix


def period_column_gates(circuit, N_A, period):
    """Gates of one measured-pair period, index = layer.

    The pair measured at bond m = N_A + 2*period is fed by the diagonal
    staircase of gates at (layer l, bond m - t + l); bonds that fall off
    the lattice contribute identity. A column is complete (all t slots on
    the lattice, hence a unitary transfer matrix in the DU+ setting) when
    m >= t; the truncated columns near the A|B boundary belong to the
    leftover triangle that maps the time-like cut onto subsystem A.
    """
    t = circuit.depth
    m = N_A + 2 * period
    return [
        circuit.gates.get((layer, m - t + layer), _IDENTITY_GATE) for layer in range(t)
    ]


def build_transfer_matrix(column_gates, init_kind, basis, outcome):
    """Chain operator of one two-site period on the t+1 dual qubits.

    The measured pair's edge operator acts first at d_t, then the
    space-time-dualized gates sweep the chain downward as a staircase on
    (d_{t-1}, d_t), ..., (d_0, d_1), and the initial pair's edge operator
    closes the period at d_0. This is the order in which the sideways
    sweep meets the wires: the top dual gate consumes the leg the outcome
    operator just folded back, and each lower gate consumes one cut leg
    plus the leg folded down by the gate above. The Kraus branch for
    outcome probabilities is prefactor * matrix; for Bell-pair initial
    states Sum_outcomes (pref M)^dag (pref M) = I whenever the gates are
    dual-unitary, and the matrix itself is then unitary.
    """
    t = len(column_gates)
    n = t + 1
    mat = np.eye(1 << n, dtype=np.complex128)
    mat = _apply_edge(mat, outcome_edge_op(basis, outcome), n, t)
    for layer in reversed(range(t)):
        gate = _IDENTITY_GATE if column_gates[layer] is None else column_gates[layer]
        dual = gatesmod.spacetime_dual(gate).T
        mat = _apply_dual_gate(mat, dual, n, layer)
    mat = _apply_edge(mat, _init_edge_op(init_kind), n, 0)
    return TransferMatrix(mat, outcome, prefactor=0.5)


def _apply_dual_gate(mat, dual, n, low):
    """Apply a dual gate to chain qubits (low, low+1) of every column."""
    tensor = mat.reshape([2] * n + [mat.shape[1]])
    axes = (n - 1 - low, n - 1 - (low + 1))  # d_low is the first factor
    moved = np.moveaxis(tensor, axes, (0, 1))
    out = (dual @ moved.reshape(4, -1)).reshape(moved.shape)
    return np.moveaxis(out, (0, 1), axes).reshape(mat.shape)


def _apply_edge(mat, op, n, site):
    tensor = mat.reshape([2] * n + [mat.shape[1]])
    axis = n - 1 - site
    moved = np.moveaxis(tensor, axis, 0)
    out = (op @ moved.reshape(2, -1)).reshape(moved.shape)
    return np.moveaxis(out, 0, axis).reshape(mat.shape)


def solvable_edge_state(t):
    """Dual-chain initial state: Bell pairs along the chain + |0> pad."""
    n = t + 1
    psi = StateVector.computational(n)
    for b in range(0, n - 1, 2):
        psi = qstate.apply_gate(psi, _BELL_PREP, (b, b + 1))
    return psi


def _dual_transpose_stack(column_gates):
    """(t, 4, 4) stack of spacetime_dual(gate).T for one column's gates.

    None entries stand for identity slots. One vectorized transpose replaces
    the per-gate reshape round-trips; each slice is C-contiguous for the
    in-place kernels.
    """
    if any(g is None for g in column_gates):
        column_gates = [_IDENTITY_GATE if g is None else g for g in column_gates]
    stack = np.asarray(column_gates, dtype=np.complex128)
    if stack.ndim != 3 or stack.shape[1:] != (4, 4):
        raise ValueError(f"expected a stack of 4x4 gates, got shape {stack.shape}")
    t = len(stack)
    duals = stack.reshape(t, 2, 2, 2, 2).transpose(0, 3, 1, 4, 2).reshape(t, 4, 4)
    return np.ascontiguousarray(duals)


def dual_step_monitored(state, column_gates, basis, rng):
    """One monitored dual time-step: edge operation at d_t, then gates.

    Returns (new_state, outcome). The edge operation Born-samples the
    measured pair's outcome exactly as the transfer-matrix Kraus family
    does: the Bell basis gives a Born-uniform Pauli (unitary step), the
    mu-interpolated basis a weak Z measurement of strength mu followed by
    a Pauli within the matching sign pair, and the computational basis a
    projective Z measurement with a fresh replacement eigenstate (outcome
    label (z, z')). The state is renormalized after the gate staircase,
    which is a no-op for dual-unitary gates.
    """
    t = len(column_gates)
    n = state.num_qubits
    if n < t + 1:
        raise ValueError(f"state has {n} qubits, column needs at least {t + 1}")
    # qubits above t (e.g. an entangled reference) are left untouched
    edge = t
    if basis.kind == COMPUTATIONAL:
        psi, outcome = _edge_projective(state, edge, rng)
        amps = psi.amplitudes.copy()
    else:
        amps = state.amplitudes.copy()
        outcome = _edge_kraus_inplace(amps, edge, basis.effective_mu(), rng)
    duals = _dual_transpose_stack(column_gates)
    for layer in reversed(range(t)):
        backend.apply_two_qubit(amps, duals[layer], n, layer, layer + 1)
    norm = float(np.linalg.norm(amps))
    if norm < qstate.PROB_FLOOR:
        raise ValueError("dual step annihilated the state")
    if abs(norm - 1.0) > 1e-13:
        amps /= norm
    return StateVector(n, amps), outcome


def _edge_kraus_inplace(amps, edge, mu, rng):
    """Sample and apply the edge Kraus operator conj(sigma^a) K_{s_a} in place.

    The basis bra K_{+/-} sigma^a* commuted into measure-first order is
    conj(sigma^a) K_{s_a} with s = + for a in {0, y} and - for a in {x, z}
    (sigma^x and sigma^y exchange K_+ and K_-). Weak-measuring (strength mu)
    and then drawing the Pauli uniformly within the sign pair reproduces
    p(a) = ||K_{s_a} psi||^2 / 2 exactly. mu = 0 (Bell readout) degenerates
    to a uniform unitary Pauli.
    The slices below act on the edge qubit's axis (stride 2**edge); the
    array is renormalized so the caller sees a unit-norm branch.
    """
    view = amps.reshape(-1, 2, 1 << edge)
    lo, hi = view[:, 0, :], view[:, 1, :]
    if mu == 0.0:
        outcome = int(rng.integers(4))
    else:
        k_plus, k_minus = qstate.weak_measurement_kraus(mu)
        p0 = float(np.real(np.vdot(lo, lo)))
        p1 = float(np.real(np.vdot(hi, hi)))
        kp = (k_plus[0, 0].real, k_plus[1, 1].real)
        km = (k_minus[0, 0].real, k_minus[1, 1].real)
        p_plus = kp[0] ** 2 * p0 + kp[1] ** 2 * p1
        if rng.random() < p_plus:
            k, p = kp, p_plus
            outcome = (0, 2)[int(rng.integers(2))]
        else:
            k, p = km, km[0] ** 2 * p0 + km[1] ** 2 * p1
            outcome = (1, 3)[int(rng.integers(2))]
        if p < qstate.PROB_FLOOR:
            raise ValueError("sampled a zero-probability weak-measurement branch")
        scale = 1.0 / np.sqrt(p)
        lo *= k[0] * scale
        hi *= k[1] * scale
    # conj(sigma^a): I, X, conj(Y) = [[0, i], [-i, 0]], Z
    if outcome == 1:
        tmp = lo.copy()
        lo[:] = hi
        hi[:] = tmp
    elif outcome == 2:
        tmp = lo * (-1j)
        lo[:] = 1j * hi
        hi[:] = tmp
    elif outcome == 3:
        hi *= -1.0
    return outcome


def _edge_projective(state, site, rng):
    """Projective Z readout at ``site`` plus a fresh replacement eigenstate."""
    proj0 = np.diag([1.0, 0.0]).astype(np.complex128)
    branch0 = qstate.apply_matrix(state, proj0, (site,))
    p0 = branch0.norm() ** 2
    if rng.random() < p0:
        z, post, p = 0, branch0, p0
    else:
        proj1 = np.diag([0.0, 1.0]).astype(np.complex128)
        post = qstate.apply_matrix(state, proj1, (site,))
        p = post.norm() ** 2
        z = 1
    psi = StateVector(state.num_qubits, post.amplitudes / np.sqrt(p))
    z_new = int(rng.integers(2))
    if z_new != z:
        psi = qstate.apply_one_qubit_gate(psi, gatesmod.PAULI_X, site)
    return psi, (z, z_new)


# --- kicked-Ising Floquet correspondence -----------------------------------

KIM_DENSE_GUARD = 12  # dense 2^N x 2^N operators; keep N small


def kicked_ising_floquet(N, g):
    """Dense one-period Floquet operator of the kicked Ising chain.

    U_F = exp(-i pi/4 sum_i Y_i)
          exp(-i [pi/4 sum_i Z_i Z_{i+1} + g sum_i Z_i + pi/4 (Z_0 + Z_{N-1})])

    i.e. Ising couplings and longitudinal fields followed by a transverse
    kick, at the self-dual point J = h = pi/4 with boundary fields pi/4.
    Built directly from the Hamiltonian terms, independently of any gate
    decomposition, so it serves as the oracle for the brickwork builder.
    """
    if not 2 <= N <= KIM_DENSE_GUARD:
        raise ValueError(f"need 2 <= N <= {KIM_DENSE_GUARD}, got {N}")
    idx = np.arange(1 << N)
    zbit = lambda q: 1.0 - 2.0 * ((idx >> q) & 1)
    angle = (np.pi / 4) * sum(zbit(i) * zbit(i + 1) for i in range(N - 1))
    angle = angle + g * sum(zbit(i) for i in range(N))
    angle = angle + (np.pi / 4) * (zbit(0) + zbit(N - 1))
    kick = np.array([[1.0, -1.0], [1.0, 1.0]], dtype=np.complex128) / np.sqrt(2.0)
    kicks = kick
    for _ in range(N - 1):
        kicks = np.kron(kicks, kick)
    return kicks @ np.diag(np.exp(-1j * angle))


def kim_brickwork_operator(N, t, g):
    """Dense operator of the tilted brickwork realizing t Floquet periods.

    One period is an ascending staircase of the self-dual gate
    kim_dual_gate(g) at bonds 0, 1, ..., N-2 -- applied with its SWAP
    undone, since the SWAP is the leg crossing between the tilted frame
    (where the gate is self-dual) and the site-aligned frame -- closed by
    the leftover kick W = H exp(-i g Z) on the last site. This equals
    kicked_ising_floquet(N, g)**t up to a global phase, exactly:
    commuting each site's kick rightward through the CZ chain stops it at
    the first bond it touches, which regroups one period into exactly this
    staircase. A site-aligned brickwork of kicked-Ising gates does not
    have this property (each internal leg would pick up an extra
    H exp(-i g Z) H between consecutive gates).
    """
    if not 2 <= N <= KIM_DENSE_GUARD:
        raise ValueError(f"need 2 <= N <= {KIM_DENSE_GUARD}, got {N}")
    if t < 1:
        raise ValueError(f"need t >= 1, got {t}")
    step = gatesmod.SWAP @ gatesmod.kim_dual_gate(g)  # (W (x) I) . CZ
    w = gatesmod.HADAMARD @ np.diag(np.exp(-1j * g * np.array([1.0, -1.0])))
    mat = np.eye(1 << N, dtype=np.complex128)
    for _ in range(t):
        for bond in range(N - 1):
            mat = _apply_dual_gate(mat, step, N, bond)
        mat = _apply_edge(mat, w, N, N - 1)
    return mat


def verify_kim_brickwork(N, t, g, atol=1e-8):
    """Distance (up to global phase) between the brickwork and the oracle.

    Raises AssertionError beyond ``atol``: the correspondence is an exact
    operator identity, so a violation means a bug.
    """
    dist = gatesmod.phase_distance(
        kim_brickwork_operator(N, t, g),
        np.linalg.matrix_power(kicked_ising_floquet(N, g), t),
    )
    if dist > atol:
        raise AssertionError(
            f"kicked-Ising brickwork deviates from the Floquet operator by "
            f"{dist:.3e} at N={N}, t={t}, g={g}"
        )
    return dist


# --- exact sideways contraction -------------------------------------------

def _edge_cut_vector(circuit):
    """Dual-chain state imposed by the right lattice edge.

    The cut left of the last complete column carries t+1 legs: leg 0 is
    the dangling half of the initial pair straddling bond N-1-t, leg l
    (1 <= l <= t-1) is the worldline of site N-t+l-1 frozen at height l,
    and leg t is the final leg of site N-1. The vector is obtained by
    preparing the remnant initial pairs on sites N-t .. N-1 (plus the
    dangling half) and running the gates that lie to the right of the
    last staircase.
    """
    N, t = circuit.num_qubits, circuit.depth
    # local qubit l: l = 0 the dangling pair half, l >= 1 site N - t + l - 1
    edge = StateVector.computational(t + 1)
    edge = qstate.apply_gate(edge, _BELL_PREP, (0, 1))
    for bond in range(N - t + 1, N - 1, 2):
        edge = qstate.apply_gate(edge, _BELL_PREP, (bond - N + t + 1, bond - N + t + 2))
    for layer in range(t):
        for bond in range(N - t + layer, N - 1):
            gate = circuit.gates.get((layer, bond))
            if gate is not None:
                edge = qstate.apply_gate(edge, gate, (bond - N + t + 1, bond - N + t + 2))
    return edge.amplitudes


def sideways_amplitude_table(circuit, N_A, basis):
    """Projective branch amplitudes computed by the sideways contraction.

    Sweeps the circuit right-to-left: the right lattice edge is contracted
    into a cut vector, every complete column (measured-pair bond m >= t)
    multiplies by its transfer-matrix Kraus branch, and the leftover
    triangle next to subsystem A -- the cut legs re-read as physical
    worldlines at staggered heights, the remaining gates, and the
    measured pairs whose staircases fall off the lattice -- closes the
    contraction onto the kept amplitudes. Returns a table in the layout
    of ``qstate.outcome_amplitude_table`` (rows = joint outcomes, first
    measured pair most significant). Requires the clean pairing
    (N_A + t odd, even bath) and at least one complete column.
    """
    N, t = circuit.num_qubits, circuit.depth
    units = measurement_units(N, N_A, t, basis)  # validates the pairing
    states = basis_states(basis)
    if states.shape != (4, 4):
        raise ValueError("sideways contraction needs a pair-sized basis")
    P = len(units)
    if N_A + 2 * (P - 1) < t:
        raise ValueError("no complete column: need bath bond N - 2 >= depth")
    p0 = 0  # first complete column
    while N_A + 2 * p0 < t:
        p0 += 1
    m0 = N_A + 2 * p0
    branches = [
        [
            (tm := build_transfer_matrix(
                period_column_gates(circuit, N_A, p), BELL_PAIRS, basis, a
            )).prefactor * tm.matrix
            for a in range(4)
        ]
        for p in range(p0, P)
    ]
    # leftover triangle: sites 0 .. m0 - 1; cut leg j enters as the
    # worldline of site m0 - t - 1 + j frozen at height j, sites below
    # m0 - t - 1 still hold their initial pairs
    x0 = m0 - t - 1
    w_pairs = StateVector.computational(x0) if x0 else None
    if w_pairs is not None:
        for b in range(0, x0 - 1, 2):
            w_pairs = qstate.apply_gate(w_pairs, _BELL_PREP, (b, b + 1))
    w_gates = [
        (layer, bond)
        for layer in range(t)
        for bond in range(0, m0 - t + layer - 1)
        if (layer, bond) in circuit.gates
    ]
    w_units = units[:p0]
    cut = _edge_cut_vector(circuit)
    table = np.zeros((1 << (2 * P), 1 << N_A), dtype=np.complex128)
    cols = P - p0
    for c_flat in range(4**cols):
        digits = qstate._unflatten_label(c_flat, [4] * cols)
        v = cut
        for j in range(cols - 1, -1, -1):
            v = branches[j][digits[j]] @ v
        amps = v if w_pairs is None else np.kron(v, w_pairs.amplitudes)
        psi = StateVector(m0, amps)
        for layer, bond in w_gates:
            psi = qstate.apply_gate(psi, circuit.gates[(layer, bond)], (bond, bond + 1))
        sub, _ = qstate.outcome_amplitude_table(psi, w_units)
        for w_flat in range(sub.shape[0]):
            table[w_flat * 4**cols + c_flat] = sub[w_flat]
    return table
