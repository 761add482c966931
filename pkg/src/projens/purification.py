"""Monitored dynamics of the dual chain and the purification entropy S(r).

The sideways picture of one measured-pair period is a chain of t+1 dual
qubits d_0 .. d_t evolved in dual time r by a staircase of dualized gates
plus an edge operation at d_t set by the measurement basis (a Pauli for
the Bell basis, a weak Z measurement of strength mu in between, a
projective readout at mu = 1). To probe how fast this monitored dynamics
purifies, a reference qubit R is maximally entangled with d_0 at r = 0,
the rest of the chain starts in the Bell-pair configuration, and R is
never touched afterwards:

    register: d_0 .. d_t, R            (t + 2 qubits; R = qubit t+1)
    r = 0:    Bell(R, d_0), Bell(d_1, d_2), Bell(d_3, d_4), ...,
              with a |0> pad at d_t when t is even.

The annealed entropy S(r) = -log2 E_traj[Tr rho_R^2] is recorded per dual
step; the trajectory mean is an unbiased estimator of the outcome average
E_z Tr(rho_z^2) because branches are Born-sampled.

The module also machine-checks the purity inequalities that tie S(r) to
frame potentials: Tr(rho^(k)^2) >= 2^-r (E_z1 Tr rho_z1^2)^k for every
split of the bath into the r measured bits nearest A and the rest, its
r = 0 specialization Tr(rho^(k)^2) >= [Tr(rho^(1)^2)]^k, and the Hoelder
step sum_i p_i^2 f_i^k >= (sum_i p_i f_i)^k / M they are built from.
"""

from dataclasses import dataclass, field

import numpy as np

from . import circuit as circuitmod
from . import ensemble as ensemblemod
from . import gates as gatesmod
from . import qstate
from . import rng as rngmod
from .circuit import MU_INTERPOLATED, MeasurementBasis, _BELL_PREP
from .qstate import StateVector

QUBIT_CAP = 20
DEFAULT_TRAJECTORIES = 500


@dataclass(frozen=True)
class PurificationConfig:
    t: int
    r_max: int  # None = adaptive horizon (see adaptive_r_max)
    mu: float
    J_frac: float = 1.0
    trajectories: int = DEFAULT_TRAJECTORIES
    master_seed: int = 0

    def __post_init__(self):
        if self.t < 1:
            raise ValueError(f"need t >= 1, got {self.t}")
        if self.t + 2 > QUBIT_CAP:
            raise ValueError(f"t={self.t} needs {self.t + 2} qubits, cap is {QUBIT_CAP}")
        if self.r_max is not None and self.r_max < 0:
            raise ValueError("r_max must be nonnegative (or None for adaptive)")
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError(f"mu={self.mu} outside [0, 1]")
        if not 0.0 <= self.J_frac <= 1.0:
            raise ValueError(f"J_frac={self.J_frac} outside [0, 1]")
        if self.trajectories < 1:
            raise ValueError("need at least one trajectory")

    def gate_family(self):
        if self.J_frac == 1.0:
            return gatesmod.HaarDU()
        return gatesmod.RestrictedJ(self.J_frac)

    def basis(self):
        return MeasurementBasis(MU_INTERPOLATED, self.mu)


@dataclass
class PurificationTrace:
    t: int
    mu: float
    J_frac: float
    master_seed: int
    s2: np.ndarray  # annealed entropy in bits, index = r
    stderr: np.ndarray
    n_traj: int

    @property
    def r_values(self):
        return np.arange(self.s2.size)

    def series(self):
        return {
            int(r): (float(self.s2[r]), float(self.stderr[r]), self.n_traj)
            for r in self.r_values
        }


def reference_chain_state(t):
    """Initial t+2 qubit state: Bell(R, d_0) plus the solvable chain pairs."""
    psi = StateVector.computational(t + 2)
    psi = qstate.apply_gate(psi, _BELL_PREP, (t + 1, 0))
    for b in range(1, t, 2):
        psi = qstate.apply_gate(psi, _BELL_PREP, (b, b + 1))
    return psi


def sample_column(family, master_seed, trajectory, step, t):
    """Fresh i.i.d. dual column for one trajectory step, index = layer.

    All t gates of the column come from the single stream
    (GATES, trajectory, step), drawn bottom layer first, so any
    (trajectory, step) pair can be regenerated independently.
    """
    rng = rngmod.stream(master_seed, rngmod.GATES, trajectory, step)
    return gatesmod.sample_gates(family, rng, t)


def _reference_purity(psi):
    """Tr(rho_R^2) for the reference qubit (the state's highest site)."""
    block = psi.amplitudes.reshape(2, -1)
    rho = block @ block.conj().T
    return float(np.real(np.vdot(rho, rho)))


def trajectory_purities(config, trajectory, r_max=None):
    """Tr(rho_R^2) after each dual step of one Born-sampled trajectory."""
    t = config.t
    r_max = config.r_max if r_max is None else r_max
    family = config.gate_family()
    basis = config.basis()
    rng = rngmod.stream(config.master_seed, rngmod.MEASUREMENT, trajectory)
    psi = reference_chain_state(t)
    purities = np.empty(r_max + 1)
    purities[0] = _reference_purity(psi)
    for step in range(1, r_max + 1):
        column = sample_column(family, config.master_seed, trajectory, step, t)
        psi, _ = circuitmod.dual_step_monitored(psi, column, basis, rng)
        purities[step] = _reference_purity(psi)
    return purities


PILOT_TRAJECTORIES = 16
PILOT_BLOCK = 128
STOP_ENTROPY = 0.3  # bits: horizon search stops once annealed S drops below
R_CAP = 20000


def adaptive_r_max(config, stop_entropy=STOP_ENTROPY, r_cap=R_CAP):
    """Dual-time horizon long enough to fit the exponential tail of S(r).

    A pilot bundle of trajectories is advanced in blocks until the
    annealed entropy falls below ``stop_entropy`` bits (capped at
    ``r_cap``). Because xi_p grows exponentially with t, no fixed
    multiple of t works across depths; the pilot finds the scale at ~10%
    of the full-run cost. Deterministic in ``config.master_seed``.
    """
    t = config.t
    family = config.gate_family()
    basis = config.basis()
    if basis.kind == MU_INTERPOLATED and basis.effective_mu() == 0.0:
        # Bell readout acts unitarily on the chain: the trace never purifies,
        # so a short horizon already shows the flat one-bit plateau
        return PILOT_BLOCK
    n_pilot = min(PILOT_TRAJECTORIES, config.trajectories)
    bundle = []
    for traj in range(n_pilot):
        bundle.append(
            (reference_chain_state(t), rngmod.stream(config.master_seed, rngmod.MEASUREMENT, traj))
        )
    r = 0
    while r < r_cap:
        mean = 0.0
        for i, (psi, rng) in enumerate(bundle):
            for step in range(r + 1, r + PILOT_BLOCK + 1):
                column = sample_column(family, config.master_seed, i, step, t)
                psi, _ = circuitmod.dual_step_monitored(psi, column, basis, rng)
            bundle[i] = (psi, rng)
            mean += _reference_purity(psi)
        r += PILOT_BLOCK
        if -np.log2(mean / n_pilot) < stop_entropy:
            break
    return min(r, r_cap)


def _trajectory_rows(config, r_max, trajectories):
    return np.array([trajectory_purities(config, j, r_max) for j in trajectories])


def run_purification(config, jobs=1):
    """Annealed reference entropy S(r) over Born-sampled dual trajectories.

    ``config.r_max = None`` selects the adaptive horizon. Deterministic in
    ``config.master_seed`` for any ``jobs``: every trajectory owns derived
    streams for its gates and measurement outcomes, and rows are reduced
    in trajectory order, so results do not depend on execution order.
    """
    r_max = config.r_max if config.r_max is not None else adaptive_r_max(config)
    if jobs > 1 and config.trajectories > 1:
        from concurrent.futures import ProcessPoolExecutor

        chunks = np.array_split(np.arange(config.trajectories), min(jobs * 4, config.trajectories))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(
                pool.map(_trajectory_rows, *zip(*[(config, r_max, c) for c in chunks]))
            )
        table = np.concatenate(parts, axis=0)
    else:
        table = _trajectory_rows(config, r_max, range(config.trajectories))
    mean = table.mean(axis=0)
    if config.trajectories > 1:
        sem = table.std(axis=0, ddof=1) / np.sqrt(config.trajectories)
    else:
        sem = np.zeros_like(mean)
    s2 = -np.log2(mean)
    stderr = sem / (mean * np.log(2.0))
    return PurificationTrace(
        config.t, config.mu, config.J_frac, config.master_seed, s2, stderr,
        config.trajectories,
    )


def annealed_entropy(purities):
    """-log2 of the mean purity (average inside the logarithm), in bits."""
    purities = np.asarray(purities, dtype=float)
    if purities.size == 0:
        raise ValueError("no purities to average")
    if np.any(purities <= 0.0) or np.any(purities > 1.0 + 1e-12):
        raise ValueError("purities must lie in (0, 1]")
    return float(-np.log2(purities.mean()))


@dataclass
class PurityBoundReport:
    """Exact evaluation of Tr(rho^(k)^2) >= 2^-r (E_z1 Tr rho_z1^2)^k."""

    subsystem_size: int
    entries: list  # dicts with r, k, lhs, rhs, slack
    tightest_r: dict  # k -> (r*, rhs at r*)
    avg_purity_by_r: dict  # r -> E_z1 Tr rho_z1^2
    frame_potentials: dict  # k -> Tr(rho^(k)^2)

    def entropy_by_r(self):
        """S(r) = -log2 E_z1 Tr(rho_z1^2), the purification entropy proxy."""
        return {r: float(-np.log2(p)) for r, p in self.avg_purity_by_r.items()}


def verify_purity_bound(global_state, A_sites, basis, units=None, k_max=4, atol=1e-9):
    """Check the purity bound for every admissible bath split, by enumeration.

    The bath measurement ``units`` (defaulting to ``basis`` tiled over the
    complement of A in ascending order) are split so that z1 covers the
    first r measured bits (those nearest A) and z2 the rest; r runs over
    all unit boundaries, r = 0 giving Tr(rho^(k)^2) >= [Tr(rho^(1)^2)]^k.
    Raises AssertionError on any violation beyond ``atol`` -- the bound is
    a theorem, so a violation means a bug, not physics.
    """
    n = global_state.num_qubits
    A = sorted(A_sites)
    bath = [s for s in range(n) if s not in A]
    if units is None:
        units = ensemblemod.measurement_tiling(n, bath, basis)
    ens = ensemblemod.project(global_state, A, basis, units=units)
    frame = {k: ensemblemod.frame_potential(ens, k) for k in range(1, k_max + 1)}
    avg_purity = {}
    for cut in range(len(units) + 1):
        r = sum(len(sites) for sites, _ in units[:cut])
        avg_purity[r] = _avg_conditional_purity(global_state, A, units[:cut])
    entries = []
    tightest = {}
    for k in range(1, k_max + 1):
        best = None
        for r, pur in sorted(avg_purity.items()):
            lhs = frame[k]
            rhs = pur**k / (1 << r)
            slack = lhs - rhs
            entries.append({"r": r, "k": k, "lhs": lhs, "rhs": rhs, "slack": slack})
            if slack < -atol:
                raise AssertionError(
                    f"purity bound violated at r={r}, k={k}: {lhs} < {rhs}"
                )
            if best is None or rhs > best[1]:
                best = (r, rhs)
        tightest[k] = best
    return PurityBoundReport(len(A), entries, tightest, avg_purity, frame)


def _avg_conditional_purity(global_state, A, z1_units):
    """E_z1 Tr(rho_z1^2) with rho_z1 the post-z1 reduced state on A."""
    if not z1_units:
        return qstate.partial_trace(global_state, A).purity()
    outcomes = qstate.enumerate_projective(global_state, z1_units)
    measured = [s for sites, _ in z1_units for s in sites]
    kept = sorted(s for s in range(global_state.num_qubits) if s not in measured)
    a_positions = [kept.index(s) for s in A]
    total = 0.0
    for out in outcomes:
        rho = qstate.partial_trace(out.post_state, a_positions)
        total += out.probability * rho.purity()
    return total


def verify_holder(p, f, k, atol=1e-12):
    """sum_i p_i^2 f_i^k >= (sum_i p_i f_i)^k / M for a distribution p."""
    p = np.asarray(p, dtype=float)
    f = np.asarray(f, dtype=float)
    if p.shape != f.shape or p.ndim != 1 or p.size == 0:
        raise ValueError("p and f must be matching nonempty vectors")
    if np.any(p < -atol) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("p is not a probability distribution")
    if np.any(f < 0.0):
        raise ValueError("f must be nonnegative")
    if k < 1:
        raise ValueError("k must be >= 1")
    lhs = float(np.sum(p**2 * f**k))
    rhs = float(np.sum(p * f) ** k / p.size)
    return lhs >= rhs - atol
