"""Density-matrix verification of the work bound on small Hilbert spaces.

The system starts as a block-orthogonal mixture of logical states, the
environment exactly in a canonical state at the reference temperature,
and the two uncorrelated.  Any unitary on the joint space is a candidate
physical process; the work it draws from the external control equals the
total energy change of system plus environment.  Three facts then bound
the work from below: entropy is invariant under the unitary, entropy is
subadditive across the final marginals, and the relative entropy of the
final environment state against the canonical one is non-negative.  This
module computes all three inequalities explicitly per trial so a failure
pinpoints which link broke.

Dimensions are deliberately small (joint dimension capped at 64); dense
eigendecomposition is the only linear algebra required.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EIG_ATOL = 1e-10
MAX_JOINT_DIM = 64

__all__ = [
    "QuantumError",
    "SetupError",
    "DensityMatrix",
    "HamiltonianSpec",
    "gibbs_state",
    "vn_entropy",
    "relative_entropy",
    "partial_trace",
    "haar_unitary",
    "CanonicalizedState",
    "canonicalize",
    "block_mixture",
    "mixture_entropy_terms",
    "TrialSetup",
    "default_setup",
    "TrialResult",
    "verify_bound",
    "TrialBatchResult",
    "run_trials",
]


class QuantumError(ValueError):
    pass


class SetupError(QuantumError):
    pass


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise QuantumError("density matrix must be square")
        if np.max(np.abs(m - m.conj().T)) > EIG_ATOL:
            raise QuantumError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > EIG_ATOL or abs(np.trace(m).imag) > EIG_ATOL:
            raise QuantumError("density matrix trace differs from one")
        eigs = np.linalg.eigvalsh(m)
        if eigs.min() < -EIG_ATOL:
            raise QuantumError(f"density matrix has negative eigenvalue {eigs.min():.3e}")
        object.__setattr__(self, "matrix", _frozen(m.copy()))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """Real spectrum plus an eigenbasis (identity basis when omitted)."""

    energies: np.ndarray
    basis: np.ndarray | None = None

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float)
        if e.ndim != 1 or e.size == 0:
            raise QuantumError("energies must form a non-empty vector")
        object.__setattr__(self, "energies", _frozen(e.copy()))
        if self.basis is not None:
            b = np.asarray(self.basis, dtype=complex)
            if b.shape != (e.size, e.size):
                raise QuantumError("basis shape does not match spectrum")
            if np.max(np.abs(b.conj().T @ b - np.eye(e.size))) > 1e-9:
                raise QuantumError("basis is not unitary")
            object.__setattr__(self, "basis", _frozen(b.copy()))

    @property
    def dim(self) -> int:
        return self.energies.size

    def matrix(self) -> np.ndarray:
        if self.basis is None:
            return np.diag(self.energies).astype(complex)
        return self.basis @ np.diag(self.energies).astype(complex) @ self.basis.conj().T


def gibbs_state(hamiltonian: HamiltonianSpec, temperature: float, k: float = 1.0) -> DensityMatrix:
    """Canonical state exp(-H / kT) / Z, evaluated in the eigenbasis.

    Energies are shifted by their minimum before exponentiating so large
    spectra cannot overflow.
    """
    if temperature <= 0.0:
        raise QuantumError("temperature must be positive")
    shifted = hamiltonian.energies - hamiltonian.energies.min()
    weights = np.exp(-shifted / (k * temperature))
    populations = weights / weights.sum()
    if hamiltonian.basis is None:
        return DensityMatrix(np.diag(populations).astype(complex))
    b = hamiltonian.basis
    return DensityMatrix(b @ np.diag(populations).astype(complex) @ b.conj().T)


def _entropy_from_eigs(eigs: np.ndarray) -> float:
    clipped = eigs[eigs > 1e-300]
    return float(-(clipped * np.log(clipped)).sum())


def vn_entropy(rho: DensityMatrix | np.ndarray) -> float:
    """Entropy -tr(rho ln rho) in units of k (0 ln 0 = 0)."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    eigs = np.clip(np.linalg.eigvalsh(m), 0.0, None)
    return _entropy_from_eigs(eigs)


def relative_entropy(rho: np.ndarray, sigma_log: np.ndarray) -> float:
    """tr rho (ln rho - ln sigma) given ln(sigma) as a matrix."""
    rho = np.asarray(rho, dtype=complex)
    eigs = np.clip(np.linalg.eigvalsh(rho), 0.0, None)
    term = -_entropy_from_eigs(eigs)
    cross = float(np.real(np.trace(rho @ sigma_log)))
    return term - cross


def _log_gibbs(hamiltonian: HamiltonianSpec, temperature: float, k: float = 1.0) -> np.ndarray:
    shifted = hamiltonian.energies - hamiltonian.energies.min()
    weights = np.exp(-shifted / (k * temperature))
    log_pop = -shifted / (k * temperature) - math.log(float(weights.sum()))
    if hamiltonian.basis is None:
        return np.diag(log_pop).astype(complex)
    b = hamiltonian.basis
    return b @ np.diag(log_pop).astype(complex) @ b.conj().T


def partial_trace(rho: np.ndarray, dims: tuple[int, int], keep: int) -> np.ndarray:
    """Trace out one factor of a bipartite state; ``keep`` is 0 or 1."""
    d0, d1 = dims
    reshaped = np.asarray(rho, dtype=complex).reshape(d0, d1, d0, d1)
    if keep == 0:
        return np.einsum("ijkj->ik", reshaped)
    if keep == 1:
        return np.einsum("ijil->jl", reshaped)
    raise QuantumError("keep must be 0 or 1")


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    phases = np.diag(r).copy()
    phases /= np.abs(phases)
    return q * phases


@dataclass(frozen=True, eq=False)
class CanonicalizedState:
    """Spectrum-preserving rotation of a state into canonical form."""

    hamiltonian: HamiltonianSpec
    unitary: np.ndarray
    support_dim: int
    populations: np.ndarray

    @property
    def full_rank(self) -> bool:
        return self.support_dim == self.unitary.shape[0]


def canonicalize(
    rho: DensityMatrix,
    temperature: float,
    target_energy: float,
    k: float = 1.0,
    rank_tol: float = 1e-12,
) -> CanonicalizedState:
    """Hamiltonian and unitary that make a given state exactly canonical.

    Choosing level ``n`` at energy
    ``target_energy - kT (ln p_n - sum_m p_m ln p_m)`` makes the canonical
    populations reproduce the spectrum ``p`` of ``rho``; the unitary maps
    the state's eigenbasis onto the computational basis, so
    ``U rho U^dagger`` equals ``gibbs_state(H, T)`` with mean energy
    exactly ``target_energy`` and unchanged entropy.  Rank-deficient
    states are handled on their support, reported via ``support_dim``.
    """
    if temperature <= 0.0:
        raise QuantumError("temperature must be positive")
    eigs, vecs = np.linalg.eigh(rho.matrix)
    order = np.argsort(eigs)[::-1]
    eigs = np.clip(eigs[order], 0.0, None)
    vecs = vecs[:, order]
    support = eigs > rank_tol
    populations = eigs[support]
    populations = populations / populations.sum()
    mean_log = float((populations * np.log(populations)).sum())
    energies = target_energy - k * temperature * (np.log(populations) - mean_log)
    unitary = vecs.conj().T  # maps each eigenvector onto a computational axis
    return CanonicalizedState(
        hamiltonian=HamiltonianSpec(energies),
        unitary=unitary,
        support_dim=int(support.sum()),
        populations=populations,
    )


def block_mixture(
    blocks: tuple[tuple[int, int], ...],
    probs,
    block_states: tuple[np.ndarray, ...],
    dim: int,
) -> DensityMatrix:
    """Assemble sum_i P(i) rho_i with each rho_i supported on its own block."""
    probs = np.asarray(probs, dtype=float)
    if len(blocks) != probs.size or len(block_states) != probs.size:
        raise SetupError("blocks, probabilities and states must align")
    out = np.zeros((dim, dim), dtype=complex)
    for (start, size), p, state in zip(blocks, probs, block_states):
        state = np.asarray(state, dtype=complex)
        if state.shape != (size, size):
            raise SetupError("block state shape does not match its block")
        out[start : start + size, start : start + size] += p * state
    return DensityMatrix(out)


def mixture_entropy_terms(probs, block_states) -> float:
    """Entropy of a block-orthogonal mixture: sum P (S_block - ln P)."""
    total = 0.0
    for p, state in zip(np.asarray(probs, dtype=float), block_states):
        if p == 0.0:
            continue
        total += p * (vn_entropy(np.asarray(state)) - math.log(p))
    return total


@dataclass(frozen=True, eq=False)
class TrialSetup:
    """Fixed data shared by every trial in a sweep."""

    system_h: HamiltonianSpec
    env_h: HamiltonianSpec
    blocks: tuple[tuple[int, int], ...]
    input_probs: np.ndarray
    input_states: tuple[np.ndarray, ...]
    reference_temperature: float
    target_output_probs: np.ndarray | None = None

    def __post_init__(self):
        probs = np.asarray(self.input_probs, dtype=float)
        if np.any(probs < 0.0) or abs(float(probs.sum()) - 1.0) > 1e-9:
            raise SetupError("input probabilities must form a distribution")
        object.__setattr__(self, "input_probs", _frozen(probs.copy()))
        dim = self.system_h.dim
        covered = []
        for start, size in self.blocks:
            if start < 0 or size < 1 or start + size > dim:
                raise SetupError("block outside system dimension")
            covered.extend(range(start, start + size))
        if len(set(covered)) != len(covered):
            raise SetupError("blocks overlap")
        if self.reference_temperature <= 0.0:
            raise SetupError("reference temperature must be positive")
        if self.system_h.dim * self.env_h.dim > MAX_JOINT_DIM:
            raise SetupError(f"joint dimension exceeds cap {MAX_JOINT_DIM}")
        if self.target_output_probs is not None:
            t = np.asarray(self.target_output_probs, dtype=float)
            if t.size != len(self.blocks):
                raise SetupError("target output probabilities must match block count")
            object.__setattr__(self, "target_output_probs", _frozen(t.copy()))

    @property
    def initial_system(self) -> DensityMatrix:
        return block_mixture(
            self.blocks, self.input_probs, self.input_states, self.system_h.dim
        )


def default_setup(
    system_block_sizes: tuple[int, ...] = (2, 2),
    env_dim: int = 8,
    reference_temperature: float = 1.0,
    input_probs=None,
    target_output_probs=None,
) -> TrialSetup:
    """Deterministic small setup: fixed non-degenerate spectra, canonical blocks."""
    dim = sum(system_block_sizes)
    system_h = HamiltonianSpec(np.linspace(0.0, 1.3, dim))
    env_h = HamiltonianSpec(np.linspace(0.0, 2.1, env_dim))
    blocks = []
    start = 0
    for size in system_block_sizes:
        blocks.append((start, size))
        start += size
    if input_probs is None:
        input_probs = np.full(len(blocks), 1.0 / len(blocks))
    states = []
    for start, size in blocks:
        sub = HamiltonianSpec(system_h.energies[start : start + size])
        states.append(gibbs_state(sub, reference_temperature).matrix)
    return TrialSetup(
        system_h=system_h,
        env_h=env_h,
        blocks=tuple(blocks),
        input_probs=np.asarray(input_probs, dtype=float),
        input_states=tuple(states),
        reference_temperature=reference_temperature,
        target_output_probs=target_output_probs,
    )


@dataclass(frozen=True, eq=False)
class TrialResult:
    index: int
    work: float
    system_energy_change: float
    system_entropy_change: float
    bound: float
    slack: float
    subadditivity_slack: float
    environment_relative_entropy: float
    output_block_weights: np.ndarray
    respects_operation: bool | None


def verify_bound(
    setup: TrialSetup, unitary: np.ndarray, index: int = 0, marginal_tol: float = 0.05
) -> TrialResult:
    """Evaluate one unitary against the work bound and its two lemmas."""
    ds = setup.system_h.dim
    de = setup.env_h.dim
    if unitary.shape != (ds * de, ds * de):
        raise SetupError("unitary dimension does not match setup")
    t_ref = setup.reference_temperature
    rho_sys = setup.initial_system.matrix
    rho_env = gibbs_state(setup.env_h, t_ref).matrix
    rho = np.kron(rho_sys, rho_env)
    rho_final = unitary @ rho @ unitary.conj().T

    sys_final = partial_trace(rho_final, (ds, de), keep=0)
    env_final = partial_trace(rho_final, (ds, de), keep=1)

    h_sys = setup.system_h.matrix()
    h_env = setup.env_h.matrix()
    e_sys_0 = float(np.real(np.trace(h_sys @ rho_sys)))
    e_sys_1 = float(np.real(np.trace(h_sys @ sys_final)))
    e_env_0 = float(np.real(np.trace(h_env @ rho_env)))
    e_env_1 = float(np.real(np.trace(h_env @ env_final)))
    work = (e_sys_1 - e_sys_0) + (e_env_1 - e_env_0)

    s_initial = vn_entropy(rho_sys)
    s_final = vn_entropy(sys_final)
    entropy_change = s_final - s_initial
    bound = (e_sys_1 - e_sys_0) - t_ref * entropy_change

    joint_entropy = vn_entropy(rho_final)
    subadd = s_final + vn_entropy(env_final) - joint_entropy
    rel_ent = relative_entropy(env_final, _log_gibbs(setup.env_h, t_ref))

    weights = np.array(
        [
            float(np.real(np.trace(sys_final[start : start + size, start : start + size])))
            for start, size in setup.blocks
        ]
    )
    respects = None
    if setup.target_output_probs is not None:
        respects = bool(
            np.max(np.abs(weights - setup.target_output_probs)) <= marginal_tol
        )
    return TrialResult(
        index=index,
        work=work,
        system_energy_change=e_sys_1 - e_sys_0,
        system_entropy_change=entropy_change,
        bound=bound,
        slack=work - bound,
        subadditivity_slack=subadd,
        environment_relative_entropy=rel_ent,
        output_block_weights=weights,
        respects_operation=respects,
    )


@dataclass(frozen=True, eq=False)
class TrialBatchResult:
    results: tuple[TrialResult, ...]
    seed: int
    slack_tolerance: float
    bound_violations: int
    subadditivity_violations: int
    relative_entropy_violations: int
    respecting_trials: int

    @property
    def total_violations(self) -> int:
        return (
            self.bound_violations
            + self.subadditivity_violations
            + self.relative_entropy_violations
        )


def run_trials(
    setup: TrialSetup,
    trials: int,
    seed: int,
    slack_tol: float = 1e-9,
    marginal_tol: float = 0.05,
) -> TrialBatchResult:
    """Sweep seeded Haar-random unitaries and count bound violations."""
    rng = np.random.default_rng(seed)
    dim = setup.system_h.dim * setup.env_h.dim
    results = []
    for index in range(trials):
        unitary = haar_unitary(dim, rng)
        results.append(verify_bound(setup, unitary, index=index, marginal_tol=marginal_tol))
    return TrialBatchResult(
        results=tuple(results),
        seed=seed,
        slack_tolerance=slack_tol,
        bound_violations=sum(1 for r in results if r.slack < -slack_tol),
        subadditivity_violations=sum(
            1 for r in results if r.subadditivity_slack < -slack_tol
        ),
        relative_entropy_violations=sum(
            1 for r in results if r.environment_relative_entropy < -slack_tol
        ),
        respecting_trials=sum(1 for r in results if r.respects_operation),
    )
