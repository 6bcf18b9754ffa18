"""Reduced battery states, passive states, ergotropy, and spectral bounds.

A battery of N resonant qubits has N+1 energy levels k*omega0 whose
multiplicities binom(N, k) grow combinatorially.  States prepared through
the collective protocol stay in the permutation-symmetric sector, so the
reduced density matrix is only (N+1)-dimensional, but work extraction may
use any N-qubit unitary: passive-state energies must therefore be taken
against the degenerate ladder, not against the sector's own N+1 levels.
``DensityMatrix`` carries that ladder explicitly as per-basis-state
energies plus level multiplicities; ergotropy computed this way agrees
with the brute-force 2^N computation (checked in the tests).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .hilbert import CompositeBasis, StateVector, symmetric_embedding

__all__ = [
    "DensityMatrix",
    "reduce_to_battery",
    "reduce_to_charger",
    "reduce_to_subset",
    "passive_state",
    "ergotropy",
    "majorizes",
    "flat_bound_check",
    "sorted_spectrum",
    "EIGENVALUE_CLAMP",
]

# Eigenvalues below this are eigensolver noise and are clamped to zero
# before rank counts and majorization.
EIGENVALUE_CLAMP = 1e-12

VALIDATION_TOL = 1e-10


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive matrix with its energy ladder attached.

    ``energies[i]`` is the energy of basis state i; ``degeneracies[i]`` the
    multiplicity of that level in the physical space (all ones when the
    matrix already spans the full space).
    """

    entries: np.ndarray
    energies: np.ndarray
    degeneracies: np.ndarray = field(default=None)

    def __post_init__(self):
        dim = self.entries.shape[0]
        if self.entries.shape != (dim, dim):
            raise ValueError("entries must be a square matrix")
        if self.energies.shape != (dim,):
            raise ValueError("energies must match the matrix dimension")
        if self.degeneracies is None:
            object.__setattr__(self, "degeneracies", np.ones(dim, dtype=np.int64))
        elif self.degeneracies.shape != (dim,):
            raise ValueError("degeneracies must match the matrix dimension")
        herm = np.max(np.abs(self.entries - self.entries.conj().T))
        if herm > VALIDATION_TOL:
            raise ValueError(f"matrix is not hermitian: deviation {herm:.2e}")
        tr = float(np.real(np.trace(self.entries)))
        if abs(tr - 1.0) > VALIDATION_TOL:
            raise ValueError(f"trace is {tr}, expected 1")
        min_eig = float(np.linalg.eigvalsh(self.entries)[0])
        if min_eig < -VALIDATION_TOL:
            raise ValueError(f"matrix is not positive: min eigenvalue {min_eig:.2e}")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def mean_energy(self) -> float:
        return float(np.real(np.diag(self.entries) @ self.energies))

    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))


def sorted_spectrum(rho: DensityMatrix | np.ndarray, clamp: float = EIGENVALUE_CLAMP) -> np.ndarray:
    """Eigenvalues sorted descending, with sub-clamp values set to zero."""
    m = rho.entries if isinstance(rho, DensityMatrix) else rho
    vals = np.linalg.eigvalsh(m)[::-1]
    vals = np.where(vals < clamp, 0.0, vals)
    return vals


def _battery_ladder(n_qubits: int, omega0: float) -> tuple[np.ndarray, np.ndarray]:
    energies = omega0 * np.arange(n_qubits + 1, dtype=float)
    degeneracies = np.array([math.comb(n_qubits, k) for k in range(n_qubits + 1)], dtype=np.int64)
    return energies, degeneracies


def reduce_to_battery(psi: StateVector, basis: CompositeBasis | None = None, omega0: float = 1.0) -> DensityMatrix:
    """Partial trace over the cavity, with the battery ladder attached."""
    basis = basis or psi.basis
    m = psi.amplitudes.reshape(basis.cavity_dim, basis.sector_dim)
    rho = m.T @ m.conj()
    if basis.sector == "symmetric":
        energies, degeneracies = _battery_ladder(basis.n_qubits, omega0)
    else:
        # the matrix itself spans the degenerate space
        energies = omega0 * np.array(
            [bin(i).count("1") for i in range(basis.sector_dim)], dtype=float
        )
        degeneracies = np.ones(basis.sector_dim, dtype=np.int64)
    return DensityMatrix(entries=rho, energies=energies, degeneracies=degeneracies)


def reduce_to_charger(psi: StateVector, basis: CompositeBasis | None = None, omega0: float = 1.0) -> DensityMatrix:
    """Partial trace over the qubits; cavity ladder is nondegenerate."""
    basis = basis or psi.basis
    m = psi.amplitudes.reshape(basis.cavity_dim, basis.sector_dim)
    rho = m @ m.conj().T
    energies = omega0 * np.arange(basis.cavity_dim, dtype=float)
    return DensityMatrix(entries=rho, energies=energies)


def _subset_weight(n: int, m_keep: int, k: int, kp: int, j: int) -> float:
    """Weight of |D_j><D_j'| in the m_keep-qubit reduction of |D_k><D_k'|.

    Tracing N - M qubits out of a Dicke dyad leaves terms with the same
    number of traced excitations on both sides: j' = k' - (k - j).
    """
    traced = k - j
    jp = kp - traced
    if traced < 0 or traced > n - m_keep or jp < 0 or jp > m_keep:
        return 0.0
    return (
        math.comb(n - m_keep, traced)
        * math.sqrt(math.comb(m_keep, j) * math.comb(m_keep, jp))
        / math.sqrt(math.comb(n, k) * math.comb(n, kp))
    )


def reduce_to_subset(
    psi: StateVector,
    basis: CompositeBasis | None = None,
    m_keep: int = 1,
    omega0: float = 1.0,
    off_sector_tol: float = 1e-10,
) -> DensityMatrix:
    """Reduced state of m_keep qubits, in the (m_keep+1)-dim symmetric sector.

    Works combinatorially on the Dicke components, so it never touches the
    2^N space; the weights are validated against a brute-force full-space
    partial trace in the test suite.
    """
    basis = basis or psi.basis
    n = basis.n_qubits
    if not 1 <= m_keep <= n:
        raise ValueError(f"m_keep must be in 1..{n}, got {m_keep}")
    if basis.sector == "full":
        # project onto the symmetric sector first; protocol states stay inside
        embed = symmetric_embedding(n, basis.full_limit)
        m = psi.amplitudes.reshape(basis.cavity_dim, basis.sector_dim)
        m_sym = m @ embed.conj()
        residual = 1.0 - float(np.linalg.norm(m_sym) ** 2)
        if residual > off_sector_tol:
            raise ValueError(
                f"state has off-symmetric-sector weight {residual:.2e}"
            )
        rho_full = m_sym.T @ m_sym.conj()
    else:
        m = psi.amplitudes.reshape(basis.cavity_dim, basis.sector_dim)
        rho_full = m.T @ m.conj()
    out = np.zeros((m_keep + 1, m_keep + 1), dtype=complex)
    for k in range(n + 1):
        for kp in range(n + 1):
            if abs(rho_full[k, kp]) == 0.0:
                continue
            for j in range(max(0, k - (n - m_keep)), min(m_keep, k) + 1):
                jp = kp - (k - j)
                w = _subset_weight(n, m_keep, k, kp, j)
                if w != 0.0:
                    out[j, jp] += rho_full[k, kp] * w
    energies, degeneracies = _battery_ladder(m_keep, omega0)
    return DensityMatrix(entries=out, energies=energies, degeneracies=degeneracies)


def _expanded_ladder(rho: DensityMatrix, count: int) -> np.ndarray:
    """First ``count`` physical energies, ascending, with multiplicities."""
    order = np.argsort(rho.energies, kind="stable")
    out = np.empty(count, dtype=float)
    pos = 0
    for i in order:
        take = min(int(rho.degeneracies[i]), count - pos)
        out[pos: pos + take] = rho.energies[i]
        pos += take
        if pos == count:
            break
    if pos < count:
        raise ValueError(
            f"spectrum has {count} entries but the ladder only "
            f"{int(np.sum(rho.degeneracies))} physical states"
        )
    return out


def passive_state(rho: DensityMatrix) -> tuple[DensityMatrix, np.ndarray]:
    """Passive counterpart and the descending spectrum.

    Eigenvalues are laid out descending against the physical energies
    ascending.  When levels are degenerate, the returned matrix aggregates
    each level's passive population onto its basis representative, which
    keeps the dimension of the input while preserving the passive energy
    exactly.  Ties are broken by the stable original-index order.
    """
    spectrum = sorted_spectrum(rho)
    # place spectrum entries into physical slots, then aggregate per level
    order = np.argsort(rho.energies, kind="stable")
    diag = np.zeros(rho.dim)
    pos = 0
    for i in order:
        take = min(int(rho.degeneracies[i]), rho.dim - pos)
        if take <= 0:
            break
        diag[i] = float(np.sum(spectrum[pos: pos + take]))
        pos += take
    passive = DensityMatrix(
        entries=np.diag(diag).astype(complex),
        energies=rho.energies,
        degeneracies=rho.degeneracies,
    )
    return passive, spectrum


def ergotropy(rho: DensityMatrix) -> float:
    """Extractable work: mean energy minus the passive-state energy."""
    passive, _ = passive_state(rho)
    value = rho.mean_energy() - passive.mean_energy()
    return max(value, 0.0)


def majorizes(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    """True iff every partial sum of a (descending) dominates that of b."""
    a = np.sort(np.asarray(a, dtype=float))[::-1]
    b = np.sort(np.asarray(b, dtype=float))[::-1]
    if abs(a.sum() - 1.0) > tol or abs(b.sum() - 1.0) > tol:
        raise ValueError("majorization is defined for normalized spectra")
    size = max(a.size, b.size)
    a = np.pad(a, (0, size - a.size))
    b = np.pad(b, (0, size - b.size))
    return bool(np.all(np.cumsum(a) >= np.cumsum(b) - tol))


def flat_bound_check(
    rho: DensityMatrix,
    k: int,
    alpha: float,
    n_qubits: int,
    omega0: float = 1.0,
    tol: float = 1e-9,
) -> tuple[bool, float]:
    """Check the rank-based extractability bound on a battery state.

    Builds the flat passive comparison state with ceil(alpha * N^k) equal
    eigenvalues on the lowest levels of the degenerate N-qubit ladder,
    verifies that the passive spectrum majorizes it, and checks the chain
    locked energy <= flat-state energy <= k * omega0.  Returns whether the
    chain holds and the gap k*omega0 - locked.
    """
    if k < 0 or alpha <= 0:
        raise ValueError("need k >= 0 and alpha > 0")
    spectrum = sorted_spectrum(rho)
    rank = int(np.count_nonzero(spectrum))
    d = max(int(math.ceil(alpha * n_qubits ** k)), 1)
    if rank > d:
        raise ValueError(
            f"rank {rank} exceeds alpha * N^k = {alpha * n_qubits ** k:.3f}"
        )
    if math.comb(n_qubits, min(k + 1, n_qubits)) < alpha * n_qubits ** k:
        warnings.warn(
            f"N={n_qubits} is too small for the degenerate-level construction "
            f"(binom(N, k+1) < alpha N^k); the bound may not hold",
            stacklevel=2,
        )
    d = min(d, int(np.sum(rho.degeneracies)))  # flat state cannot outgrow the space
    ladder = _expanded_ladder(rho, max(d, rank))
    locked = float(spectrum[:rank] @ ladder[:rank])
    flat_energy = float(np.mean(ladder[:d]))
    flat_spectrum = np.full(d, 1.0 / d)
    majorized = majorizes(spectrum, flat_spectrum)
    holds = majorized and locked <= flat_energy + tol and flat_energy <= k * omega0 + tol
    return holds, k * omega0 - locked
