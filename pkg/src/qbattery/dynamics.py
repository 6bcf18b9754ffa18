"""Hamiltonians, spectral propagators, and local energies.

Both models share the free part H0 = omega0 (a^dag a + sum_i |e_i><e_i|),
with zero ground energy.  The excitation-conserving model couples through
g (a J+ + a^dag J-); the counter-rotating model through g (a + a^dag)(J+ + J-).
Evolution goes through a one-time spectral decomposition, after which any
time is a phase application.

The dense propagator follows the generic route (full eigh).  For the
symmetric sector both interactions conserve a grading of the (n, k)
lattice: total excitation n + k for the excitation-conserving model and
its parity for the counter-rotating one.  ``make_block_propagator``
exploits this: it diagonalizes each conserved block separately, which
keeps the cost polynomial in the photon cutoff instead of cubic in the
total dimension.  Both propagators implement the same evolution contract
and are cross-checked in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .hilbert import (
    CompositeBasis,
    StateVector,
    annihilation_op,
    collective_spin_ops,
    full_qubit_op,
    is_hermitian,
    tensor,
)

__all__ = [
    "ModelSpec",
    "EnergyRecord",
    "Propagator",
    "BlockPropagator",
    "MODEL_KINDS",
    "build_hamiltonian",
    "make_propagator",
    "make_block_propagator",
    "evolve",
    "local_energies",
    "occupation_energies",
    "joint_initial_state",
]

MODEL_KINDS = ("tc", "dicke")

NORM_TOL = 1e-10


class EigensolverError(RuntimeError):
    """Spectral decomposition failed its numerical quality checks."""


@dataclass(frozen=True)
class ModelSpec:
    """Which interaction, shared frequency omega0, coupling g, qubit count."""

    model: str
    omega0: float
    g: float
    n_qubits: int

    def __post_init__(self):
        if self.model not in MODEL_KINDS:
            raise ValueError(f"model must be one of {MODEL_KINDS}, got {self.model!r}")
        if not self.omega0 > 0:
            raise ValueError(f"omega0 must be > 0, got {self.omega0}")
        if not self.g > 0:
            raise ValueError(f"g must be > 0, got {self.g}")
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be >= 1, got {self.n_qubits}")


@dataclass(frozen=True)
class EnergyRecord:
    """Local and total energies at one instant, in the units of omega0."""

    t: float
    e_charger: float
    e_battery: float
    e_total: float


def build_hamiltonian(spec: ModelSpec, basis: CompositeBasis) -> tuple[np.ndarray, np.ndarray]:
    """(H0, H1) on the composite basis, cavity factor first.

    H0 is the free part with zero ground energy; H1 the bare interaction
    (the coupling g is included, the switching profile is not).
    """
    if basis.n_qubits != spec.n_qubits:
        raise ValueError(
            f"basis has {basis.n_qubits} qubits, model spec has {spec.n_qubits}"
        )
    w0, g = spec.omega0, spec.g
    a = annihilation_op(basis.cavity_cutoff)
    number_c = (a.conj().T @ a).real.astype(complex)
    if basis.sector == "symmetric":
        _, s_plus, s_minus = collective_spin_ops(spec.n_qubits)
        number_b = np.diag(np.arange(basis.sector_dim, dtype=float)).astype(complex)
    else:
        s_plus = sum(full_qubit_op(spec.n_qubits, i, "plus", basis.full_limit)
                     for i in range(1, spec.n_qubits + 1))
        s_minus = s_plus.conj().T
        number_b = np.diag(
            [bin(i).count("1") for i in range(basis.sector_dim)]
        ).astype(complex)
    ident_c = np.eye(basis.cavity_dim, dtype=complex)
    ident_b = np.eye(basis.sector_dim, dtype=complex)
    h0 = w0 * (tensor(number_c, ident_b) + tensor(ident_c, number_b))
    if spec.model == "tc":
        h1 = g * (tensor(a, s_plus) + tensor(a.conj().T, s_minus))
    else:
        h1 = g * tensor(a + a.conj().T, s_plus + s_minus)
    return h0, h1


@dataclass(frozen=True)
class Propagator:
    """Full spectral decomposition; evolution to any t is a phase application."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def propagate(self, amplitudes: np.ndarray, t: float) -> np.ndarray:
        v = self.eigenvectors
        return v @ (np.exp(-1j * self.eigenvalues * t) * (v.conj().T @ amplitudes))


@dataclass(frozen=True)
class BlockPropagator:
    """Spectral decomposition stored per conserved block of basis indices."""

    dim: int
    blocks: tuple  # of (index_array, eigenvalues, eigenvectors)

    def propagate(self, amplitudes: np.ndarray, t: float) -> np.ndarray:
        out = np.zeros(self.dim, dtype=complex)
        for idx, lam, v in self.blocks:
            seg = v.T @ amplitudes[idx]
            out[idx] = v @ (np.exp(-1j * lam * t) * seg)
        return out


def make_propagator(h: np.ndarray, check: bool = True) -> Propagator:
    """Dense spectral decomposition of a hermitian matrix."""
    if not is_hermitian(h, 1e-10 * max(1.0, float(np.max(np.abs(h))))):
        raise ValueError("make_propagator requires a hermitian matrix")
    try:
        lam, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(
            f"eigh failed on a {h.shape[0]}-dim matrix: {exc}"
        ) from exc
    if check:
        scale = max(float(np.max(np.abs(lam))), 1.0)
        ortho = np.max(np.abs(v.conj().T @ v - np.eye(h.shape[0])))
        recon = np.max(np.abs((v * lam) @ v.conj().T - h))
        if ortho > 1e-10 or recon > 1e-9 * scale:
            raise EigensolverError(
                f"spectral decomposition degraded: orthogonality {ortho:.2e}, "
                f"reconstruction {recon:.2e} (relative to {scale:.2e})"
            )
    return Propagator(eigenvalues=lam, eigenvectors=v)


def _raising_amps(n_qubits: int) -> np.ndarray:
    k = np.arange(n_qubits, dtype=float)
    return np.sqrt((n_qubits - k) * (k + 1))


def make_block_propagator(spec: ModelSpec, basis: CompositeBasis) -> BlockPropagator:
    """Per-block spectral decomposition on the symmetric sector.

    Blocks collect the (n, k) lattice by n + k for the excitation-conserving
    model and by (n + k) mod 2 for the counter-rotating one.  Matrix elements
    are filled directly, so the full dense Hamiltonian is never formed.
    """
    if basis.sector != "symmetric":
        raise ValueError("block propagator is defined on the symmetric sector")
    if basis.n_qubits != spec.n_qubits:
        raise ValueError(
            f"basis has {basis.n_qubits} qubits, model spec has {spec.n_qubits}"
        )
    N, n_max = spec.n_qubits, basis.cavity_cutoff
    w0, g = spec.omega0, spec.g
    jp = _raising_amps(N)

    if spec.model == "tc":
        keys = range(n_max + N + 1)
        key_of = lambda n, k: n + k
    else:
        keys = range(2)
        key_of = lambda n, k: (n + k) % 2

    members: dict[int, list[tuple[int, int]]] = {key: [] for key in keys}
    for n in range(n_max + 1):
        for k in range(N + 1):
            members[key_of(n, k)].append((n, k))

    blocks = []
    for key in keys:
        pairs = members[key]
        if not pairs:
            continue
        pos = {pair: i for i, pair in enumerate(pairs)}
        s = len(pairs)
        h = np.zeros((s, s))
        for i, (n, k) in enumerate(pairs):
            h[i, i] = w0 * (n + k)
            if n >= 1 and k + 1 <= N:  # a J+
                h[pos[(n - 1, k + 1)], i] += g * math.sqrt(n) * jp[k]
            if spec.model == "dicke":
                if n >= 1 and k >= 1:  # a J-
                    h[pos[(n - 1, k - 1)], i] += g * math.sqrt(n) * jp[k - 1]
                if n + 1 <= n_max and k + 1 <= N:  # a^dag J+
                    h[pos[(n + 1, k + 1)], i] += g * math.sqrt(n + 1) * jp[k]
            if n + 1 <= n_max and k >= 1:  # a^dag J-
                h[pos[(n + 1, k - 1)], i] += g * math.sqrt(n + 1) * jp[k - 1]
        lam, v = np.linalg.eigh(h)
        idx = np.fromiter((n * (N + 1) + k for n, k in pairs), dtype=np.intp, count=s)
        blocks.append((idx, lam, v))
    return BlockPropagator(dim=basis.total_dim, blocks=tuple(blocks))


def joint_initial_state(charger: np.ndarray, battery: np.ndarray, basis: CompositeBasis) -> StateVector:
    """Product state charger (cavity) x battery (qubits) on the composite basis."""
    amplitudes = np.kron(charger, battery)
    psi = StateVector(basis=basis, amplitudes=amplitudes)
    if abs(psi.norm - 1.0) > NORM_TOL:
        raise ValueError(f"initial state norm {psi.norm} is not 1")
    return psi


def evolve(psi0: StateVector, prop: Propagator | BlockPropagator, t: float) -> StateVector:
    """psi(t) = V exp(-i lambda t) V^dag psi0; norm preserved to 1e-10."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    amplitudes = prop.propagate(psi0.amplitudes, t)
    psi = StateVector(basis=psi0.basis, amplitudes=amplitudes)
    if abs(psi.norm - 1.0) > NORM_TOL:
        raise EigensolverError(
            f"evolution lost unitarity: |psi| = {psi.norm} at t = {t}"
        )
    return psi


def occupation_energies(psi: StateVector, omega0: float) -> tuple[float, float]:
    """(E_charger, E_battery) from the diagonal occupation marginals.

    Both local Hamiltonians are diagonal in the composite basis (cavity
    photon number; excited-qubit count in either sector), so no operator
    matrices are needed.
    """
    basis = psi.basis
    pops = np.abs(psi.amplitudes) ** 2
    grid = pops.reshape(basis.cavity_dim, basis.sector_dim)
    e_charger = omega0 * float(np.arange(basis.cavity_dim) @ grid.sum(axis=1))
    if basis.sector == "symmetric":
        levels = np.arange(basis.sector_dim, dtype=float)
    else:
        levels = np.array([bin(i).count("1") for i in range(basis.sector_dim)], dtype=float)
    e_battery = omega0 * float(levels @ grid.sum(axis=0))
    return e_charger, e_battery


@lru_cache(maxsize=8)
def _cached_hamiltonian(spec: ModelSpec, basis: CompositeBasis):
    h0, h1 = build_hamiltonian(spec, basis)
    return h0 + h1


def local_energies(psi: StateVector, spec: ModelSpec, t: float = 0.0) -> EnergyRecord:
    """Local charger/battery energies plus the total <H0 + H1> during the pulse."""
    e_charger, e_battery = occupation_energies(psi, spec.omega0)
    h = _cached_hamiltonian(spec, psi.basis)
    e_total = float(np.real(psi.amplitudes.conj() @ (h @ psi.amplitudes)))
    return EnergyRecord(t=t, e_charger=e_charger, e_battery=e_battery, e_total=e_total)
