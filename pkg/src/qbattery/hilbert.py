"""Bases and operator matrices for one cavity mode coupled to N two-level systems.

Two qubit representations are supported: the permutation-symmetric (Dicke)
sector, indexed by the number of excited qubits k = 0..N, and the full
2^N product space, kept only as a validation path for small N.  All
operators are dense complex numpy arrays; constructors are pure and the
returned matrices are never mutated afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CompositeBasis",
    "StateVector",
    "annihilation_op",
    "collective_spin_ops",
    "full_qubit_op",
    "symmetric_embedding",
    "tensor",
    "is_hermitian",
    "MAX_TENSOR_DIM",
    "FULL_SECTOR_LIMIT",
]

# Product-dimension guard for tensor(); dense eigensolves beyond this are
# impractical anyway.
MAX_TENSOR_DIM = 200_000

# The full 2^N space exists only to validate the symmetric-sector fast path.
FULL_SECTOR_LIMIT = 8

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class CompositeBasis:
    """Joint Hilbert space: cavity Fock levels 0..cavity_cutoff times a qubit sector.

    ``sector`` is "symmetric" (N+1 Dicke states, k = number of excited
    qubits) or "full" (2^N product states, qubit i mapped to bit N-i, set
    bit = excited).  Basis index = cavity_index * sector_dim + qubit_index.
    """

    cavity_cutoff: int
    sector: str
    n_qubits: int
    full_limit: int = field(default=FULL_SECTOR_LIMIT, compare=False)

    def __post_init__(self):
        if self.cavity_cutoff < 0:
            raise ValueError(f"cavity_cutoff must be >= 0, got {self.cavity_cutoff}")
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be >= 1, got {self.n_qubits}")
        if self.sector not in ("symmetric", "full"):
            raise ValueError(f"unknown sector {self.sector!r}")
        if self.sector == "full" and self.n_qubits > self.full_limit:
            raise ValueError(
                f"full sector limited to {self.full_limit} qubits "
                f"(got N={self.n_qubits}); raise full_limit explicitly to override"
            )

    @property
    def cavity_dim(self) -> int:
        return self.cavity_cutoff + 1

    @property
    def sector_dim(self) -> int:
        if self.sector == "symmetric":
            return self.n_qubits + 1
        return 2 ** self.n_qubits

    @property
    def total_dim(self) -> int:
        return self.cavity_dim * self.sector_dim


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state of the joint cavity-battery system."""

    basis: CompositeBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape != (self.basis.total_dim,):
            raise ValueError(
                f"amplitude vector has length {self.amplitudes.shape}, "
                f"basis dimension is {self.basis.total_dim}"
            )

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.max(np.abs(m - m.conj().T)) < tol)


def annihilation_op(n_max: int) -> np.ndarray:
    """Bosonic annihilation operator on Fock levels 0..n_max: <n-1|a|n> = sqrt(n)."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    return np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), k=1).astype(complex)


def collective_spin_ops(n_qubits: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(Jz, J+, J-) on the symmetric sector, indexed by excitation number k.

    Jz|k> = (k - N/2)|k>,  J+|k> = sqrt((N-k)(k+1))|k+1>,  J- = J+^dagger.
    """
    if n_qubits < 1:
        raise ValueError(f"n_qubits must be >= 1, got {n_qubits}")
    N = n_qubits
    k = np.arange(N + 1, dtype=float)
    jz = np.diag(k - N / 2).astype(complex)
    raise_amps = np.sqrt((N - k[:-1]) * (k[:-1] + 1))
    jplus = np.diag(raise_amps, k=-1).astype(complex)
    return jz, jplus, jplus.conj().T


_SINGLE_QUBIT = {
    # Basis (|g>, |e>) = (index 0, index 1).
    "plus": np.array([[0, 0], [1, 0]], dtype=complex),
    "minus": np.array([[0, 1], [0, 0]], dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "z": np.array([[-1, 0], [0, 1]], dtype=complex),
}


def full_qubit_op(
    n_qubits: int, site: int, which: str, full_limit: int = FULL_SECTOR_LIMIT
) -> np.ndarray:
    """Single-qubit operator on site ``site`` (1-based) in the 2^N product space."""
    if not 1 <= site <= n_qubits:
        raise ValueError(f"site must be in 1..{n_qubits}, got {site}")
    if n_qubits > full_limit:
        raise ValueError(
            f"full sector limited to {full_limit} qubits (got N={n_qubits})"
        )
    try:
        op = _SINGLE_QUBIT[which]
    except KeyError:
        raise ValueError(f"unknown operator {which!r}") from None
    out = np.eye(1, dtype=complex)
    for i in range(1, n_qubits + 1):
        out = np.kron(out, op if i == site else np.eye(2, dtype=complex))
    return out


def symmetric_embedding(n_qubits: int, full_limit: int = FULL_SECTOR_LIMIT) -> np.ndarray:
    """Isometry (2^N x (N+1)) whose column k is the Dicke state with k excited qubits."""
    if n_qubits > full_limit:
        raise ValueError(
            f"full sector limited to {full_limit} qubits (got N={n_qubits})"
        )
    N = n_qubits
    out = np.zeros((2 ** N, N + 1), dtype=complex)
    for index in range(2 ** N):
        k = bin(index).count("1")
        out[index, k] = 1.0
    out /= np.sqrt(out.sum(axis=0)).real  # column k has binom(N, k) equal entries
    return out


def tensor(a: np.ndarray, b: np.ndarray, max_dim: int = MAX_TENSOR_DIM) -> np.ndarray:
    """Kronecker product with a product-dimension guard."""
    dim = a.shape[0] * b.shape[0]
    if dim > max_dim:
        raise ValueError(
            f"tensor product dimension {dim} exceeds the guard {max_dim}"
        )
    return np.kron(a, b)
