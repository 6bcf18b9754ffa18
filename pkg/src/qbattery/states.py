"""Charger input states and the battery ground state.

The charger starts in a Fock, coherent, or squeezed-vacuum state whose
parameter is fixed by matching the mean input energy to the battery
capacity N*omega0:  n = N,  alpha = sqrt(N),  z = arcsinh(sqrt(N)).  The
squeezing parameter is taken real and positive; only its modulus is fixed
by the energy-matching rule.

Truncation: the Fock input is exact at n_max = N.  Coherent amplitudes
follow the Poisson weights of mean N.  The squeezed vacuum has support on
even photon numbers only and a near-geometric tail with ratio
tanh^2(z) = N/(N+1) per photon pair, so reaching a leaked probability
below tol needs roughly 2*(N+1)*ln(1/tol) levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ChargerStateSpec",
    "TruncationReport",
    "CutoffOverflowError",
    "TruncationError",
    "CHARGER_KINDS",
    "DEFAULT_TRUNCATION_TOL",
    "choose_cutoff",
    "default_cutoff_ceiling",
    "prepare_charger",
    "battery_ground",
]

CHARGER_KINDS = ("fock", "coherent", "squeezed")

DEFAULT_TRUNCATION_TOL = 1e-8
MAX_TRUNCATION_TOL = 1e-4


class CutoffOverflowError(RuntimeError):
    """The leaked probability did not drop below tolerance before the ceiling."""


class TruncationError(RuntimeError):
    """The requested cutoff leaks more probability than the tolerance allows."""


@dataclass(frozen=True)
class ChargerStateSpec:
    """Charger input choice, energy-matched to N qubits."""

    kind: str
    n_qubits: int

    def __post_init__(self):
        if self.kind not in CHARGER_KINDS:
            raise ValueError(f"kind must be one of {CHARGER_KINDS}, got {self.kind!r}")
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be >= 1, got {self.n_qubits}")

    @property
    def derived_param(self) -> float:
        """Fock number n, coherent amplitude alpha, or squeezing z."""
        if self.kind == "fock":
            return float(self.n_qubits)
        if self.kind == "coherent":
            return math.sqrt(self.n_qubits)
        return math.asinh(math.sqrt(self.n_qubits))


@dataclass(frozen=True)
class TruncationReport:
    leaked_probability: float
    energy_error: float  # |<a^dag a> - N| after truncation, in omega0 units
    chosen_cutoff: int


def default_cutoff_ceiling(spec: ChargerStateSpec, tol: float) -> int:
    """Hard ceiling for the cutoff search.

    50 + 4N covers the Fock and coherent inputs comfortably.  The squeezed
    vacuum needs ~2(N+1)ln(1/tol) levels already at N = 2, so its ceiling
    scales with the tail estimate instead.
    """
    base = 50 + 4 * spec.n_qubits
    if spec.kind != "squeezed":
        return base
    return base + int(math.ceil(2.5 * (spec.n_qubits + 1) * math.log(1.0 / tol)))


def _amplitude_series(spec: ChargerStateSpec, n_max: int) -> np.ndarray:
    """Untruncated-state amplitudes on levels 0..n_max (real by convention)."""
    N = spec.n_qubits
    amps = np.zeros(n_max + 1)
    if spec.kind == "fock":
        if N <= n_max:
            amps[N] = 1.0
        return amps
    if spec.kind == "coherent":
        # c_n = e^{-N/2} N^{n/2} / sqrt(n!), evaluated in log space
        n = np.arange(n_max + 1, dtype=float)
        log_c = -N / 2 + 0.5 * n * math.log(N) - 0.5 * np.array(
            [math.lgamma(i + 1) for i in range(n_max + 1)]
        )
        return np.exp(log_c)
    # squeezed vacuum: c_0 = 1/sqrt(cosh z), c_{2m+2} = -tanh(z) sqrt((2m+1)/(2m+2)) c_{2m}
    z = spec.derived_param
    t = math.tanh(z)
    amps[0] = 1.0 / math.sqrt(math.cosh(z))
    for m in range(n_max // 2):
        amps[2 * m + 2] = -t * math.sqrt((2 * m + 1) / (2 * m + 2)) * amps[2 * m]
    return amps


def choose_cutoff(
    spec: ChargerStateSpec,
    tol: float = DEFAULT_TRUNCATION_TOL,
    ceiling: int | None = None,
) -> int:
    """Smallest n_max whose above-cutoff population is below tol."""
    if not 0 < tol <= MAX_TRUNCATION_TOL:
        raise ValueError(f"tol must be in (0, {MAX_TRUNCATION_TOL}], got {tol}")
    if spec.kind == "fock":
        return spec.n_qubits
    if ceiling is None:
        ceiling = default_cutoff_ceiling(spec, tol)
    amps = _amplitude_series(spec, ceiling)
    leaked = 1.0 - np.cumsum(amps * amps)
    below = np.flatnonzero(leaked < tol)
    if below.size == 0:
        raise CutoffOverflowError(
            f"{spec.kind} input with N={spec.n_qubits}: leaked probability still "
            f"{leaked[-1]:.3e} >= {tol:.1e} at the ceiling n_max={ceiling}"
        )
    return int(below[0])


def prepare_charger(
    spec: ChargerStateSpec,
    n_max: int,
    tol: float = DEFAULT_TRUNCATION_TOL,
) -> tuple[np.ndarray, TruncationReport]:
    """Normalized charger state on levels 0..n_max plus its truncation report.

    Renormalization divides by a single scalar, so amplitude ratios are
    exactly preserved.
    """
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    kept = _amplitude_series(spec, n_max)
    # the untruncated state is normalized, so the leak is 1 minus the kept mass
    leaked_at_cut = max(1.0 - float(np.sum(kept * kept)), 0.0)
    if leaked_at_cut >= tol:
        raise TruncationError(
            f"n_max={n_max} leaks {leaked_at_cut:.3e} >= tol={tol:.1e} "
            f"for the {spec.kind} input with N={spec.n_qubits}"
        )
    amps = kept.astype(complex)
    amps /= np.linalg.norm(amps)
    mean_n = float(np.real(np.sum(np.arange(n_max + 1) * np.abs(amps) ** 2)))
    report = TruncationReport(
        leaked_probability=leaked_at_cut,
        energy_error=abs(mean_n - spec.n_qubits),
        chosen_cutoff=n_max,
    )
    return amps, report


def battery_ground(n_qubits: int, sector: str = "symmetric") -> np.ndarray:
    """All-qubits-ground state: k=0 Dicke vector or |g...g>; energy zero."""
    if sector == "symmetric":
        out = np.zeros(n_qubits + 1, dtype=complex)
    elif sector == "full":
        out = np.zeros(2 ** n_qubits, dtype=complex)
    else:
        raise ValueError(f"unknown sector {sector!r}")
    out[0] = 1.0
    return out
