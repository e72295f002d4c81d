"""Truncated two-mode (H/V polarization) Fock space.

Basis states ``|n_H; n_V>`` are kept up to a total photon number
``cutoff_total``. States are ordered by total-photon sector, and within a
sector by decreasing ``n_H``::

    |0;0>, |1;0>, |0;1>, |2;0>, |1;1>, |0;2>, ...

so every fixed-N sector is a contiguous block of the flat index.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Literal

import numpy as np

Mode = Literal["H", "V"]

STRUCT_TOL = 1e-12
SPECTRAL_TOL = 1e-10


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FockBasis:
    """Two-mode basis with total photon number ``n_H + n_V <= cutoff_total``."""

    cutoff_total: int

    def __post_init__(self):
        if int(self.cutoff_total) != self.cutoff_total or self.cutoff_total < 1:
            raise ValueError(f"cutoff_total must be an integer >= 1, got {self.cutoff_total!r}")

    @property
    def dimension(self) -> int:
        c = self.cutoff_total
        return (c + 1) * (c + 2) // 2

    @cached_property
    def states(self) -> tuple[tuple[int, int], ...]:
        return tuple(
            (N - k, k) for N in range(self.cutoff_total + 1) for k in range(N + 1)
        )

    @cached_property
    def n_H(self) -> np.ndarray:
        return np.array([s[0] for s in self.states])

    @cached_property
    def n_V(self) -> np.ndarray:
        return np.array([s[1] for s in self.states])

    @property
    def total(self) -> np.ndarray:
        return self.n_H + self.n_V

    def index(self, n_H: int, n_V: int) -> int:
        N = n_H + n_V
        if n_H < 0 or n_V < 0 or N > self.cutoff_total:
            raise IndexError(f"|{n_H};{n_V}> is outside the basis")
        return N * (N + 1) // 2 + n_V

    def pair(self, idx: int) -> tuple[int, int]:
        return self.states[idx]

    def sector(self, N: int) -> slice:
        """Flat-index slice of the N-photon sector."""
        if not 0 <= N <= self.cutoff_total:
            raise ValueError(f"sector N={N} outside 0..{self.cutoff_total}")
        start = N * (N + 1) // 2
        return slice(start, start + N + 1)

    def upto(self, N: int) -> slice:
        """Flat-index slice of all sectors with total photon number <= N."""
        N = min(N, self.cutoff_total)
        return slice(0, (N + 1) * (N + 2) // 2)

    def basis_vector(self, n_H: int, n_V: int) -> np.ndarray:
        v = np.zeros(self.dimension, dtype=complex)
        v[self.index(n_H, n_V)] = 1.0
        return v


def make_basis(cutoff_total: int) -> FockBasis:
    return FockBasis(cutoff_total)


@dataclass(frozen=True)
class PolarizationQubit:
    """Single-photon polarization ``c_H a_H^dag |0;0> + c_V a_V^dag |0;0>``."""

    c_H: complex
    c_V: complex

    def __post_init__(self):
        object.__setattr__(self, "c_H", complex(self.c_H))
        object.__setattr__(self, "c_V", complex(self.c_V))
        norm = abs(self.c_H) ** 2 + abs(self.c_V) ** 2
        if not np.isfinite(norm) or abs(norm - 1.0) > STRUCT_TOL:
            raise ValueError(f"qubit amplitudes must have unit norm, got |c|^2 = {norm!r}")

    @classmethod
    def from_angles(cls, theta: float, phi: float = 0.0) -> "PolarizationQubit":
        """Bloch-sphere angles: ``cos(theta/2)|H> + e^{i phi} sin(theta/2)|V>``."""
        return cls(np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.c_H, self.c_V])

    @property
    def orthogonal(self) -> "PolarizationQubit":
        return PolarizationQubit(-np.conj(self.c_V), np.conj(self.c_H))

    def rotated(self, U: np.ndarray) -> "PolarizationQubit":
        c = np.asarray(U) @ self.vector
        c = c / np.linalg.norm(c)
        return PolarizationQubit(c[0], c[1])

    def aligning_unitary(self) -> np.ndarray:
        """2x2 unitary taking this polarization to H (and its orthogonal to V)."""
        return np.array(
            [[np.conj(self.c_H), np.conj(self.c_V)], [-self.c_V, self.c_H]]
        )


@dataclass(frozen=True)
class TwoModeState:
    """Amplitude vector over a :class:`FockBasis`.

    ``weight`` carries an outcome probability for unnormalized conditional
    states; for ordinary states it is 1.
    """

    basis: FockBasis
    amplitudes: np.ndarray
    weight: float = 1.0
    normalized: bool = False

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.shape != (self.basis.dimension,):
            raise ValueError(
                f"amplitude vector has shape {amps.shape}, basis needs ({self.basis.dimension},)"
            )
        object.__setattr__(self, "amplitudes", amps)
        if not self.weight >= 0:
            raise ValueError("weight must be nonnegative")
        if self.normalized and abs(self.norm_sq - 1.0) > STRUCT_TOL:
            raise ValueError(f"state flagged normalized has norm^2 {self.norm_sq!r}")

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def normalize(self) -> "TwoModeState":
        n = np.sqrt(self.norm_sq)
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return TwoModeState(self.basis, self.amplitudes / n, self.weight, normalized=True)

    def amplitude(self, n_H: int, n_V: int) -> complex:
        return complex(self.amplitudes[self.basis.index(n_H, n_V)])

    def projector(self) -> "DensityOperator":
        v = self.amplitudes
        return DensityOperator(self.basis, np.outer(v, v.conj()))


@dataclass(frozen=True)
class DensityOperator:
    """Density matrix over a :class:`FockBasis`.

    ``leakage`` records probability mass known to be lost to truncation.
    """

    basis: FockBasis
    matrix: np.ndarray
    normalized: bool = False
    leakage: float = 0.0

    def __post_init__(self):
        m = _frozen(self.matrix)
        d = self.basis.dimension
        if m.shape != (d, d):
            raise ValueError(f"matrix has shape {m.shape}, basis needs ({d}, {d})")
        object.__setattr__(self, "matrix", m)
        if self.normalized:
            self.check()

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def check(self, normalized: bool | None = None) -> None:
        """Raise ``ValueError`` unless Hermitian, positive and (optionally) unit trace."""
        m = self.matrix
        herm = np.max(np.abs(m - m.conj().T), initial=0.0)
        if herm > STRUCT_TOL:
            raise ValueError(f"not Hermitian: max |rho - rho^dag| = {herm:.3e}")
        lo = np.linalg.eigvalsh(m).min()
        if lo < -SPECTRAL_TOL:
            raise ValueError(f"not positive: min eigenvalue {lo:.3e}")
        if normalized is None:
            normalized = self.normalized
        if normalized and abs(np.trace(m) - 1.0) > SPECTRAL_TOL:
            raise ValueError(f"trace {np.trace(m)!r} != 1")

    def normalize(self) -> "DensityOperator":
        t = self.trace
        if t <= 0:
            raise ValueError("cannot normalize an operator with nonpositive trace")
        return DensityOperator(self.basis, self.matrix / t, normalized=True)

    def expectation(self, op: np.ndarray) -> complex:
        return complex(np.trace(self.matrix @ op))

    def sector_block(self, N: int) -> np.ndarray:
        s = self.basis.sector(N)
        return np.array(self.matrix[s, s])

    def restricted(self, N_max: int) -> np.ndarray:
        """Sub-matrix over all sectors with total photon number <= N_max."""
        s = self.basis.upto(N_max)
        return np.array(self.matrix[s, s])

    def transformed(self, W: np.ndarray) -> "DensityOperator":
        return DensityOperator(self.basis, W @ self.matrix @ W.conj().T)

    @classmethod
    def pure(cls, state: TwoModeState) -> "DensityOperator":
        return state.projector()


def creation_op(basis: FockBasis, mode: Mode) -> np.ndarray:
    """Matrix of a_H^dag or a_V^dag; amplitudes pushed past the cutoff are dropped."""
    d = basis.dimension
    op = np.zeros((d, d), dtype=complex)
    for j, (h, v) in enumerate(basis.states):
        if h + v == basis.cutoff_total:
            continue
        if mode == "H":
            op[basis.index(h + 1, v), j] = np.sqrt(h + 1)
        elif mode == "V":
            op[basis.index(h, v + 1), j] = np.sqrt(v + 1)
        else:
            raise ValueError(f"mode must be 'H' or 'V', got {mode!r}")
    return op


def annihilation_op(basis: FockBasis, mode: Mode) -> np.ndarray:
    return creation_op(basis, mode).conj().T


def number_op(basis: FockBasis, mode: Mode) -> np.ndarray:
    n = basis.n_H if mode == "H" else basis.n_V
    return np.diag(n.astype(complex))


def total_number_op(basis: FockBasis) -> np.ndarray:
    return np.diag(basis.total.astype(complex))


def qubit_creation_op(basis: FockBasis, q: PolarizationQubit) -> np.ndarray:
    """``c_H a_H^dag + c_V a_V^dag``: creates one photon in polarization q."""
    return q.c_H * creation_op(basis, "H") + q.c_V * creation_op(basis, "V")


def polarization_number_op(basis: FockBasis, q: PolarizationQubit) -> np.ndarray:
    """Number of photons in polarization q, ``b^dag b`` with ``b^dag = c.a^dag``."""
    b_dag = qubit_creation_op(basis, q)
    # b^dag b conserves photon number, so the truncated product is exact
    return b_dag @ b_dag.conj().T


def polarization_rotation(basis: FockBasis, U: np.ndarray) -> np.ndarray:
    """Fock-space unitary W with ``W a_i^dag W^dag = sum_j U[j, i] a_j^dag``.

    Built as the exponential of the number-conserving generator, which is
    closed on the truncated basis, so the result is exact.
    """
    from scipy.linalg import expm, schur

    U = np.asarray(U, dtype=complex)
    if np.max(np.abs(U.conj().T @ U - np.eye(2))) > 1e-10:
        raise ValueError("polarization transformation must be unitary")
    T, Z = schur(U, output="complex")
    # U = exp(-i h) with h Hermitian
    h = Z @ np.diag(-np.angle(np.diag(T))) @ Z.conj().T
    ad = [creation_op(basis, "H"), creation_op(basis, "V")]
    gen = sum(h[j, k] * ad[j] @ ad[k].conj().T for j in range(2) for k in range(2))
    return expm(-1j * gen)


def apply_creation_superposition(q: PolarizationQubit, rho: DensityOperator) -> DensityOperator:
    """Return the unnormalized ``A rho A^dag`` with ``A = c_H a_H^dag + c_V a_V^dag``."""
    A = qubit_creation_op(rho.basis, q)
    return DensityOperator(rho.basis, A @ rho.matrix @ A.conj().T)


def project_total_N(rho: DensityOperator, N: int) -> tuple[float, DensityOperator]:
    """Weight of the N-photon sector and the renormalized sector block.

    Cross-sector coherences are discarded. The returned block lives on the
    full basis with zeros outside the sector; a sector without support gives
    weight 0 and an all-zero block.
    """
    basis = rho.basis
    s = basis.sector(N)
    block = np.zeros_like(rho.matrix)
    block[s, s] = rho.matrix[s, s]
    weight = float(np.trace(block).real)
    if weight <= 0.0:
        return 0.0, DensityOperator(basis, np.zeros_like(block))
    return weight, DensityOperator(basis, block / weight, normalized=True)


def sector_weights(rho: DensityOperator) -> np.ndarray:
    """Diagonal mass of each total-photon sector, indexed by N."""
    diag = np.diag(rho.matrix).real
    return np.bincount(rho.basis.total, weights=diag, minlength=rho.basis.cutoff_total + 1)


def _same_basis(a: FockBasis, b: FockBasis) -> None:
    if a != b:
        raise ValueError(f"basis mismatch: cutoff {a.cutoff_total} vs {b.cutoff_total}")


def trace_distance(rho1: DensityOperator, rho2: DensityOperator, N_max: int | None = None) -> float:
    """Half the trace norm of ``rho1 - rho2``, optionally restricted to sectors <= N_max."""
    _same_basis(rho1.basis, rho2.basis)
    diff = rho1.matrix - rho2.matrix
    if N_max is not None:
        s = rho1.basis.upto(N_max)
        diff = diff[s, s]
    return 0.5 * float(np.sum(np.linalg.svd(diff, compute_uv=False)))


def fidelity_overlap(rho: DensityOperator, psi: TwoModeState) -> float:
    """``<psi|rho|psi>`` for a state vector on the same basis."""
    _same_basis(rho.basis, psi.basis)
    v = psi.amplitudes
    return float(np.vdot(v, rho.matrix @ v).real)
