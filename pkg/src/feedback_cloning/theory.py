"""Closed-form results for feedback cloning of a polarization qubit.

Nothing here calls into :mod:`feedback_cloning.engine`; the engine's numerical
integration is checked against these formulas.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from math import sqrt

import numpy as np

from .fock import (
    DensityOperator,
    FockBasis,
    PolarizationQubit,
    apply_creation_superposition,
)
from .heterodyne import check_reflectivity
from .optics import thermal_state


def optimal_feedback(R: float) -> tuple[float, float]:
    """Feedback factor ``f_R = sqrt(R/(1-R))`` and gain ``g_R = 1/sqrt(1-R)``."""
    if R == 1.0:
        raise ValueError("R = 1 transmits nothing; the optimal feedback diverges")
    R = check_reflectivity(R)
    return sqrt(R / (1.0 - R)), 1.0 / sqrt(1.0 - R)


def analytic_output(q: PolarizationQubit, R: float, basis: FockBasis) -> DensityOperator:
    """``(1-R) A eta_R A^dag`` with ``A = c_H a_H^dag + c_V a_V^dag`` and eta_R
    thermal with ``R/(1-R)`` photons per mode.

    The thermal core is not renormalized after truncation, so every retained
    sector carries its exact weight and the trace falls short of 1 by the
    leakage.
    """
    R = check_reflectivity(R)
    eta = thermal_state(basis, R / (1.0 - R), renormalize=False)
    out = apply_creation_superposition(q, eta)
    m = (1.0 - R) * out.matrix
    return DensityOperator(basis, m, leakage=max(0.0, 1.0 - float(np.trace(m).real)))


def prob_N(R: float, N: int) -> float:
    """Probability ``(1-R)^3/(2R) R^N N(N+1)`` of an N-photon output."""
    R = check_reflectivity(R)
    if N < 1:
        return 0.0
    if R == 0.0:
        return 1.0 if N == 1 else 0.0
    return (1.0 - R) ** 3 / 2.0 * R ** (N - 1) * N * (N + 1)


@dataclass(frozen=True)
class UnpolarizedOperator:
    """Trace-one unpolarized (N-1)-photon operator plus the raw coefficient
    ``2/(N(N+1))`` under which ``A C A^dag`` has unit trace."""

    N: int
    operator: DensityOperator
    raw_coefficient: float


def C_N_operator(N: int, basis: FockBasis) -> UnpolarizedOperator:
    """Uniform mixture over the N states with N-1 photons."""
    if not 1 <= N <= basis.cutoff_total + 1:
        raise ValueError(f"N={N} outside 1..{basis.cutoff_total + 1}")
    diag = np.zeros(basis.dimension)
    diag[basis.sector(N - 1)] = 1.0 / N
    return UnpolarizedOperator(
        N=N,
        operator=DensityOperator(basis, np.diag(diag.astype(complex)), normalized=True),
        raw_coefficient=2.0 / (N * (N + 1)),
    )


def rho_N(q: PolarizationQubit, N: int, basis: FockBasis) -> DensityOperator:
    """Normalized N-photon clone state ``A C_N A^dag``."""
    if not 1 <= N <= basis.cutoff_total:
        raise ValueError(f"N={N} outside 1..{basis.cutoff_total}")
    c = C_N_operator(N, basis)
    return apply_creation_superposition(q, c.operator).normalize()


def prob_n_given_N(n: int, N: int) -> float:
    """Probability ``2n/(N(N+1))`` of n photons in the input polarization."""
    if not 1 <= n <= N:
        raise ValueError(f"need 1 <= n <= N, got n={n}, N={N}")
    return 2.0 * n / (N * (N + 1))


def optimal_fidelity(N: int) -> float:
    if N < 1:
        raise ValueError("N must be >= 1")
    return (2.0 * N + 1.0) / (3.0 * N)


def fidelity_from_distribution(N: int) -> float:
    """Mean fraction ``sum_n P(n|N) n/N`` of correctly polarized photons."""
    return sum(prob_n_given_N(n, N) * n / N for n in range(1, N + 1))


def white_noise_mix(
    q: PolarizationQubit, N: int, eps: float, basis: FockBasis
) -> tuple[DensityOperator, float]:
    """``(1-eps) rho_N + eps C_{N+1}`` and its fidelity ``(1-eps) F_N + eps/2``."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps must lie in [0, 1], got {eps!r}")
    noise = C_N_operator(N + 1, basis).operator
    mixed = (1.0 - eps) * rho_N(q, N, basis).matrix + eps * noise.matrix
    return DensityOperator(basis, mixed, normalized=True), (1.0 - eps) * optimal_fidelity(N) + eps * 0.5


@dataclass
class CloneRecord:
    """Statistics of the N-photon output; ``p_n_given_N[n]`` for n = 0..N."""

    N: int
    p_N: float
    p_n_given_N: list[float]
    fidelity: float
    p_N_stderr: float | None = None
    fidelity_stderr: float | None = None


@dataclass
class CloneReport:
    """Per-N clone statistics for one (R, gain) setting.

    ``leakage`` is the probability mass outside the reported sectors
    (including any lost to the Fock cutoff), so that
    ``sum(p_N) + leakage == 1``.
    """

    R: float
    gain: float
    records: list[CloneRecord]
    leakage: float
    provenance: dict
    diagnostics: dict = field(default_factory=dict)

    def record(self, N: int) -> CloneRecord:
        for r in self.records:
            if r.N == N:
                return r
        raise KeyError(N)

    def to_dict(self) -> dict:
        return asdict(self)


def analytic_report(R: float, N_max: int) -> CloneReport:
    """Closed-form report for N = 1..N_max (only N = 1 when R = 0)."""
    R = check_reflectivity(R)
    if N_max < 1:
        raise ValueError("empty N range")
    Ns = [1] if R == 0.0 else range(1, N_max + 1)
    records = [
        CloneRecord(
            N=N,
            p_N=prob_N(R, N),
            p_n_given_N=[0.0] + [prob_n_given_N(n, N) for n in range(1, N + 1)],
            fidelity=optimal_fidelity(N),
        )
        for N in Ns
    ]
    return CloneReport(
        R=R,
        gain=optimal_feedback(R)[1],
        records=records,
        leakage=1.0 - sum(r.p_N for r in records),
        provenance={"method": "analytic"},
    )
