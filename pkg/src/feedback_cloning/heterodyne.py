"""Heterodyne measurement of the reflected beam and the resulting
conditional state of the transmitted modes.

A single photon in polarization ``q`` hits a beam splitter of reflectivity R.
Projecting the reflected modes onto the (1/pi)-scaled coherent state
``|beta_H; beta_V>`` leaves the transmitted modes in::

    (1/pi) exp(-|beta|^2/2) [ sqrt(1-R) (c_H a_H^dag + c_V a_V^dag)
                              + sqrt(R) (beta_H^* c_H + beta_V^* c_V) ] |0;0>

whose squared norm is the outcome density p(beta) over the four real
quadratures ``beta_k = x_k + i y_k``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .fock import FockBasis, PolarizationQubit, TwoModeState
from .optics import SAFETY_FRACTION, Displacement, displacement_columns, displacement_matrix

# columns of the displacement matrix touched by a conditional state
CONDITIONAL_SUPPORT = [(0, 0), (1, 0), (0, 1)]


def check_reflectivity(R: float) -> float:
    R = float(R)
    if not 0.0 <= R < 1.0:
        raise ValueError(f"reflectivity must satisfy 0 <= R < 1, got {R!r}")
    return R


@dataclass(frozen=True)
class HeterodyneOutcome:
    beta_H: complex
    beta_V: complex

    def __post_init__(self):
        object.__setattr__(self, "beta_H", complex(self.beta_H))
        object.__setattr__(self, "beta_V", complex(self.beta_V))
        if not (np.isfinite(self.beta_H) and np.isfinite(self.beta_V)):
            raise ValueError("heterodyne outcome must be finite")

    @classmethod
    def from_quadratures(cls, x_H: float, y_H: float, x_V: float, y_V: float) -> "HeterodyneOutcome":
        return cls(complex(x_H, y_H), complex(x_V, y_V))

    @property
    def quadratures(self) -> tuple[float, float, float, float]:
        return (self.beta_H.real, self.beta_H.imag, self.beta_V.real, self.beta_V.imag)

    @property
    def norm_sq(self) -> float:
        return abs(self.beta_H) ** 2 + abs(self.beta_V) ** 2


@dataclass(frozen=True)
class FeedbackGain:
    """Feedback factor f; the displacement applied is ``f * beta``."""

    f: float

    def __post_init__(self):
        if not self.f >= 0:
            raise ValueError(f"feedback factor must be nonnegative, got {self.f!r}")

    def gain(self, R: float) -> float:
        """Coherent-amplitude gain ``f sqrt(R) + sqrt(1-R)``."""
        return self.f * sqrt(R) + sqrt(1.0 - R)

    @classmethod
    def from_gain(cls, g: float, R: float) -> "FeedbackGain":
        R = check_reflectivity(R)
        if R == 0.0:
            if abs(g - 1.0) > 1e-12:
                raise ValueError("at R = 0 the only attainable gain is 1")
            return cls(0.0)
        f = (g - sqrt(1.0 - R)) / sqrt(R)
        if f < 0:
            raise ValueError(f"gain {g!r} below sqrt(1-R) needs a negative feedback factor")
        return cls(f)

    @classmethod
    def optimal(cls, R: float) -> "FeedbackGain":
        R = check_reflectivity(R)
        return cls(sqrt(R / (1.0 - R)))


def _overlap(q: PolarizationQubit, beta_H, beta_V):
    return np.conj(beta_H) * q.c_H + np.conj(beta_V) * q.c_V


def outcome_density_batch(q: PolarizationQubit, R: float, beta_H, beta_V) -> np.ndarray:
    beta_H = np.asarray(beta_H, dtype=complex)
    beta_V = np.asarray(beta_V, dtype=complex)
    r2 = np.abs(beta_H) ** 2 + np.abs(beta_V) ** 2
    w = _overlap(q, beta_H, beta_V)
    return np.exp(-r2) / np.pi**2 * ((1.0 - R) + R * np.abs(w) ** 2)


def outcome_density(q: PolarizationQubit, R: float, beta: HeterodyneOutcome) -> float:
    """Probability density of the outcome over ``d x_H d y_H d x_V d y_V``."""
    R = check_reflectivity(R)
    return float(outcome_density_batch(q, R, beta.beta_H, beta.beta_V))


def conditional_coefficients(q: PolarizationQubit, R: float, beta_H, beta_V) -> np.ndarray:
    """Amplitudes on ``|0;0>, |1;0>, |0;1>`` of the unnormalized conditional state.

    Shape ``(batch, 3)``; the Gaussian and 1/pi prefactors are included.
    """
    beta_H = np.atleast_1d(np.asarray(beta_H, dtype=complex))
    beta_V = np.atleast_1d(np.asarray(beta_V, dtype=complex))
    pref = np.exp(-0.5 * (np.abs(beta_H) ** 2 + np.abs(beta_V) ** 2)) / np.pi
    t, r = sqrt(1.0 - R), sqrt(R)
    out = np.empty(beta_H.shape + (3,), dtype=complex)
    out[..., 0] = pref * r * _overlap(q, beta_H, beta_V)
    out[..., 1] = pref * t * q.c_H
    out[..., 2] = pref * t * q.c_V
    return out


def conditional_state(
    q: PolarizationQubit, R: float, beta: HeterodyneOutcome, basis: FockBasis
) -> TwoModeState:
    """Unnormalized transmitted state after outcome ``beta``; ``weight`` is p(beta)."""
    R = check_reflectivity(R)
    coeffs = conditional_coefficients(q, R, beta.beta_H, beta.beta_V)[0]
    amps = np.zeros(basis.dimension, dtype=complex)
    for c, (h, v) in zip(coeffs, CONDITIONAL_SUPPORT):
        amps[basis.index(h, v)] = c
    return TwoModeState(basis, amps, weight=outcome_density(q, R, beta))


def displaced_conditional_state(
    q: PolarizationQubit,
    R: float,
    beta: HeterodyneOutcome,
    f: float,
    basis: FockBasis,
    safety_fraction: float | None = SAFETY_FRACTION,
) -> TwoModeState:
    """Conditional state after the feedback displacement ``D(f beta)``."""
    FeedbackGain(f)
    psi = conditional_state(q, R, beta, basis)
    D = displacement_matrix(basis, Displacement(f * beta.beta_H, f * beta.beta_V), safety_fraction)
    return TwoModeState(basis, D @ psi.amplitudes, weight=psi.weight)


def displaced_conditional_batch(
    q: PolarizationQubit, R: float, f: float, beta_H, beta_V, basis: FockBasis
) -> np.ndarray:
    """Unnormalized displaced conditional amplitudes for many outcomes, shape ``(batch, dim)``.

    Only the three displacement columns reached by the conditional state are
    built, from the same closed-form matrix elements as
    :func:`displacement_matrix`. Squared norms equal p(beta) up to truncation
    leakage.
    """
    beta_H = np.atleast_1d(np.asarray(beta_H, dtype=complex))
    beta_V = np.atleast_1d(np.asarray(beta_V, dtype=complex))
    coeffs = conditional_coefficients(q, R, beta_H, beta_V)
    cols = displacement_columns(basis, f * beta_H, f * beta_V, CONDITIONAL_SUPPORT)
    out = cols[0] * coeffs[:, 0, None]
    for k in range(1, len(CONDITIONAL_SUPPORT)):
        out += cols[k] * coeffs[:, k, None]
    return out


def sample_outcomes(
    q: PolarizationQubit, R: float, rng: np.random.Generator, size: int
) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``size`` outcomes exactly from p(beta).

    p(beta) is a two-component mixture. With probability 1-R all four
    quadratures are independent N(0, 1/2). With probability R the component
    ``w = c_H^* beta_H + c_V^* beta_V`` along the input polarization has
    density proportional to ``|w|^2 exp(-|w|^2)`` (``|w|^2 ~ Gamma(2, 1)``,
    uniform phase) while the orthogonal component stays N(0, 1/2) per
    quadrature.
    """
    R = check_reflectivity(R)
    z = (rng.standard_normal((size, 2)) + 1j * rng.standard_normal((size, 2))) * sqrt(0.5)
    # z[:, 0] along q, z[:, 1] along the orthogonal polarization
    branch = rng.random(size) < R
    n_b = int(branch.sum())
    if n_b:
        radius = np.sqrt(rng.gamma(2.0, 1.0, n_b))
        phase = rng.uniform(0.0, 2.0 * np.pi, n_b)
        z[branch, 0] = radius * np.exp(1j * phase)
    u, u_perp = q.vector, q.orthogonal.vector
    beta = z[:, :1] * u[None, :] + z[:, 1:] * u_perp[None, :]
    return beta[:, 0], beta[:, 1]


def sample_outcome(q: PolarizationQubit, R: float, rng: np.random.Generator) -> HeterodyneOutcome:
    bH, bV = sample_outcomes(q, R, rng, 1)
    return HeterodyneOutcome(bH[0], bV[0])
