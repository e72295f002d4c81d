"""Linear-optics primitives: displacement, coherent and thermal states, and
a small four-mode beam splitter used as a cross-check."""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial, sqrt

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .fock import (
    DensityOperator,
    FockBasis,
    PolarizationQubit,
    TwoModeState,
    qubit_creation_op,
)

# |alpha|^2 <= SAFETY_FRACTION * cutoff keeps displaced-vacuum leakage small
SAFETY_FRACTION = 0.25


@dataclass(frozen=True)
class Displacement:
    alpha_H: complex
    alpha_V: complex

    def __post_init__(self):
        object.__setattr__(self, "alpha_H", complex(self.alpha_H))
        object.__setattr__(self, "alpha_V", complex(self.alpha_V))
        if not (np.isfinite(self.alpha_H) and np.isfinite(self.alpha_V)):
            raise ValueError("displacement amplitudes must be finite")

    @property
    def magnitude_sq(self) -> float:
        return abs(self.alpha_H) ** 2 + abs(self.alpha_V) ** 2

    def check_bound(self, cutoff_total: int, fraction: float | None = SAFETY_FRACTION) -> None:
        if fraction is None:
            return
        for a in (self.alpha_H, self.alpha_V):
            if abs(a) ** 2 > fraction * cutoff_total:
                raise ValueError(
                    f"|alpha|^2 = {abs(a) ** 2:.3g} exceeds safety bound "
                    f"{fraction} * cutoff = {fraction * cutoff_total:.3g}"
                )


@dataclass(frozen=True)
class BeamSplitterSpec:
    reflectivity: float

    def __post_init__(self):
        if not 0.0 <= self.reflectivity <= 1.0:
            raise ValueError(f"reflectivity must lie in [0, 1], got {self.reflectivity!r}")

    @property
    def t(self) -> float:
        return sqrt(1.0 - self.reflectivity)

    @property
    def r(self) -> float:
        return sqrt(self.reflectivity)


def single_mode_displacement(alpha, m, n) -> np.ndarray:
    """Closed-form ``<m|D(alpha)|n>`` (associated Laguerre), broadcasting over inputs.

    For m >= n::

        sqrt(n!/m!) alpha^(m-n) exp(-|alpha|^2/2) L_n^(m-n)(|alpha|^2)

    and the m < n case follows from ``<m|D(alpha)|n> = conj(<n|D(-alpha)|m>)``.
    """
    alpha = np.asarray(alpha, dtype=complex)
    m = np.asarray(m)
    n = np.asarray(n)
    lo = np.minimum(m, n)
    k = np.abs(m - n)
    x = np.abs(alpha) ** 2
    base = np.where(m >= n, alpha, -np.conj(alpha))
    pref = np.exp(0.5 * (gammaln(lo + 1) - gammaln(lo + k + 1)) - 0.5 * x)
    return pref * base**k * eval_genlaguerre(lo, k, x)


def _single_mode_table(alpha: complex, cutoff: int) -> np.ndarray:
    idx = np.arange(cutoff + 1)
    return single_mode_displacement(alpha, idx[:, None], idx[None, :])


def displacement_matrix(
    basis: FockBasis, d: Displacement, safety_fraction: float | None = SAFETY_FRACTION
) -> np.ndarray:
    """Two-mode ``D(alpha_H) x D(alpha_V)`` restricted to the truncated basis.

    Each retained entry is the exact matrix element of the untruncated
    operator. Raises ``ValueError`` if an amplitude exceeds the safety bound
    (pass ``safety_fraction=None`` to disable).
    """
    d.check_bound(basis.cutoff_total, safety_fraction)
    if d.alpha_H == 0 and d.alpha_V == 0:
        return np.eye(basis.dimension, dtype=complex)
    c = basis.cutoff_total
    dH = _single_mode_table(d.alpha_H, c)
    dV = _single_mode_table(d.alpha_V, c)
    return dH[np.ix_(basis.n_H, basis.n_H)] * dV[np.ix_(basis.n_V, basis.n_V)]


def displacement_columns(
    basis: FockBasis, alpha_H: np.ndarray, alpha_V: np.ndarray, columns: list[tuple[int, int]]
) -> np.ndarray:
    """Selected columns of the displacement matrix for a batch of amplitudes.

    Returns shape ``(len(columns), batch, dimension)``. No safety bound is
    applied: entries are exact, and the caller accounts for leakage.
    """
    aH = np.asarray(alpha_H, dtype=complex)[:, None]
    aV = np.asarray(alpha_V, dtype=complex)[:, None]
    m = np.arange(basis.cutoff_total + 1)[None, :]
    # single-mode columns, shape (batch, cutoff + 1), expanded onto the basis
    cache: dict = {}

    def col(a, key, n):
        if (key, n) not in cache:
            cache[key, n] = single_mode_displacement(a, m, n)
        return cache[key, n]

    out = np.empty((len(columns), aH.shape[0], basis.dimension), dtype=complex)
    for j, (nH, nV) in enumerate(columns):
        np.multiply(
            np.take(col(aH, "H", nH), basis.n_H, axis=1),
            np.take(col(aV, "V", nV), basis.n_V, axis=1),
            out=out[j],
        )
    return out


def displacement_reorder_check(
    q: PolarizationQubit, d: Displacement, cutoff: int = 14, interior: int = 8
) -> float:
    """Max residual of ``D(alpha)(A + c.alpha^*) - A D(alpha)``, ``A = c.a^dag``,
    over basis states with total photon number <= ``interior``."""
    basis = FockBasis(cutoff)
    D = displacement_matrix(basis, d, safety_fraction=None)
    A = qubit_creation_op(basis, q)
    shift = q.c_H * np.conj(d.alpha_H) + q.c_V * np.conj(d.alpha_V)
    lhs = D @ (A + shift * np.eye(basis.dimension))
    rhs = A @ D
    s = basis.upto(interior)
    return float(np.max(np.abs(lhs[s, s] - rhs[s, s])))


def column_leakage(basis: FockBasis, d: Displacement, pad: int | None = None) -> np.ndarray:
    """Norm that each basis state loses to the cutoff under displacement.

    The weight of ``D|j>`` above the cutoff is summed term by term (no
    ``1 - sum`` cancellation) out to ``pad`` extra photons per mode, default
    ``cutoff + 20``. It bounds every residual of products of truncated
    displacements, e.g. ``|(D^dag D - I)_ij| <= sqrt(l_i l_j)``.
    """
    c = basis.cutoff_total
    k = np.arange(c + 1 + (c + 20 if pad is None else pad))[:, None]
    n = np.arange(c + 1)[None, :]
    pH = np.abs(single_mode_displacement(d.alpha_H, k, n)) ** 2
    pV = np.abs(single_mode_displacement(d.alpha_V, k, n)) ** 2
    # tail_V[j, nV] = sum_{kV >= j} pV[kV, nV]
    tail_V = np.cumsum(pV[::-1], axis=0)[::-1]
    # for kH photons in H, the V mode must carry at least c + 1 - kH
    start = np.clip(c + 1 - k[:, 0], 0, None)
    above = tail_V[start]  # shape (kH, nV)
    return np.einsum("kh,kv->hv", pH, above)[basis.n_H, basis.n_V]


def interior_limit(basis: FockBasis, d: Displacement, tol: float = 1e-8) -> int:
    """Largest total photon number L with column leakage <= tol for every
    state of at most L photons (-1 if even the vacuum leaks more)."""
    leak = column_leakage(basis, d)
    L = -1
    for N in range(basis.cutoff_total + 1):
        if np.max(leak[basis.sector(N)]) > tol:
            break
        L = N
    return L


def coherent_amplitudes(basis: FockBasis, alpha_H, alpha_V) -> np.ndarray:
    """Batch coherent-state amplitudes, shape ``(batch, dimension)``."""
    aH = np.atleast_1d(np.asarray(alpha_H, dtype=complex))[:, None]
    aV = np.atleast_1d(np.asarray(alpha_V, dtype=complex))[:, None]
    nH, nV = basis.n_H[None, :], basis.n_V[None, :]
    log_norm = -0.5 * (gammaln(nH + 1) + gammaln(nV + 1))
    gauss = np.exp(-0.5 * (np.abs(aH) ** 2 + np.abs(aV) ** 2))
    return gauss * aH**nH * aV**nV * np.exp(log_norm)


def coherent_state(basis: FockBasis, alpha_H: complex, alpha_V: complex) -> TwoModeState:
    """Coherent state ``|alpha_H; alpha_V>``; its norm deficit is the truncation leakage."""
    return TwoModeState(basis, coherent_amplitudes(basis, alpha_H, alpha_V)[0])


def thermal_weights(n: np.ndarray, mean: float) -> np.ndarray:
    """Geometric photon-number distribution ``mean^n / (1 + mean)^(n+1)``."""
    n = np.asarray(n)
    return np.exp(n * np.log(mean) - (n + 1) * np.log1p(mean)) if mean > 0 else (n == 0).astype(float)


def thermal_state(basis: FockBasis, mean_photons_per_mode: float, renormalize: bool = True) -> DensityOperator:
    """Product of two single-mode thermal states, diagonal in photon number.

    The mass lost to truncation is stored on ``leakage``. With
    ``renormalize=False`` the retained entries keep their exact untruncated
    values.
    """
    mean = float(mean_photons_per_mode)
    if not mean >= 0:
        raise ValueError("mean photon number must be nonnegative")
    w = thermal_weights(basis.n_H, mean) * thermal_weights(basis.n_V, mean)
    leakage = max(0.0, 1.0 - float(w.sum()))
    if renormalize:
        w = w / w.sum()
    return DensityOperator(basis, np.diag(w.astype(complex)), normalized=renormalize, leakage=leakage)


# ---------------------------------------------------------------------------
# four-mode beam splitter oracle

ORACLE_MAX_PHOTONS = 2
FOUR_MODES = ("aH", "aV", "bH", "bV")


@dataclass(frozen=True)
class FourModeState:
    """Amplitudes indexed ``[n_aH, n_aV, n_bH, n_bV]``, at most two photons in total.

    ``a`` are the transmitted modes, ``b`` the reflected ones.
    """

    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex)
        shape = (ORACLE_MAX_PHOTONS + 1,) * 4
        if a.shape != shape:
            raise ValueError(f"four-mode amplitudes must have shape {shape}")
        tot = np.indices(shape).sum(axis=0)
        if np.any(a[tot > ORACLE_MAX_PHOTONS] != 0):
            raise ValueError(f"oracle accepts at most {ORACLE_MAX_PHOTONS} photons in total")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def from_dict(cls, terms: dict[tuple[int, int, int, int], complex]) -> "FourModeState":
        a = np.zeros((ORACLE_MAX_PHOTONS + 1,) * 4, dtype=complex)
        for occ, amp in terms.items():
            if sum(occ) > ORACLE_MAX_PHOTONS:
                raise ValueError(f"oracle accepts at most {ORACLE_MAX_PHOTONS} photons in total")
            a[occ] = amp
        return cls(a)

    @property
    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def nonzero(self, tol: float = 0.0) -> dict[tuple[int, ...], complex]:
        return {
            tuple(int(i) for i in idx): complex(self.amplitudes[idx])
            for idx in zip(*np.nonzero(np.abs(self.amplitudes) > tol))
        }


def _poly_mul(poly: dict, linear: dict) -> dict:
    out: dict = {}
    for mono, c in poly.items():
        for mode, coeff in linear.items():
            e = list(mono)
            e[mode] += 1
            key = tuple(e)
            out[key] = out.get(key, 0) + c * coeff
    return out


def beam_splitter_oracle(state: FourModeState, R: float) -> FourModeState:
    """Apply the polarization-independent beam splitter of reflectivity R.

    Each creation operator of the input's polynomial representation is
    substituted, ``a^dag -> sqrt(1-R) a^dag + sqrt(R) b^dag`` and
    ``b^dag -> sqrt(1-R) b^dag - sqrt(R) a^dag``, and the result re-expanded.
    """
    bs = BeamSplitterSpec(R)
    t, r = bs.t, bs.r
    # mode order aH, aV, bH, bV
    subs = {
        0: {0: t, 2: r},
        1: {1: t, 3: r},
        2: {2: t, 0: -r},
        3: {3: t, 1: -r},
    }
    result: dict = {}
    for occ, amp in state.nonzero().items():
        poly = {(0, 0, 0, 0): amp / sqrt(np.prod([factorial(k) for k in occ]))}
        for mode, k in enumerate(occ):
            for _ in range(k):
                poly = _poly_mul(poly, subs[mode])
        for mono, c in poly.items():
            result[mono] = result.get(mono, 0) + c * sqrt(np.prod([factorial(k) for k in mono]))
    return FourModeState.from_dict(result)


def project_reflected_coherent(state: FourModeState, beta_H: complex, beta_V: complex) -> np.ndarray:
    """``(1/pi) <beta_H; beta_V|_b state``, returned as a 3x3 array over the a modes."""
    k = np.arange(ORACLE_MAX_PHOTONS + 1)
    fact = np.array([sqrt(factorial(int(i))) for i in k])
    bra_H = np.exp(-abs(beta_H) ** 2 / 2) * np.conj(beta_H) ** k / fact
    bra_V = np.exp(-abs(beta_V) ** 2 / 2) * np.conj(beta_V) ** k / fact
    return np.einsum("ijkl,k,l->ij", state.amplitudes, bra_H, bra_V) / np.pi


def four_mode_photon_numbers() -> np.ndarray:
    shape = (ORACLE_MAX_PHOTONS + 1,) * 4
    return np.indices(shape).sum(axis=0)


__all__ = [
    "BeamSplitterSpec",
    "Displacement",
    "FourModeState",
    "beam_splitter_oracle",
    "coherent_amplitudes",
    "coherent_state",
    "column_leakage",
    "interior_limit",
    "displacement_columns",
    "displacement_matrix",
    "displacement_reorder_check",
    "project_reflected_coherent",
    "single_mode_displacement",
    "thermal_state",
    "thermal_weights",
]
