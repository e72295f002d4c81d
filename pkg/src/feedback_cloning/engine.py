"""Numerical reproduction of the feedback-cloning pipeline.

The output state is the outcome average of the displaced conditional states.
Two integrators evaluate it:

* ``gauss-hermite``: a tensor grid over the four real quadratures. Every
  matrix element of the integrand is a Gaussian ``exp(-(1+f^2)|beta|^2)`` times
  a polynomial, so nodes scaled to that width give exact sector blocks once
  the order is high enough.
* ``monte-carlo``: exact sampling from p(beta), averaging normalized
  displaced states. Work is split into a fixed number of batches, each with
  its own child seed, and reduced in batch order; results therefore do not
  depend on the number of worker processes.
"""
from __future__ import annotations

import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from math import sqrt
from multiprocessing import get_context

import numpy as np
from numpy.polynomial.hermite import hermgauss

from .fock import (
    DensityOperator,
    FockBasis,
    PolarizationQubit,
    polarization_number_op,
    polarization_rotation,
    project_total_N,
    sector_weights,
)
from .heterodyne import (
    FeedbackGain,
    check_reflectivity,
    displaced_conditional_batch,
    outcome_density_batch,
    sample_outcomes,
)
from .theory import CloneRecord, CloneReport, analytic_report

log = logging.getLogger(__name__)

INTEGRATORS = ("gauss-hermite", "monte-carlo", "analytic")
MIN_BATCHES = 20
MC_CHUNK = 20_000


@dataclass(frozen=True)
class ExperimentConfig:
    R: float
    qubit: PolarizationQubit = PolarizationQubit(1.0, 0.0)
    cutoff: int = 12
    n_max: int = 4
    gain: float | None = None
    feedback: float | None = None
    integrator: str = "gauss-hermite"
    points: int | None = None
    samples: int = 100_000
    seed: int = 0
    workers: int = 1
    batches: int = MIN_BATCHES
    gains: tuple[float, ...] | None = None
    R_values: tuple[float, ...] | None = None
    check_order: bool = False

    def __post_init__(self):
        check_reflectivity(self.R)
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        if self.n_max < 1:
            raise ValueError("empty N range: n_max must be >= 1")
        if self.cutoff < self.n_max + 2:
            raise ValueError(f"cutoff {self.cutoff} must be >= n_max + 2 = {self.n_max + 2}")
        if self.gain is not None and self.feedback is not None:
            raise ValueError("give either gain or feedback, not both")
        if self.points is not None and self.points < 2:
            raise ValueError("quadrature needs at least 2 points per dimension")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.batches < MIN_BATCHES:
            raise ValueError(f"batches must be >= {MIN_BATCHES}")
        if self.integrator == "monte-carlo" and self.samples < self.batches:
            raise ValueError("samples must be at least the number of batches")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.gains is not None:
            g = list(self.gains)
            if not g or any(b <= a for a, b in zip(g, g[1:])):
                raise ValueError("gains must be a nonempty, strictly increasing list")
        if self.R_values is not None:
            if not self.R_values:
                raise ValueError("R_values must be nonempty")
            for r in self.R_values:
                check_reflectivity(r)
        self.feedback_factor  # validates gain

    @property
    def feedback_factor(self) -> float:
        if self.feedback is not None:
            return FeedbackGain(self.feedback).f
        if self.gain is not None:
            return FeedbackGain.from_gain(self.gain, self.R).f
        return FeedbackGain.optimal(self.R).f

    @property
    def effective_gain(self) -> float:
        return FeedbackGain(self.feedback_factor).gain(self.R)

    @property
    def quadrature_points(self) -> int:
        return self.points if self.points is not None else 2 * self.n_max + 6

    @property
    def basis(self) -> FockBasis:
        return FockBasis(self.cutoff)


# ---------------------------------------------------------------------------
# fidelity and clone statistics of an accumulated state


def measure_fidelity(rho: DensityOperator, q: PolarizationQubit, N: int) -> float:
    """Mean fraction of photons in polarization q within the N-photon sector."""
    if N < 1:
        raise ValueError("N must be >= 1")
    weight, block = project_total_N(rho, N)
    if weight <= 0.0:
        raise ValueError(f"sector N={N} has zero weight")
    n_q = polarization_number_op(rho.basis, q)
    return float(np.trace(block.matrix @ n_q).real) / N


def aligned_distribution(rho: DensityOperator, q: PolarizationQubit, N: int) -> np.ndarray:
    """``P(n | N)`` for n = 0..N photons in polarization q.

    The sector is rotated so that q becomes H and the diagonal read off.
    """
    weight, block = project_total_N(rho, N)
    if weight <= 0.0:
        raise ValueError(f"sector N={N} has zero weight")
    W = polarization_rotation(rho.basis, q.aligning_unitary())
    diag = np.diag(block.transformed(W).sector_block(N)).real
    # within a sector n_H runs N, N-1, ..., 0
    return diag[::-1].copy()


# ---------------------------------------------------------------------------
# integrators


def _outer_sum(X: np.ndarray) -> np.ndarray:
    return X.T @ X.conj()


def _quadrature_chunk(args) -> np.ndarray:
    q, R, f, basis, nodes, weights, i = args
    s = sqrt(1.0 + f * f)
    t = nodes
    # quadrature order: x_H fixed per chunk, then y_H, x_V, y_V
    xH = np.full(t.size**3, t[i])
    yH, xV, yV = (a.ravel() for a in np.meshgrid(t, t, t, indexing="ij"))
    wt = weights[i] * np.einsum("a,b,c->abc", weights, weights, weights).ravel()
    gauss = np.exp(t[i] ** 2 + yH**2 + xV**2 + yV**2)
    bH = (xH + 1j * yH) / s
    bV = (xV + 1j * yV) / s
    amps = displaced_conditional_batch(q, R, f, bH, bV, basis)
    X = amps * np.sqrt(wt * gauss / s**4)[:, None]
    return _outer_sum(X)


def _map(fn, tasks, workers: int):
    if workers == 1 or len(tasks) == 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers, mp_context=get_context("spawn")) as ex:
        return list(ex.map(fn, tasks))


def integrate_quadrature(
    q: PolarizationQubit, R: float, f: float, basis: FockBasis, points: int, workers: int = 1
) -> np.ndarray:
    """Gauss-Hermite estimate of the outcome-averaged output matrix."""
    nodes, weights = hermgauss(points)
    tasks = [(q, R, f, basis, nodes, weights, i) for i in range(points)]
    parts = _map(_quadrature_chunk, tasks, workers)
    total = np.zeros((basis.dimension, basis.dimension), dtype=complex)
    for p in parts:
        total += p
    return 0.5 * (total + total.conj().T)


def _mc_batch(args) -> np.ndarray:
    q, R, f, basis, seed_seq, n = args
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    total = np.zeros((basis.dimension, basis.dimension), dtype=complex)
    done = 0
    while done < n:
        m = min(MC_CHUNK, n - done)
        bH, bV = sample_outcomes(q, R, rng, m)
        amps = displaced_conditional_batch(q, R, f, bH, bV, basis)
        # the displacement is unitary, so p(beta) is the exact untruncated norm
        amps /= np.sqrt(outcome_density_batch(q, R, bH, bV))[:, None]
        total += _outer_sum(amps)
        done += m
    return total


def batch_sizes(samples: int, batches: int) -> list[int]:
    base, extra = divmod(samples, batches)
    return [base + (1 if i < extra else 0) for i in range(batches)]


@dataclass
class MonteCarloResult:
    rho: DensityOperator
    batch_rhos: list[np.ndarray]
    entry_stderr: np.ndarray
    samples: int
    seed: int


def integrate_monte_carlo(
    q: PolarizationQubit,
    R: float,
    f: float,
    basis: FockBasis,
    samples: int,
    seed: int,
    batches: int = MIN_BATCHES,
    workers: int = 1,
) -> MonteCarloResult:
    sizes = batch_sizes(samples, batches)
    children = np.random.SeedSequence(seed).spawn(batches)
    tasks = [(q, R, f, basis, ss, n) for ss, n in zip(children, sizes)]
    sums = _map(_mc_batch, tasks, workers)
    total = np.zeros((basis.dimension, basis.dimension), dtype=complex)
    for s in sums:
        total += s
    batch_rhos = [s / n for s, n in zip(sums, sizes)]
    stack = np.stack(batch_rhos)
    stderr = (stack.real.std(axis=0, ddof=1) + 1j * stack.imag.std(axis=0, ddof=1)) / sqrt(batches)
    rho = total / samples
    rho = 0.5 * (rho + rho.conj().T)
    return MonteCarloResult(DensityOperator(basis, rho), batch_rhos, stderr, samples, seed)


# ---------------------------------------------------------------------------
# pipelines


def _records(rho: DensityOperator, q: PolarizationQubit, n_max: int) -> list[CloneRecord]:
    weights = sector_weights(rho)
    records = []
    for N in range(1, n_max + 1):
        p_N = float(weights[N])
        if p_N <= 0.0:
            records.append(CloneRecord(N, p_N, [float("nan")] * (N + 1), float("nan")))
            continue
        dist = aligned_distribution(rho, q, N)
        records.append(
            CloneRecord(N, p_N, [float(x) for x in dist], measure_fidelity(rho, q, N))
        )
    return records


def _sector_stats(matrix: np.ndarray, q: PolarizationQubit, basis: FockBasis, n_max: int):
    rho = DensityOperator(basis, 0.5 * (matrix + matrix.conj().T))
    w = sector_weights(rho)
    fid = []
    for N in range(1, n_max + 1):
        fid.append(measure_fidelity(rho, q, N) if w[N] > 0 else np.nan)
    return w[1 : n_max + 1], np.array(fid)


def accumulate_output(config: ExperimentConfig) -> tuple[DensityOperator, CloneReport]:
    """Outcome-averaged output state and its clone report."""
    q, R, f, basis = config.qubit, config.R, config.feedback_factor, config.basis
    diagnostics: dict = {"cutoff": config.cutoff}
    if config.integrator == "gauss-hermite":
        n = config.quadrature_points
        if n < config.n_max + 2:
            msg = (
                f"{n} Gauss-Hermite points per dimension are not exact beyond sector "
                f"{n - 2}; requested n_max={config.n_max}"
            )
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            diagnostics["order_warning"] = msg
        matrix = integrate_quadrature(q, R, f, basis, n, config.workers)
        provenance = {"method": "quadrature", "order": n}
        if config.check_order:
            doubled = integrate_quadrature(q, R, f, basis, 2 * n, config.workers)
            s = basis.upto(config.n_max)
            diagnostics["order_doubling_max_diff"] = float(np.max(np.abs(doubled[s, s] - matrix[s, s])))
        rho = DensityOperator(basis, matrix)
        records = _records(rho, q, config.n_max)
    elif config.integrator == "monte-carlo":
        mc = integrate_monte_carlo(
            q, R, f, basis, config.samples, config.seed, config.batches, config.workers
        )
        rho = mc.rho
        records = _records(rho, q, config.n_max)
        stats = [_sector_stats(b, q, basis, config.n_max) for b in mc.batch_rhos]
        pN = np.array([s[0] for s in stats])
        fid = np.array([s[1] for s in stats])
        B = len(stats)
        for k, rec in enumerate(records):
            rec.p_N_stderr = float(pN[:, k].std(ddof=1) / sqrt(B))
            rec.fidelity_stderr = float(np.nanstd(fid[:, k], ddof=1) / sqrt(B))
        provenance = {
            "method": "monte-carlo",
            "samples": config.samples,
            "seed": config.seed,
            "batches": config.batches,
        }
        diagnostics["max_entry_stderr"] = float(np.max(np.abs(mc.entry_stderr)))
    else:
        raise ValueError("accumulate_output needs a numerical integrator")
    trace = rho.trace
    diagnostics["trace_leakage"] = 1.0 - trace
    diagnostics["vacuum_weight"] = float(rho.matrix[0, 0].real)
    rho = replace(rho, leakage=max(0.0, 1.0 - trace))
    report = CloneReport(
        R=R,
        gain=config.effective_gain,
        records=records,
        leakage=1.0 - sum(r.p_N for r in records),
        provenance=provenance,
        diagnostics=diagnostics,
    )
    return rho, report


@dataclass
class SweepPoint:
    gain: float
    R: float
    fidelity: dict[int, float]
    p_N: dict[int, float]
    fidelity_proxy: float
    stderr: dict[int, float] | None = None


@dataclass
class SweepResult:
    parameter: str
    points: list[SweepPoint]
    argmax: dict[int, float] = field(default_factory=dict)

    @property
    def gains(self) -> list[float]:
        return [p.gain for p in self.points]


def _sweep_point(cfg: ExperimentConfig) -> SweepPoint:
    _, report = accumulate_output(cfg)
    fid = {r.N: r.fidelity for r in report.records}
    pN = {r.N: r.p_N for r in report.records}
    mass = sum(pN.values())
    proxy = sum(pN[N] * fid[N] for N in fid if np.isfinite(fid[N])) / mass if mass > 0 else float("nan")
    stderr = None
    if cfg.integrator == "monte-carlo":
        stderr = {r.N: r.fidelity_stderr for r in report.records}
    return SweepPoint(report.gain, cfg.R, fid, pN, proxy, stderr)


def gain_sweep(config: ExperimentConfig) -> SweepResult:
    """Per-N fidelity over ``config.gains`` (feedback factor recomputed per gain),
    or over ``config.R_values`` at each R's optimal gain."""
    if config.gains is not None:
        points = [_sweep_point(replace(config, gain=g, feedback=None, gains=None)) for g in config.gains]
        argmax = {}
        for N in range(1, config.n_max + 1):
            vals = [p.fidelity[N] for p in points]
            argmax[N] = points[int(np.nanargmax(vals))].gain
        return SweepResult("gain", points, argmax)
    if config.R_values is not None:
        points = [
            _sweep_point(replace(config, R=r, gain=None, feedback=None, R_values=None))
            for r in config.R_values
        ]
        return SweepResult("R", points)
    raise ValueError("sweep needs a gain list or an R list")


def reproduce_tables(config: ExperimentConfig) -> list[CloneReport]:
    """Analytic report per R, followed by the numerical one unless the integrator is analytic."""
    Rs = config.R_values if config.R_values is not None else (config.R,)
    reports = []
    for R in Rs:
        reports.append(analytic_report(R, config.n_max))
        if config.integrator != "analytic":
            reports.append(accumulate_output(replace(config, R=R, R_values=None, gains=None))[1])
    return reports


# ---------------------------------------------------------------------------
# coherent-state amplification


@dataclass
class CoherentGainResult:
    alpha: np.ndarray
    mean_output: np.ndarray
    stderr: np.ndarray  # per real quadrature, shape (2, 2): [mode, (re, im)]
    expected_gain: float
    gain_estimate: float
    noise_variance: np.ndarray  # per real quadrature, shape (2, 2)

    def within(self, n_sigma: float = 5.0) -> bool:
        target = self.expected_gain * self.alpha
        dev = self.mean_output - target
        return bool(
            np.all(np.abs(dev.real) <= n_sigma * self.stderr[:, 0])
            and np.all(np.abs(dev.imag) <= n_sigma * self.stderr[:, 1])
        )


def coherent_amplification_check(
    alpha_H: complex, alpha_V: complex, R: float, f: float, samples: int, seed: int
) -> CoherentGainResult:
    """Send a coherent state through split, heterodyne and feedback.

    Coherent states stay coherent, so amplitudes are tracked directly: the
    reflected amplitude ``sqrt(R) alpha`` is heterodyned (Gaussian outcome,
    variance 1/2 per quadrature) and ``f beta`` is added to the transmitted
    ``sqrt(1-R) alpha``.
    """
    R = check_reflectivity(R)
    FeedbackGain(f)
    rng = np.random.default_rng(seed)
    alpha = np.array([alpha_H, alpha_V], dtype=complex)
    noise = (rng.standard_normal((samples, 2)) + 1j * rng.standard_normal((samples, 2))) * sqrt(0.5)
    beta = sqrt(R) * alpha[None, :] + noise
    out = sqrt(1.0 - R) * alpha[None, :] + f * beta
    mean = out.mean(axis=0)
    var = np.stack([out.real.var(axis=0, ddof=1), out.imag.var(axis=0, ddof=1)], axis=1)
    norm = float(np.vdot(alpha, alpha).real)
    est = float(np.vdot(alpha, mean).real / norm) if norm > 0 else float("nan")
    return CoherentGainResult(
        alpha=alpha,
        mean_output=mean,
        stderr=np.sqrt(var / samples),
        expected_gain=f * sqrt(R) + sqrt(1.0 - R),
        gain_estimate=est,
        noise_variance=var,
    )
