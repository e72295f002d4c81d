from fractions import Fraction

import numpy as np
import pytest

from feedback_cloning.engine import measure_fidelity
from feedback_cloning.fock import (
    PolarizationQubit,
    make_basis,
    polarization_rotation,
    project_total_N,
    sector_weights,
    total_number_op,
    trace_distance,
)
from feedback_cloning.theory import (
    C_N_operator,
    analytic_output,
    analytic_report,
    fidelity_from_distribution,
    optimal_feedback,
    optimal_fidelity,
    prob_N,
    prob_n_given_N,
    rho_N,
    white_noise_mix,
)

from oracles import random_qubit, random_unitary

H = PolarizationQubit(1, 0)


@pytest.mark.parametrize("R, f, g", [(0.0, 0.0, 1.0), (0.5, 1.0, np.sqrt(2)), (0.75, np.sqrt(3), 2.0)])
def test_optimal_feedback(R, f, g):
    fR, gR = optimal_feedback(R)
    assert fR == pytest.approx(f, rel=1e-15, abs=0)
    assert gR == pytest.approx(g, rel=1e-15)
    # g = f sqrt(R) + sqrt(1 - R)
    assert fR * np.sqrt(R) + np.sqrt(1 - R) == pytest.approx(gR, rel=1e-15)


@pytest.mark.parametrize("R", [1.0, -0.1, 1.2])
def test_optimal_feedback_rejects(R):
    with pytest.raises(ValueError):
        optimal_feedback(R)


@pytest.mark.parametrize("N, p", [(1, 0.125), (2, 0.1875), (3, 0.1875), (4, 0.15625)])
def test_prob_N_half(N, p):
    assert prob_N(0.5, N) == pytest.approx(p, rel=1e-15)


@pytest.mark.parametrize("R", [0.1, 0.5, 0.75])
def test_prob_N_sums_to_one(R):
    # tail beyond N = 200 is ~ R^200 N^2, far below 1e-12 for these R
    assert sum(prob_N(R, N) for N in range(1, 201)) == pytest.approx(1.0, abs=1e-12)


def test_prob_N_without_reflection():
    assert prob_N(0.0, 1) == 1.0 and prob_N(0.0, 2) == 0.0


def test_C_N():
    b = make_basis(4)
    c1 = C_N_operator(1, b)
    assert c1.operator.matrix[0, 0] == 1 and np.count_nonzero(c1.operator.matrix) == 1
    c2 = C_N_operator(2, b)
    np.testing.assert_allclose(np.diag(c2.operator.matrix)[b.sector(1)], [0.5, 0.5])
    assert c2.operator.trace == pytest.approx(1.0)
    assert c2.raw_coefficient == pytest.approx(1 / 3)
    with pytest.raises(ValueError):
        C_N_operator(6, b)


def test_rho_1_is_the_input():
    b = make_basis(3)
    q = PolarizationQubit(0.6, -0.8j)
    r = rho_N(q, 1, b)
    psi = q.c_H * b.basis_vector(1, 0) + q.c_V * b.basis_vector(0, 1)
    np.testing.assert_allclose(r.matrix, np.outer(psi, psi.conj()), atol=1e-15)


def test_rho_2_diagonal():
    b = make_basis(3)
    r = rho_N(H, 2, b)
    assert r.trace == pytest.approx(1.0, abs=1e-15)
    diag = np.diag(r.matrix).real
    assert diag[b.index(2, 0)] == pytest.approx(2 / 3)
    assert diag[b.index(1, 1)] == pytest.approx(1 / 3)
    assert np.count_nonzero(np.abs(r.matrix) > 1e-15) == 2


def test_raw_coefficient_normalizes_the_clone():
    # A C A^dag with the raw 2/(N(N+1)) prefactor on the unnormalized
    # projector sum has unit trace
    from feedback_cloning.fock import DensityOperator, apply_creation_superposition

    b = make_basis(8)
    for N in range(1, 8):
        proj = np.zeros(b.dimension)
        proj[b.sector(N - 1)] = 1.0
        raw = C_N_operator(N, b).raw_coefficient
        out = apply_creation_superposition(H, DensityOperator(b, raw * np.diag(proj).astype(complex)))
        assert out.trace == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("N", [1, 2, 3, 5])
def test_prob_n_given_N(N):
    row = [prob_n_given_N(n, N) for n in range(1, N + 1)]
    assert sum(row) == pytest.approx(1.0, abs=1e-12)
    assert [Fraction(x).limit_denominator(1000) for x in row] == [
        Fraction(2 * n, N * (N + 1)) for n in range(1, N + 1)
    ]
    with pytest.raises(ValueError):
        prob_n_given_N(0, N)


def test_fidelity_values():
    assert optimal_fidelity(1) == 1.0
    assert optimal_fidelity(2) == pytest.approx(5 / 6, rel=1e-15)
    assert optimal_fidelity(10**9) == pytest.approx(2 / 3, abs=1e-9)


@pytest.mark.parametrize("N", range(1, 21))
def test_fidelity_from_distribution(N):
    assert fidelity_from_distribution(N) == pytest.approx(optimal_fidelity(N), rel=1e-14)


@pytest.mark.parametrize("N", [1, 2, 3, 6])
def test_rho_N_distribution_and_fidelity(N):
    b = make_basis(8)
    r = rho_N(H, N, b)
    diag = np.diag(r.matrix).real
    for n in range(1, N + 1):
        assert diag[b.index(n, N - n)] == pytest.approx(prob_n_given_N(n, N), abs=1e-14)
    assert measure_fidelity(r, H, N) == pytest.approx(optimal_fidelity(N), abs=1e-14)


@pytest.mark.parametrize("eps, F", [(0.0, 5 / 6), (1.0, 0.5), (0.2, 0.8 * 5 / 6 + 0.1)])
def test_white_noise(eps, F):
    b = make_basis(5)
    rho, fid = white_noise_mix(H, 2, eps, b)
    assert fid == pytest.approx(F, rel=1e-14)
    assert measure_fidelity(rho, H, 2) == pytest.approx(F, abs=1e-14)


def test_white_noise_example():
    _, fid = white_noise_mix(H, 2, 0.2, make_basis(4))
    assert fid == pytest.approx(0.7667, abs=1e-4)
    with pytest.raises(ValueError):
        white_noise_mix(H, 2, 1.5, make_basis(4))


@pytest.mark.parametrize("R", [0.25, 0.5, 0.75])
def test_analytic_output_sectors(R):
    b = make_basis(10)  # retained sectors are exact at any cutoff
    q = PolarizationQubit(0.6, 0.8j)
    out = analytic_output(q, R, b)
    w = sector_weights(out)
    for N in range(1, 9):
        assert w[N] == pytest.approx(prob_N(R, N), abs=1e-12)
        weight, block = project_total_N(out, N)
        assert trace_distance(block.normalize(), rho_N(q, N, b)) <= 1e-12
    assert w[0] == pytest.approx(0.0, abs=1e-300)
    assert out.trace + out.leakage == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("R", [0.25, 0.5])
def test_analytic_output_mean_photon_number(R):
    b = make_basis(60)
    out = analytic_output(H, R, b)
    mean = out.expectation(total_number_op(b)).real
    from_distribution = sum(N * prob_N(R, N) for N in range(1, 400))
    assert mean == pytest.approx(from_distribution, abs=1e-8)
    # H mode: (1-R) E[(m+1)^2] = 2 nbar + 1; V mode: nbar
    nbar = R / (1 - R)
    assert from_distribution == pytest.approx(1 + 3 * nbar, rel=1e-12)


def test_unrenormalized_trace_example():
    # A eta A^dag for q = H and nbar = 1 has trace 1 + nbar = 2
    R = 0.5
    out = analytic_output(H, R, make_basis(60))
    assert out.trace / (1 - R) == pytest.approx(2.0, abs=1e-9)


def test_covariance_under_rotations():
    rng = np.random.default_rng(31)
    b = make_basis(8)
    q = random_qubit(rng)
    base = analytic_output(q, 0.4, b)
    base_w = sector_weights(base)
    for _ in range(50):
        U = random_unitary(rng)
        v = U @ q.vector
        q2 = PolarizationQubit(v[0], v[1])
        out = analytic_output(q2, 0.4, b)
        W = polarization_rotation(b, U)
        np.testing.assert_allclose(out.matrix, W @ base.matrix @ W.conj().T, atol=1e-10)
        np.testing.assert_allclose(sector_weights(out), base_w, atol=1e-10)
        for N in (1, 2, 3):
            assert measure_fidelity(rho_N(q2, N, b), q2, N) == pytest.approx(optimal_fidelity(N), abs=1e-10)


def test_analytic_report():
    rep = analytic_report(0.5, 4)
    assert [r.N for r in rep.records] == [1, 2, 3, 4]
    assert rep.gain == pytest.approx(np.sqrt(2))
    assert rep.record(2).p_n_given_N == pytest.approx([0.0, 1 / 3, 2 / 3])
    assert sum(r.p_N for r in rep.records) + rep.leakage == pytest.approx(1.0, abs=1e-15)
    for r in rep.records:
        assert sum(r.p_n_given_N) == pytest.approx(1.0, abs=1e-12)
    assert [r.N for r in analytic_report(0.0, 4).records] == [1]
    with pytest.raises(ValueError):
        analytic_report(0.5, 0)
