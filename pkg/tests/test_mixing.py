import math

import numpy as np
import pytest

from sketchspca.errors import DegenerateInputError, ParameterError
from sketchspca.generators import spiky_powerlaw
from sketchspca.matrix import Matrix, norms
from sketchspca.mixing import (
    gamma,
    objective,
    optimize_alpha,
    rho_squared,
    sample_complexity,
    sigma_min_squared,
    theoretical_sample_size,
    xi,
)
from sketchspca.sketch import hybrid_probabilities

from .conftest import random_matrix

EQUAL = Matrix.from_dense([[1.5, -1.5, 0.0], [0.0, 1.5, 1.5], [-1.5, 0.0, 0.0]])


def test_xi_diag(diag34):
    np.testing.assert_allclose(xi(diag34, 1.0), [21.0, 28.0])


def test_xi_equal_magnitudes():
    for a in (0.05, 0.5, 1.0):
        np.testing.assert_allclose(xi(EQUAL, a), 1.5**2 * EQUAL.nnz)


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("alpha", [0.1, 0.5, 1.0])
def test_xi_times_p_is_square(seed, alpha):
    A = random_matrix(7, 5, seed=seed, sparse=seed % 2 == 1)
    p = hybrid_probabilities(A, alpha).probs
    vals = A.nonzeros()[2]
    np.testing.assert_allclose(xi(A, alpha) * p, vals**2, rtol=1e-10)


def test_rho_squared_examples(diag34):
    assert rho_squared(diag34, 1.0, 9.0) == pytest.approx(19.0)
    assert rho_squared(diag34, 1.0) == pytest.approx(28.0)
    c = Matrix.from_dense([[-2.5]])
    assert rho_squared(c, 0.3, 6.25) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ParameterError):
        rho_squared(diag34, 1.0, -1.0)


def test_rho_squared_monotone_in_sigma():
    A = random_matrix(6, 6, seed=1)
    smin2 = sigma_min_squared(A)
    assert smin2 > 0
    for a in (0.2, 0.7):
        assert rho_squared(A, a, 0.0) >= rho_squared(A, a, smin2)


def test_gamma_examples(diag34):
    assert gamma(diag34, 1.0) == pytest.approx(11.0, rel=1e-8)
    two = norms(EQUAL).spectral_norm
    for a in (0.1, 0.6, 1.0):
        assert gamma(EQUAL, a) == pytest.approx(EQUAL.l1_norm() + two, rel=1e-8)
    for seed in range(3):
        A = random_matrix(6, 5, seed=seed)
        assert gamma(A, 1.0) == pytest.approx(A.l1_norm() + norms(A).spectral_norm, rel=1e-8)


def test_gamma_nonincreasing_when_t_le_one():
    A = random_matrix(8, 6, seed=2)
    mags = A.abs_entries()
    assert mags.min() * A.l1_norm() <= A.frobenius_norm() ** 2
    vals = [gamma(A, a, spectral=1.0) for a in np.linspace(0.01, 1, 50)]
    assert all(b <= a + 1e-9 for a, b in zip(vals, vals[1:]))


def test_degenerate_and_errors(diag34):
    with pytest.raises(DegenerateInputError):
        xi(Matrix.from_dense(np.zeros((2, 2))), 0.5)
    with pytest.raises(ParameterError):
        xi(diag34, 0.0)
    with pytest.raises(ParameterError):
        optimize_alpha(diag34, 0.0)
    with pytest.raises(ParameterError):
        optimize_alpha(diag34, 0.1, grid_lo=0.5, grid_hi=0.4)


def test_optimize_alpha_equal_magnitudes_ties_to_grid_lo():
    prof = optimize_alpha(EQUAL, 0.3)
    assert prof.alpha_star == 0.01
    assert np.ptp(prof.objective_values) <= 1e-9 * prof.objective_values.max()


def _fine_grid(A, eps, smin2=0.0):
    grid = np.linspace(0.01, 1.0, 10_000)
    spec = norms(A).spectral_norm
    vals = np.array([objective(A, a, eps, smin2, spectral=spec) for a in grid])
    i = int(np.argmin(vals))
    return grid[i], vals[i]


def test_optimize_alpha_diag_fine_grid(diag34):
    prof = optimize_alpha(diag34, 0.05)
    a_ref, f_ref = _fine_grid(diag34, 0.05)
    assert abs(prof.alpha_star - a_ref) <= 1e-3
    assert prof.objective_at_star <= f_ref * (1 + 1e-6)
    assert prof.objective_at_star <= prof.objective_values.min()


def test_optimize_alpha_spiky_away_from_zero():
    A = spiky_powerlaw(120, 90, rank=4, exponent=0.7, seed=0)
    assert optimize_alpha(A, 0.5).alpha_star > 0.2


def test_profile_dict(diag34):
    d = optimize_alpha(diag34, 0.2, sigma_min_sq=9.0).to_dict()
    assert d["grid"] == [0.01, 1.0, 100]
    assert d["sigma_min_sq"] == 9.0


def test_sample_complexity_reference():
    assert sample_complexity(19, 11, 0.5, 0.1, 2, 2, 1) == 615
    assert 615 == math.ceil(8 * (19 + 11 / 6) * math.log(40))


def test_sample_complexity_structure():
    base = sample_complexity(19, 11, 0.5, 0.1, 2, 2, 1)
    first_k1 = 2 / 0.25 * 19 * math.log(40)
    assert sample_complexity(19, 11, 0.5, 0.1, 2, 2, 2) >= 4 * first_k1
    assert base >= first_k1
    # gamma negligible: halving eps quadruples s
    a = sample_complexity(100.0, 0.01, 0.2, 0.1, 50, 50)
    b = sample_complexity(100.0, 0.01, 0.1, 0.1, 50, 50)
    assert b / a == pytest.approx(4.0, rel=0.05)
    with pytest.raises(ParameterError):
        sample_complexity(19, 11, 0.0, 0.1, 2, 2)


def test_sample_complexity_monotone():
    for seed in range(3):
        A = random_matrix(9, 7, seed=seed)
        for alpha in (0.1, 0.5, 1.0):
            r2, g = rho_squared(A, alpha), gamma(A, alpha)
            for k in (1, 2, 3):
                s = [sample_complexity(r2, g, e, 0.1, 9, 7, k) for e in (0.1, 0.2, 0.5)]
                assert s[0] >= s[1] >= s[2]
            for e in (0.1, 0.2, 0.5):
                s = [sample_complexity(r2, g, e, 0.1, 9, 7, k) for k in (1, 2, 3)]
                assert s[0] <= s[1] <= s[2]


def test_theoretical_sample_size_uses_normalised_terms(diag34):
    s1, prof = theoretical_sample_size(diag34, 0.5, 0.1)
    s2, _ = theoretical_sample_size(diag34.scaled(1000.0), 0.5, 0.1)
    assert s1 == s2
    assert prof.sigma_min_sq == pytest.approx(9.0)
