import numpy as np
import pytest

from sketchspca.errors import ParameterError, SizeGuardError
from sketchspca.matrix import Matrix
from sketchspca.sketch import hybrid_probabilities, sample_sketch, spectral_deviation
from sketchspca.spca import (
    ComponentSet,
    brute_force_spca,
    exact_pca,
    iter_sparse_pca,
    keep_top_r,
    theorem1_gap,
    threshold_gap,
    truncate_components,
    variance,
)

from .conftest import random_matrix


def cs(v):
    v = np.asarray(v, dtype=float)
    return ComponentSet(v[:, None] if v.ndim == 1 else v, v.shape[0], "given")


def test_variance_examples(diag34):
    assert variance(Matrix.from_dense(np.eye(2)), cs([1.0, 0.0])) == 1.0
    assert variance(diag34, cs([0.0, 1.0])) == 16.0
    A = random_matrix(6, 4, seed=1)
    Q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((4, 4)))
    assert variance(A, cs(Q)) == pytest.approx(A.frobenius_norm() ** 2)
    assert variance(A.scaled(3.0), cs(Q[:, :2])) == pytest.approx(9 * variance(A, cs(Q[:, :2])))


def test_exact_pca_examples(diag34):
    V = exact_pca(diag34, 1)
    np.testing.assert_allclose(np.abs(V.loadings[:, 0]), [0, 1], atol=1e-8)
    assert variance(diag34, V) == pytest.approx(16.0)
    assert variance(diag34, exact_pca(diag34, 2)) == pytest.approx(25.0)
    A = random_matrix(10, 6, seed=2)
    s = np.linalg.svd(A.toarray(), compute_uv=False)
    assert variance(A, exact_pca(A, 2)) == pytest.approx(np.sum(s[:2] ** 2), rel=1e-6)


def test_truncate_components():
    V = truncate_components(cs([0.8, 0.6, 0.0]), 2)
    np.testing.assert_allclose(V.loadings[:, 0], [0.8, 0.6, 0.0])
    v = np.array([0.8, 0.6, 0.1]) / np.linalg.norm([0.8, 0.6, 0.1])
    np.testing.assert_allclose(truncate_components(cs(v), 2).loadings[:, 0], [0.8, 0.6, 0.0])
    np.testing.assert_allclose(truncate_components(cs(v), 3).loadings[:, 0], v)
    with pytest.raises(ParameterError):
        truncate_components(cs(v), 0)


def test_keep_top_r_ties_prefer_lower_index():
    np.testing.assert_array_equal(keep_top_r(np.array([1.0, -1.0, 1.0]), 2), [1.0, -1.0, 0.0])


def test_iter_sparse_diag():
    A = Matrix.from_dense(np.diag([1.0, 2.0, 3.0]))
    V = iter_sparse_pca(A, 1, 1)
    np.testing.assert_allclose(V.loadings[:, 0], [0, 0, 1], atol=1e-12)
    assert variance(A, V) == pytest.approx(9.0)


def test_iter_sparse_full_r_matches_exact():
    A = random_matrix(9, 6, seed=3)
    assert variance(A, iter_sparse_pca(A, 1, 6)) == pytest.approx(variance(A, exact_pca(A, 1)), rel=1e-8)


def test_iter_sparse_components_are_sparse_and_unit():
    A = random_matrix(12, 8, seed=4)
    V = iter_sparse_pca(A, 3, 3)
    for i in range(3):
        assert np.count_nonzero(V.loadings[:, i]) <= 3
        assert np.linalg.norm(V.loadings[:, i]) == pytest.approx(1.0)
    assert V.converged


def test_iter_sparse_workers_and_seed_determinism():
    A = random_matrix(15, 10, seed=5)
    a = iter_sparse_pca(A, 2, 4, seed=9).loadings
    np.testing.assert_array_equal(a, iter_sparse_pca(A, 2, 4, seed=9, workers=3).loadings)


@pytest.mark.parametrize("seed", range(20))
def test_ordering_chain(seed):
    A = random_matrix(8, 6, seed=seed)
    for r in (1, 2, 3):
        lo = variance(A, truncate_components(exact_pca(A, 1, seed=seed), r))
        mid = variance(A, iter_sparse_pca(A, 1, r, seed=seed, debug=True))
        hi = variance(A, brute_force_spca(A, 1, r))
        top = variance(A, exact_pca(A, 1, seed=seed))
        assert lo <= mid + 1e-9 and mid <= hi + 1e-9 and hi <= top + 1e-9


def test_brute_force_examples(diag34):
    V = brute_force_spca(diag34, 1, 1)
    np.testing.assert_allclose(V.loadings[:, 0], [0, 1])
    assert variance(Matrix.from_dense(np.eye(3)), brute_force_spca(Matrix.from_dense(np.eye(3)), 1, 2)) == pytest.approx(1.0)


def test_brute_force_k2_matches_dense_search():
    # r = 1 pairs: best two distinct coordinates
    A = random_matrix(7, 5, seed=6)
    G = A.toarray().T @ A.toarray()
    d = np.sort(np.diag(G))
    assert variance(A, brute_force_spca(A, 2, 1)) == pytest.approx(d[-1] + d[-2])
    # r = n: unconstrained top-2 energy
    s = np.linalg.svd(A.toarray(), compute_uv=False)
    assert variance(A, brute_force_spca(A, 2, 5)) == pytest.approx(np.sum(s[:2] ** 2))


def test_brute_force_k2_orthonormal():
    A = random_matrix(7, 6, seed=7)
    for r in (2, 3, 4):
        L = brute_force_spca(A, 2, r).loadings
        np.testing.assert_allclose(L.T @ L, np.eye(2), atol=1e-10)
        assert all(np.count_nonzero(L[:, i]) <= r for i in range(2))


def test_brute_force_scale_invariant_support():
    A = random_matrix(6, 6, seed=8)
    a = np.flatnonzero(brute_force_spca(A, 1, 2).loadings[:, 0])
    b = np.flatnonzero(brute_force_spca(A.scaled(7.5), 1, 2).loadings[:, 0])
    np.testing.assert_array_equal(a, b)


def test_brute_force_guard():
    with pytest.raises(SizeGuardError):
        brute_force_spca(random_matrix(5, 17), 1, 1)
    with pytest.raises(SizeGuardError):
        brute_force_spca(random_matrix(5, 16), 1, 8)
    with pytest.raises(SizeGuardError):
        brute_force_spca(random_matrix(5, 5), 3, 1)


def test_gap_identity_and_bound():
    A = random_matrix(6, 5, seed=9)
    g = theorem1_gap(A, A, 1, 2)
    assert g.lhs_deficit == 0.0 and g.bound == 0.0 and g.holds
    At = sample_sketch(A, hybrid_probabilities(A, 0.5), 15, seed=1).sketch
    g = theorem1_gap(A, At, 2, 2)
    assert g.bound == pytest.approx(4 * spectral_deviation(A, At)[1])
    assert g.holds


def test_threshold_gap_bound_constant():
    A = random_matrix(6, 5, seed=10)
    g, delta = threshold_gap(A, 0.3, 1, 2, spectral=2.0)
    assert g.bound == pytest.approx(2 * 0.3 * 4.0 * 2.3)
    assert delta > 0


def test_iter_sparse_survives_slow_warm_start():
    # top two singular values within 0.06%: exact power iteration stalls
    d = np.array([4.92047033, 1.0, 0.5, 4.91762254, 2.0])
    A = Matrix.from_dense(np.vstack([np.diag(d), np.zeros((1, 5))]))
    V = iter_sparse_pca(A, 1, 1, seed=8)
    assert variance(A, V) == pytest.approx(d[0] ** 2)
