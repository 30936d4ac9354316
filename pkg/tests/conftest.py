import numpy as np
import pytest

from sketchspca.matrix import Matrix


@pytest.fixture
def diag34():
    return Matrix.from_dense(np.diag([3.0, 4.0]))


def random_matrix(m, n, seed=0, sparse=False, density=0.5):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((m, n))
    if sparse:
        X[rng.random((m, n)) > density] = 0.0
        X[0, 0] = 1.0
        import scipy.sparse as sp

        return Matrix(sp.csr_array(X))
    return Matrix.from_dense(X)
