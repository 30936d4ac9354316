"""Matrix storage, norms, centering and power-iteration spectral kernels.

Every spectral quantity in the package is computed through the Gram operator
``x -> A^T (A x)`` so that the cost per iteration is proportional to the number
of stored entries. Dense SVDs are never formed here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .errors import ConvergenceError, DimensionError, ParameterError

__all__ = [
    "Matrix",
    "SpectralSummary",
    "PowerResult",
    "SingularTriplets",
    "norms",
    "center_columns",
    "gram_apply",
    "power_iteration",
    "spectral_norm",
    "min_singular_value",
    "top_singular_triplets",
    "sign_fix",
]

SPECTRAL_TOL = 1e-8
MAX_ITER = 5000


def _readonly(arr):
    arr.setflags(write=False)
    return arr


class Matrix:
    """Immutable real matrix backed by a dense array or a CSR array.

    Use :meth:`from_dense` / :meth:`from_coo` to build one from raw values;
    the constructor also accepts an ndarray or any scipy sparse container.
    Construction rejects empty shapes and non-finite values. Explicit zeros in
    sparse input are dropped so that ``nnz`` always counts true nonzeros.
    """

    __slots__ = ("_data", "shape")

    def __init__(self, data):
        if sp.issparse(data):
            csr = sp.csr_array(data, dtype=np.float64, copy=True)
            csr.eliminate_zeros()
            csr.sort_indices()
            if not np.all(np.isfinite(csr.data)):
                raise ParameterError("matrix entries must be finite")
            _readonly(csr.data)
            _readonly(csr.indices)
            _readonly(csr.indptr)
            self._data = csr
        else:
            arr = np.array(data, dtype=np.float64, copy=True)
            if arr.ndim != 2:
                raise DimensionError(f"expected a 2-D array, got ndim={arr.ndim}")
            if not np.all(np.isfinite(arr)):
                raise ParameterError("matrix entries must be finite")
            self._data = _readonly(arr)
        m, n = self._data.shape
        if m < 1 or n < 1:
            raise DimensionError(f"empty matrix of shape {(m, n)}")
        self.shape = (int(m), int(n))

    @classmethod
    def from_dense(cls, values) -> "Matrix":
        return cls(np.asarray(values, dtype=np.float64))

    @classmethod
    def from_coo(cls, shape, rows, cols, values) -> "Matrix":
        """Sparse matrix from coordinate triples (0-based). Repeated coordinates are an error."""
        m, n = (int(d) for d in shape)
        if m < 1 or n < 1:
            raise DimensionError(f"empty matrix of shape {(m, n)}")
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        values = np.asarray(values, dtype=np.float64).ravel()
        if not (rows.size == cols.size == values.size):
            raise DimensionError("rows, cols and values must have equal length")
        if rows.size:
            if rows.min() < 0 or rows.max() >= m or cols.min() < 0 or cols.max() >= n:
                raise DimensionError(f"coordinate out of range for shape {(m, n)}")
            flat = rows * n + cols
            order = np.argsort(flat, kind="stable")
            dup = np.nonzero(np.diff(flat[order]) == 0)[0]
            if dup.size:
                k = order[dup[0]]
                raise ParameterError(f"duplicate coordinate ({rows[k]}, {cols[k]})")
        if not np.all(np.isfinite(values)):
            raise ParameterError("matrix entries must be finite")
        return cls(sp.coo_array((values, (rows, cols)), shape=(m, n)))

    # -- basic views ---------------------------------------------------------

    @property
    def m(self) -> int:
        return self.shape[0]

    @property
    def n(self) -> int:
        return self.shape[1]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self._data)

    @property
    def nnz(self) -> int:
        if self.is_sparse:
            return int(self._data.nnz)
        return int(np.count_nonzero(self._data))

    @property
    def raw(self):
        """The backing ndarray or CSR array (read-only)."""
        return self._data

    def toarray(self) -> np.ndarray:
        if self.is_sparse:
            return self._data.toarray()
        return np.array(self._data)

    def nonzeros(self):
        """Row-major ``(rows, cols, values)`` of the nonzero entries."""
        if self.is_sparse:
            coo = self._data.tocoo()
            return (coo.row.astype(np.int64), coo.col.astype(np.int64), np.array(coo.data))
        rows, cols = np.nonzero(self._data)
        return rows.astype(np.int64), cols.astype(np.int64), self._data[rows, cols]

    def values_at(self, rows, cols) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if self.is_sparse:
            return np.asarray(self._data[rows, cols], dtype=np.float64).ravel()
        return self._data[rows, cols]

    def matvec(self, x) -> np.ndarray:
        return self._data @ x

    def rmatvec(self, y) -> np.ndarray:
        return self._data.T @ y

    def scaled(self, c: float) -> "Matrix":
        return Matrix(self._data * float(c))

    def abs_entries(self) -> np.ndarray:
        return np.abs(self.nonzeros()[2])

    def frobenius_norm(self) -> float:
        vals = self._data.data if self.is_sparse else self._data
        return float(np.sqrt(np.sum(np.square(vals))))

    def l1_norm(self) -> float:
        vals = self._data.data if self.is_sparse else self._data
        return float(np.sum(np.abs(vals)))

    def __repr__(self):
        kind = "sparse" if self.is_sparse else "dense"
        return f"Matrix({self.m}x{self.n}, {kind}, nnz={self.nnz})"


# -- kernels -----------------------------------------------------------------


def gram_apply(A: Matrix, x) -> np.ndarray:
    """Return ``A^T (A x)`` without forming ``A^T A``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (A.n,):
        raise DimensionError(f"vector of length {A.n} expected, got shape {x.shape}")
    return A.rmatvec(A.matvec(x))


@dataclass
class PowerResult:
    value: float
    vector: np.ndarray
    iterations: int
    converged: bool


def power_iteration(
    apply: Callable[[np.ndarray], np.ndarray],
    n: int,
    *,
    seed: int = 0,
    tol: float = SPECTRAL_TOL,
    max_iter: int = MAX_ITER,
    criterion: str = "rayleigh",
    scale: Optional[float] = None,
    x0=None,
) -> PowerResult:
    """Dominant eigenpair of a symmetric positive semi-definite operator.

    ``criterion="rayleigh"`` stops when the relative change of the Rayleigh
    quotient drops below ``tol``. ``criterion="residual"`` stops when
    ``||op(x) - lam x|| <= tol * scale`` (``scale`` defaults to ``lam``).
    The returned vector is the unit iterate whose Rayleigh quotient is ``value``.
    """
    if criterion not in ("rayleigh", "residual"):
        raise ParameterError(f"unknown stopping criterion {criterion!r}")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n) if x0 is None else np.array(x0, dtype=np.float64)
    nx = np.linalg.norm(x)
    if nx == 0.0:
        x = rng.standard_normal(n)
        nx = np.linalg.norm(x)
    x = x / nx
    lam_prev = None
    lam = 0.0
    for it in range(1, max_iter + 1):
        y = apply(x)
        lam = float(x @ y)
        ny = float(np.linalg.norm(y))
        if ny == 0.0:
            return PowerResult(0.0, x, it, True)
        if criterion == "residual":
            ref = abs(lam) if scale is None else scale
            if np.linalg.norm(y - lam * x) <= tol * ref:
                return PowerResult(lam, x, it, True)
        elif lam_prev is not None and abs(lam - lam_prev) <= tol * abs(lam):
            return PowerResult(lam, x, it, True)
        lam_prev = lam
        x = y / ny
    return PowerResult(lam, x, max_iter, False)


def sign_fix(v: np.ndarray) -> np.ndarray:
    """Flip ``v`` so that its largest-magnitude coordinate is nonnegative."""
    if v.size and v[int(np.argmax(np.abs(v)))] < 0:
        return -v
    return v


def _max_abs(A: Matrix) -> float:
    vals = A.raw.data if A.is_sparse else A.raw
    return float(np.max(np.abs(vals))) if vals.size else 0.0


def spectral_norm(A: Matrix, *, seed: int = 0, tol: float = SPECTRAL_TOL, max_iter: int = MAX_ITER) -> float:
    # iterate on (A / c)^T (A / c) so tiny or huge entries cannot under/overflow
    c = _max_abs(A)
    if c == 0.0:
        return 0.0
    res = power_iteration(lambda x: gram_apply(A, x / c) / c, A.n, seed=seed, tol=tol, max_iter=max_iter)
    if not res.converged:
        raise ConvergenceError("spectral norm power iteration did not converge", result=res)
    return c * float(np.sqrt(max(res.value, 0.0)))


def min_singular_value(
    A: Matrix,
    *,
    seed: int = 0,
    tol: float = 1e-10,
    max_iter: int = 50 * MAX_ITER,
    spectral: Optional[float] = None,
) -> float:
    """The min(m, n)-th singular value, by power iteration on ``c I - G``.

    ``G`` is the smaller of the two Gram matrices of ``A / ||A||_2`` and
    ``c = 2``, i.e. a shift of ``2 ||A||_2^2`` in the original units.
    """
    if spectral is None:
        spectral = spectral_norm(A, seed=seed)
    if spectral == 0.0:
        return 0.0
    # work with A / ||A||_2 so the shift is 2 regardless of the scale of A
    w = spectral
    c = 2.0
    if A.n <= A.m:
        dim = A.n

        def apply(x):
            return c * x - A.rmatvec(A.matvec(x / w)) / w
    else:
        dim = A.m

        def apply(x):
            return c * x - A.matvec(A.rmatvec(x / w)) / w

    res = power_iteration(apply, dim, seed=seed, tol=tol, max_iter=max_iter, criterion="residual", scale=c)
    if not res.converged:
        raise ConvergenceError("shifted power iteration for sigma_min did not converge", result=res)
    return w * float(np.sqrt(max(c - res.value, 0.0)))


@dataclass
class SpectralSummary:
    spectral_norm: float
    frobenius_norm: float
    l1_norm: float
    min_singular: float
    stable_rank: float
    min_singular_skipped: bool = True


def norms(A: Matrix, compute_min_singular: bool = False, *, seed: int = 0) -> SpectralSummary:
    """Spectral, Frobenius and entrywise l1 norms plus stable rank.

    The smallest singular value is only computed on request; otherwise it is
    reported as 0 with ``min_singular_skipped=True``. A zero matrix has stable
    rank 1 by convention.
    """
    fro = A.frobenius_norm()
    l1 = A.l1_norm()
    if fro == 0.0:
        return SpectralSummary(0.0, 0.0, 0.0, 0.0, 1.0, not compute_min_singular)
    two = spectral_norm(A, seed=seed)
    smin = 0.0
    if compute_min_singular:
        smin = min_singular_value(A, seed=seed, spectral=two)
    return SpectralSummary(two, fro, l1, smin, fro**2 / two**2, not compute_min_singular)


def center_columns(A: Matrix) -> Matrix:
    """Subtract each column's mean. The result is always dense."""
    X = A.toarray()
    X = X - X.mean(axis=0)
    # second pass removes the rounding residue of the first
    X -= X.mean(axis=0)
    return Matrix(X)


@dataclass
class SingularTriplets:
    sigma: np.ndarray  # (k,) nonincreasing
    U: np.ndarray  # (m, k)
    V: np.ndarray  # (n, k)
    converged: bool
    iterations: int

    def __len__(self):
        return len(self.sigma)

    def __iter__(self):
        for i in range(len(self.sigma)):
            yield self.sigma[i], self.U[:, i], self.V[:, i]


def top_singular_triplets(
    A: Matrix, k: int, tol: float = 1e-10, max_iter: int = MAX_ITER, seed: int = 0
) -> SingularTriplets:
    """Top-``k`` singular triplets by deflated power iteration on ``A^T A``.

    Each right vector stops once ``||A^T A v - s^2 v|| <= tol * s_1^2`` on the
    deflated operator. Right vectors follow :func:`sign_fix`; left vectors are
    ``A v / s`` (zero when ``s`` vanishes). Raises :class:`ConvergenceError`
    carrying the partial result if any vector hits ``max_iter``.
    """
    kmax = min(A.m, A.n)
    if not 1 <= k <= kmax:
        raise ParameterError(f"k must lie in [1, {kmax}], got {k}")
    n = A.n
    V = np.zeros((n, k))
    U = np.zeros((A.m, k))
    sigma = np.zeros(k)
    total = 0
    scale = None
    seeds = np.random.SeedSequence(seed).spawn(k)
    for i in range(k):
        Vi = V[:, :i]

        def project(x, Vi=Vi):
            if Vi.shape[1]:
                x = x - Vi @ (Vi.T @ x)
                x = x - Vi @ (Vi.T @ x)
            return x

        def apply(x):
            return project(gram_apply(A, project(x)))

        x0 = project(np.random.default_rng(seeds[i]).standard_normal(n))
        res = power_iteration(
            apply, n, tol=tol, max_iter=max_iter, criterion="residual", scale=scale, x0=x0,
            seed=int(seeds[i].generate_state(1)[0]),
        )
        total += res.iterations
        v = sign_fix(project(res.vector))
        v = v / np.linalg.norm(v)
        Av = A.matvec(v)
        s = float(np.linalg.norm(Av))
        V[:, i] = v
        sigma[i] = s
        if s > 0.0:
            U[:, i] = Av / s
        if i == 0:
            scale = max(s * s, np.finfo(float).tiny)
        if not res.converged:
            partial = SingularTriplets(sigma[: i + 1], U[:, : i + 1], V[:, : i + 1], False, total)
            raise ConvergenceError(f"triplet {i + 1} of {k} did not converge in {max_iter} iterations", result=partial)
    return SingularTriplets(sigma, U, V, True, total)
