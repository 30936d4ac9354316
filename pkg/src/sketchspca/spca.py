"""Sparse principal components: exact PCA, max-r truncation, a truncated
power-iteration solver, an exhaustive oracle, and the variance metric."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConvergenceError, DimensionError, ParameterError, SizeGuardError
from .matrix import Matrix, gram_apply, power_iteration, sign_fix, top_singular_triplets

__all__ = [
    "ComponentSet",
    "GapReport",
    "exact_pca",
    "truncate_components",
    "keep_top_r",
    "iter_sparse_pca",
    "brute_force_spca",
    "variance",
    "theorem1_gap",
    "threshold_gap",
]

EXACT, MAX_R, ITER_SPARSE, BRUTE_FORCE = "exact", "max_r", "iter_sparse", "brute_force"

BRUTE_MAX_N = 16
BRUTE_MAX_SUPPORTS = 10_000


@dataclass
class ComponentSet:
    loadings: np.ndarray  # (n, k), unit columns
    r: int
    method_tag: str
    converged: bool = True
    iterations: int = 0

    @property
    def k(self) -> int:
        return self.loadings.shape[1]

    @property
    def n(self) -> int:
        return self.loadings.shape[0]


def variance(A: Matrix, V: ComponentSet) -> float:
    """``trace(V^T A^T A V) = sum_i ||A v_i||^2``."""
    L = V.loadings if isinstance(V, ComponentSet) else np.asarray(V, dtype=np.float64)
    if L.ndim == 1:
        L = L[:, None]
    if L.shape[0] != A.n:
        raise DimensionError(f"loadings have {L.shape[0]} rows, matrix has {A.n} columns")
    return float(sum(np.dot(y, y) for y in (A.matvec(L[:, i]) for i in range(L.shape[1]))))


def exact_pca(A: Matrix, k: int, seed: int = 0) -> ComponentSet:
    """Top-``k`` right singular vectors (unconstrained principal components)."""
    trip = top_singular_triplets(A, k, seed=seed)
    return ComponentSet(trip.V.copy(), A.n, EXACT, True, trip.iterations)


def keep_top_r(x: np.ndarray, r: int) -> np.ndarray:
    """Zero all but the ``r`` largest-magnitude entries; ties go to the lower index."""
    if r >= x.size:
        return x.copy()
    order = np.argsort(-np.abs(x), kind="stable")
    out = np.zeros_like(x)
    keep = order[:r]
    out[keep] = x[keep]
    return out


def truncate_components(V: ComponentSet, r: int) -> ComponentSet:
    """Keep the ``r`` largest loadings of each column, then renormalise it."""
    n = V.n
    if not 1 <= r <= n:
        raise ParameterError(f"r must lie in [1, {n}], got {r}")
    L = np.empty_like(V.loadings)
    for i in range(V.k):
        col = keep_top_r(V.loadings[:, i], r)
        L[:, i] = col / np.linalg.norm(col)
    return ComponentSet(L, r, MAX_R, V.converged, V.iterations)


def _tpower_run(apply, x0, r, tol, max_iter, debug):
    """Truncated power iteration from ``x0``; returns (objective, vector, iters, converged)."""
    v = keep_top_r(x0, r)
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return -np.inf, v, 0, True
    v = v / nv
    y = apply(v)
    obj = float(v @ y)
    for it in range(1, max_iter + 1):
        w = keep_top_r(y, r)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return obj, v, it, True
        w = w / nw
        yw = apply(w)
        new = float(w @ yw)
        if debug:
            assert new >= obj - 1e-12 * max(abs(obj), 1.0), (
                f"truncated power objective decreased: {obj!r} -> {new!r}"
            )
        if new < obj:
            # rounding-level dip; the previous iterate is the better one
            return obj, v, it, True
        done = abs(new - obj) <= tol * abs(new)
        v, y, obj = w, yw, new
        if done:
            return obj, v, it, True
    return obj, v, max_iter, False


def iter_sparse_pca(
    A: Matrix,
    k: int,
    r: int,
    restarts: int = 8,
    tol: float = 1e-9,
    max_iter: int = 2000,
    seed: int = 0,
    *,
    workers: int = 1,
    debug: bool = False,
) -> ComponentSet:
    """``r``-sparse components by multi-start truncated power iteration.

    Each component keeps the best of one warm start (the truncated leading
    eigenvector of the current operator) and ``restarts`` random starts.
    Later components run on the projection-deflated operator
    ``(I - V V^T) A^T A (I - V V^T)``.
    """
    n = A.n
    if not 1 <= r <= n:
        raise ParameterError(f"r must lie in [1, {n}], got {r}")
    if not 1 <= k <= min(A.shape):
        raise ParameterError(f"k must lie in [1, {min(A.shape)}], got {k}")
    if restarts < 1:
        raise ParameterError("restarts must be at least 1")
    comp_seeds = np.random.SeedSequence(seed).spawn(k)
    L = np.zeros((n, k))
    converged = True
    iters = 0
    for c in range(k):
        Vc = L[:, :c]

        def project(x, Vc=Vc):
            if Vc.shape[1]:
                x = x - Vc @ (Vc.T @ x)
            return x

        def apply(x):
            return project(gram_apply(A, project(x)))

        if c == 0:
            try:
                warm = exact_pca(A, 1, seed=seed).loadings[:, 0]
            except ConvergenceError as exc:
                # a slowly converging start is still a good start
                warm = exc.result.V[:, 0]
        else:
            warm = sign_fix(power_iteration(apply, n, seed=int(comp_seeds[c].generate_state(1)[0])).vector)
        streams = comp_seeds[c].spawn(restarts)
        starts = [warm] + [np.random.default_rng(ss).standard_normal(n) for ss in streams]

        def run(x0):
            return _tpower_run(apply, x0, r, tol, max_iter, debug)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(run, starts))
        else:
            results = [run(x0) for x0 in starts]
        best = 0
        for j, res in enumerate(results):
            if res[0] > results[best][0]:
                best = j
        obj, v, it, ok = results[best]
        iters += sum(res[2] for res in results)
        converged &= ok
        L[:, c] = sign_fix(v)
    return ComponentSet(L, r, ITER_SPARSE, converged, iters)


def _guard(n, k, r):
    if k not in (1, 2):
        raise SizeGuardError(f"exhaustive search supports k in {{1, 2}}, got {k}")
    if not 1 <= r <= n:
        raise ParameterError(f"r must lie in [1, {n}], got {r}")
    if n > BRUTE_MAX_N:
        raise SizeGuardError(f"exhaustive search needs n <= {BRUTE_MAX_N}, got {n}")
    if math.comb(n, r) > BRUTE_MAX_SUPPORTS:
        raise SizeGuardError(f"C({n}, {r}) exceeds {BRUTE_MAX_SUPPORTS} supports")


def _best_on_supports(G, supports):
    """Top eigenpair of every principal submatrix ``G[S, S]``."""
    S = np.asarray(supports, dtype=np.int64)
    sub = G[S[:, :, None], S[:, None, :]]
    w, U = np.linalg.eigh(sub)
    return w, U


def _embed(n, support, vec):
    v = np.zeros(n)
    v[list(support)] = vec
    return sign_fix(v / np.linalg.norm(v))


def brute_force_spca(A: Matrix, k: int, r: int) -> ComponentSet:
    """Exact sparse PCA by enumerating supports (small ``n`` only).

    ``k = 1``: best top eigenvector over all size-``r`` principal submatrices
    of ``A^T A``. ``k = 2``: exact maximum over orthonormal pairs whose
    supports are either disjoint or identical. For ``r <= 2`` that set
    contains every feasible orthonormal pair up to support reduction, so the
    result is the true optimum there.
    """
    n = A.n
    _guard(n, k, r)
    X = A.toarray()
    G = X.T @ X
    supports = list(itertools.combinations(range(n), r))
    w, U = _best_on_supports(G, supports)
    top = w[:, -1]
    if k == 1:
        i = int(np.argmax(top))
        v = _embed(n, supports[i], U[i, :, -1])
        return ComponentSet(v[:, None], r, BRUTE_FORCE)

    best_val, best_pair = -np.inf, None
    # identical supports: Ky Fan sum of the two largest eigenvalues
    if r >= 2:
        kyfan = w[:, -1] + w[:, -2]
        i = int(np.argmax(kyfan))
        best_val = float(kyfan[i])
        best_pair = (_embed(n, supports[i], U[i, :, -1]), _embed(n, supports[i], U[i, :, -2]))
    # disjoint supports; when 2r > n the partner is the complement
    if 2 * r <= n:
        cand_supports, cand_top, cand_vec = supports, top, U[:, :, -1]
    else:
        cand_supports, cand_top, cand_vec = None, None, None
    if cand_supports is not None:
        masks = np.array([sum(1 << j for j in s) for s in cand_supports], dtype=np.int64)
        order = np.argsort(-cand_top, kind="stable")
        sorted_top = cand_top[order]
        for a in order:
            if cand_top[a] + sorted_top[0] <= best_val:
                break
            free = (masks[order] & masks[a]) == 0
            hits = np.flatnonzero(free)
            if not hits.size:
                continue
            b = order[hits[0]]
            val = float(cand_top[a] + cand_top[b])
            if val > best_val:
                best_val = val
                best_pair = (_embed(n, cand_supports[a], cand_vec[a]), _embed(n, cand_supports[b], cand_vec[b]))
    elif n - r >= 1:
        for i, s in enumerate(supports):
            rest = tuple(j for j in range(n) if j not in s)
            sub = G[np.ix_(rest, rest)]
            wr, Ur = np.linalg.eigh(sub)
            val = float(top[i] + wr[-1])
            if val > best_val:
                best_val = val
                best_pair = (_embed(n, s, U[i, :, -1]), _embed(n, rest, Ur[:, -1]))
    if best_pair is None:
        raise SizeGuardError(f"no feasible pair of {r}-sparse orthonormal components for n={n}")
    v1, v2 = best_pair
    if v2 @ G @ v2 > v1 @ G @ v1:
        v1, v2 = v2, v1
    return ComponentSet(np.column_stack([v1, v2]), r, BRUTE_FORCE)


@dataclass
class GapReport:
    lhs_deficit: float
    bound: float
    gram_diff: float

    @property
    def holds(self) -> bool:
        return self.lhs_deficit <= self.bound


def theorem1_gap(A: Matrix, At: Matrix, k: int, r: int, *, seed: int = 0) -> GapReport:
    """Variance lost on ``A`` by solving exactly on the sketch, against
    ``2 k ||A^T A - At^T At||_2``."""
    from .sketch import spectral_deviation

    S = brute_force_spca(A, k, r)
    St = brute_force_spca(At, k, r)
    deficit = variance(A, S) - variance(A, St)
    _, gd = spectral_deviation(A, At, seed=seed)
    return GapReport(deficit, 2.0 * k * gd, gd)


def threshold_gap(A: Matrix, eps: float, k: int, r: int, *, seed: int = 0, spectral: Optional[float] = None):
    """Deficit of the thresholded sketch against ``2 k eps ||A||_2^2 (2 + eps)``.

    Returns ``(GapReport, delta)``; ``GapReport.gram_diff`` is the measured
    Gram deviation of the thresholded sketch.
    """
    from .matrix import spectral_norm
    from .sketch import select_threshold, threshold_sketch

    delta, _ = select_threshold(A, eps, seed=seed)
    At = threshold_sketch(A, delta)
    gap = theorem1_gap(A, At, k, r, seed=seed)
    two = spectral_norm(A, seed=seed) if spectral is None else spectral
    return GapReport(gap.lhs_deficit, 2.0 * k * eps * two**2 * (2.0 + eps), gap.gram_diff), delta
