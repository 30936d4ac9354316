"""Element-wise sampling distributions, the sampling sketch, greedy
thresholding and the spectral-deviation meter."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .alias import AliasTable
from .errors import (
    ConsistencyError,
    DegenerateInputError,
    DimensionError,
    ParameterError,
)
from .matrix import (
    Matrix,
    gram_apply,
    norms,
    power_iteration,
    top_singular_triplets,
)

__all__ = [
    "SamplingDistribution",
    "SketchResult",
    "LeverageScores",
    "hybrid_probabilities",
    "uniform_probabilities",
    "leverage_scores",
    "leverage_probabilities",
    "sample_sketch",
    "accumulate_draws",
    "threshold_sketch",
    "select_threshold",
    "spectral_deviation",
]

# trials per independent random stream; fixed so results do not depend on
# how blocks are spread over workers
BLOCK_TRIALS = 1 << 16

NONZEROS = "nonzeros-only"
ALL_ENTRIES = "all-entries"


@dataclass(eq=False)
class SamplingDistribution:
    """Probability table ``(rows[t], cols[t]) -> probs[t]`` over matrix entries."""

    kind: str
    shape: tuple
    rows: np.ndarray
    cols: np.ndarray
    probs: np.ndarray
    support_kind: str
    alpha: Optional[float] = None
    rank: Optional[int] = None
    _alias: Optional[AliasTable] = field(default=None, repr=False)

    def __len__(self):
        return self.probs.size

    @property
    def alias_table(self) -> AliasTable:
        if self._alias is None:
            self._alias = AliasTable(self.probs)
        return self._alias

    def as_dense(self) -> np.ndarray:
        P = np.zeros(self.shape)
        P[self.rows, self.cols] = self.probs
        return P

    def descriptor(self) -> dict:
        return {
            "kind": self.kind,
            "alpha": self.alpha,
            "rank": self.rank,
            "support": self.support_kind,
            "support_size": int(self.probs.size),
        }


@dataclass
class SketchResult:
    sketch: Matrix
    s: int
    seed: int
    distribution: dict
    distinct_entries_hit: int


@dataclass
class LeverageScores:
    mu: np.ndarray  # row scores, length m
    nu: np.ndarray  # column scores, length n
    rank: int


def _all_entries(m, n):
    return np.repeat(np.arange(m, dtype=np.int64), n), np.tile(np.arange(n, dtype=np.int64), m)


def _check_alpha(alpha):
    if not (0.0 < alpha <= 1.0):
        raise ParameterError(f"alpha must lie in (0, 1], got {alpha}")


def hybrid_probabilities(A: Matrix, alpha: float) -> SamplingDistribution:
    """Mixture of l1 and l2 entry weights, supported on the nonzeros of ``A``:
    ``p = alpha |a| / ||A||_1 + (1 - alpha) a^2 / ||A||_F^2``.
    """
    _check_alpha(alpha)
    rows, cols, vals = A.nonzeros()
    if vals.size == 0:
        raise DegenerateInputError("hybrid distribution of a zero matrix is undefined")
    mag = np.abs(vals)
    l1 = mag.sum()
    fro2 = np.square(vals).sum()
    p = alpha * mag / l1 + (1.0 - alpha) * np.square(vals) / fro2
    return SamplingDistribution("hybrid", A.shape, rows, cols, p, NONZEROS, alpha=float(alpha))


def uniform_probabilities(A: Matrix, nonzeros_only: bool = False) -> SamplingDistribution:
    """Uniform over all ``m*n`` positions (zeros included), or over the nonzeros
    when ``nonzeros_only`` is set."""
    if nonzeros_only:
        rows, cols, _ = A.nonzeros()
        if rows.size == 0:
            raise DegenerateInputError("zero matrix has no nonzeros to sample")
        support = NONZEROS
    else:
        rows, cols = _all_entries(*A.shape)
        support = ALL_ENTRIES
    p = np.full(rows.size, 1.0 / rows.size)
    return SamplingDistribution("uniform", A.shape, rows, cols, p, support)


def leverage_scores(A: Matrix, rank: int, *, seed: int = 0) -> LeverageScores:
    """Row/column leverage scores of the rank-``rank`` truncated SVD of ``A``."""
    kmax = min(A.shape)
    if not 1 <= rank <= kmax:
        raise ParameterError(f"rank must lie in [1, {kmax}], got {rank}")
    trip = top_singular_triplets(A, rank, seed=seed)
    if trip.sigma[-1] <= trip.sigma[0] * 1e-12:
        raise DegenerateInputError(f"matrix has rank below {rank}")
    mu = np.sum(np.square(trip.U), axis=1)
    nu = np.sum(np.square(trip.V), axis=1)
    return LeverageScores(mu, nu, rank)


def leverage_probabilities(scores: LeverageScores, m: int, n: int) -> SamplingDistribution:
    """``p_ij = (mu_i + nu_j) / (2 (m+n) rank) + 1 / (2 m n)`` over all entries."""
    if scores.mu.shape != (m,) or scores.nu.shape != (n,):
        raise DimensionError("leverage scores do not match the requested shape")
    rows, cols = _all_entries(m, n)
    rho = scores.rank
    p = 0.5 * (scores.mu[rows] + scores.nu[cols]) / ((m + n) * rho) + 0.5 / (m * n)
    return SamplingDistribution("leverage", (m, n), rows, cols, p, ALL_ENTRIES, rank=rho)


def _check_support(A: Matrix, dist: SamplingDistribution):
    if tuple(dist.shape) != A.shape:
        raise ConsistencyError(f"distribution shape {dist.shape} differs from matrix shape {A.shape}")
    if dist.support_kind == NONZEROS:
        rows, cols, _ = A.nonzeros()
        if rows.size != dist.rows.size or not (
            np.array_equal(rows, dist.rows) and np.array_equal(cols, dist.cols)
        ):
            raise ConsistencyError("distribution support differs from the nonzeros of the matrix")
    elif dist.rows.size != A.m * A.n:
        raise ConsistencyError("all-entries distribution must cover every position")
    if np.any(dist.probs <= 0):
        raise ConsistencyError("every support entry needs positive probability")


def accumulate_draws(A: Matrix, dist: SamplingDistribution, draws, s: int) -> Matrix:
    """Sketch from an explicit sequence of support indices.

    Each draw ``t`` adds ``A[i_t, j_t] / (s * p_t)`` to its entry; repeated
    draws accumulate.
    """
    draws = np.asarray(draws, dtype=np.int64)
    idx, counts = np.unique(draws, return_counts=True)
    rows, cols = dist.rows[idx], dist.cols[idx]
    acc = counts * (A.values_at(rows, cols) / (s * dist.probs[idx]))
    keep = acc != 0.0
    return Matrix.from_coo(A.shape, rows[keep], cols[keep], acc[keep])


def _block_draws(table, seed, block, size):
    ss = np.random.SeedSequence(seed, spawn_key=(block,))
    return table.draw(np.random.default_rng(ss), size)


def sample_sketch(
    A: Matrix, dist: SamplingDistribution, s: int, seed: int, *, workers: int = 1
) -> SketchResult:
    """``s`` i.i.d. draws with replacement from ``dist``, rescaled so that the
    sketch is an unbiased estimate of ``A``.

    Trials are cut into fixed blocks of ``BLOCK_TRIALS``, each with its own
    seed-derived stream, so ``workers`` changes scheduling only.
    """
    if int(s) != s or s < 1:
        raise ParameterError(f"sample count must be a positive integer, got {s}")
    s = int(s)
    _check_support(A, dist)
    table = dist.alias_table
    sizes = [BLOCK_TRIALS] * (s // BLOCK_TRIALS)
    if s % BLOCK_TRIALS:
        sizes.append(s % BLOCK_TRIALS)
    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _block_draws(table, seed, b, sizes[b]), range(len(sizes))))
    else:
        parts = [_block_draws(table, seed, b, size) for b, size in enumerate(sizes)]
    draws = np.concatenate(parts)
    sketch = accumulate_draws(A, dist, draws, s)
    hit = int(np.unique(draws).size)
    return SketchResult(sketch, s, int(seed), dist.descriptor(), hit)


def threshold_sketch(A: Matrix, delta: float) -> Matrix:
    """Keep entries with ``|a| >= delta`` verbatim, zero the rest."""
    if delta < 0:
        raise ParameterError(f"delta must be nonnegative, got {delta}")
    rows, cols, vals = A.nonzeros()
    keep = np.abs(vals) >= delta
    return Matrix.from_coo(A.shape, rows[keep], cols[keep], vals[keep])


def select_threshold(A: Matrix, eps: float, *, seed: int = 0):
    """Largest cutoff whose zeroed energy stays within ``eps^2 ||A||_F^2 / k~``.

    Candidates are the distinct nonzero magnitudes plus one value just above
    the largest; returns ``(delta, lost_energy)``.
    """
    if not eps > 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    summary = norms(A, seed=seed)
    if summary.frobenius_norm == 0.0:
        raise DegenerateInputError("threshold selection on a zero matrix")
    budget = eps**2 * summary.frobenius_norm**2 / summary.stable_rank
    mags = np.sort(A.abs_entries())
    prefix = np.concatenate(([0.0], np.cumsum(np.square(mags))))
    cands = np.append(np.unique(mags), np.nextafter(mags[-1], np.inf))
    lost = prefix[np.searchsorted(mags, cands, side="left")]
    feasible = np.flatnonzero(lost <= budget)
    best = feasible[-1]
    return float(cands[best]), float(lost[best])


def spectral_deviation(A: Matrix, At: Matrix, *, seed: int = 0, tol: float = 1e-12, max_iter: int = 20000):
    """``(||A - At||_2, ||A^T A - At^T At||_2)`` by power iteration.

    The Gram difference ``D`` is indefinite, so its norm is read off the top
    eigenvalue of ``D^2`` (``max(|lam_max|, |lam_min|)^2``).
    """
    if A.shape != At.shape:
        raise DimensionError(f"shape mismatch {A.shape} vs {At.shape}")

    def diff_gram(x):
        d = A.matvec(x) - At.matvec(x)
        return A.rmatvec(d) - At.rmatvec(d)

    def gram_delta(x):
        return gram_apply(A, x) - gram_apply(At, x)

    def gram_delta_sq(x):
        return gram_delta(gram_delta(x))

    op = power_iteration(diff_gram, A.n, seed=seed, tol=tol, max_iter=max_iter)
    gd = power_iteration(gram_delta_sq, A.n, seed=seed, tol=tol, max_iter=max_iter)
    return float(np.sqrt(max(op.value, 0.0))), float(np.sqrt(max(gd.value, 0.0)))
