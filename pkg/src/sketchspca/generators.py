"""Seeded synthetic matrices.

* ``spiky_powerlaw``: a low-rank template whose entries are scaled by
  heavy-tailed multipliers ``U^-exponent`` (U uniform on (0, 1]), so a few
  entries carry most of the energy, as in bag-of-words data.
* ``low_rank_noise``: a rank-``rank`` product plus dense Gaussian noise.
* ``binary_pixel``: magnitudes in [0.8, 1] with signs following a smooth
  random field, like binarised images.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import ParameterError
from .matrix import Matrix

__all__ = ["GENERATORS", "generate", "spiky_powerlaw", "low_rank_noise", "binary_pixel"]


def _check_shape(m, n):
    if int(m) != m or int(n) != n or m < 1 or n < 1:
        raise ParameterError(f"shape must be positive integers, got ({m}, {n})")
    return int(m), int(n)


def _check_rank(rank, m, n):
    if int(rank) != rank or not 1 <= rank <= min(m, n):
        raise ParameterError(f"rank must lie in [1, {min(m, n)}], got {rank}")
    return int(rank)


def _orthonormal(rng, rows, cols):
    q, r = np.linalg.qr(rng.standard_normal((rows, cols)))
    return q * np.sign(np.diag(r))


def spiky_powerlaw(m: int, n: int, rank: int = 5, exponent: float = 1.0, density: float = 1.0, seed: int = 0) -> Matrix:
    """Low-rank template times ``U^-exponent`` multipliers.

    ``density < 1`` keeps a random subset of entries and returns sparse
    storage. Larger ``exponent`` gives a heavier tail.
    """
    m, n = _check_shape(m, n)
    rank = _check_rank(rank, m, n)
    if not exponent > 0:
        raise ParameterError(f"exponent must be positive, got {exponent}")
    if not 0 < density <= 1:
        raise ParameterError(f"density must lie in (0, 1], got {density}")
    rng = np.random.default_rng(seed)
    scales = 1.0 / np.arange(1, rank + 1)
    template = (rng.standard_normal((m, rank)) * scales) @ rng.standard_normal((rank, n))
    # 1 - random() lies in (0, 1], so the multipliers are finite and >= 1
    spikes = (1.0 - rng.random((m, n))) ** (-float(exponent))
    X = template * spikes
    if density < 1:
        keep = rng.random((m, n)) < density
        return Matrix(sp.csr_array(np.where(keep, X, 0.0)))
    return Matrix.from_dense(X)


def low_rank_noise(m: int, n: int, rank: int = 2, noise: float = 0.1, seed: int = 0) -> Matrix:
    """``U diag(sigma) V^T + noise * G`` with ``sigma_i = 1/i`` scaled so the
    signal has unit RMS entry, and ``G`` standard normal."""
    m, n = _check_shape(m, n)
    rank = _check_rank(rank, m, n)
    if not noise >= 0:
        raise ParameterError(f"noise must be nonnegative, got {noise}")
    rng = np.random.default_rng(seed)
    sigma = 1.0 / np.arange(1, rank + 1)
    sigma *= np.sqrt(m * n) / np.linalg.norm(sigma)
    U = _orthonormal(rng, m, rank)
    V = _orthonormal(rng, n, rank)
    X = (U * sigma) @ V.T
    if noise > 0:
        X = X + noise * rng.standard_normal((m, n))
    return Matrix.from_dense(X)


def binary_pixel(m: int, n: int, waves: int = 3, seed: int = 0) -> Matrix:
    """Entries ``sign(field) * u`` with ``u`` uniform on [0.8, 1] and ``field``
    a sum of low-frequency cosine products over the row/column grid."""
    m, n = _check_shape(m, n)
    if int(waves) != waves or waves < 1:
        raise ParameterError(f"waves must be a positive integer, got {waves}")
    rng = np.random.default_rng(seed)
    x = np.linspace(0.0, 1.0, m)[:, None]
    y = np.linspace(0.0, 1.0, n)[None, :]
    field = np.zeros((m, n))
    for _ in range(int(waves)):
        fx, fy = rng.uniform(0.5, 2.5, size=2)
        px, py = rng.uniform(0.0, 2 * np.pi, size=2)
        field += rng.standard_normal() * np.cos(2 * np.pi * fx * x + px) * np.cos(2 * np.pi * fy * y + py)
    signs = np.where(field >= 0, 1.0, -1.0)
    return Matrix.from_dense(signs * rng.uniform(0.8, 1.0, size=(m, n)))


GENERATORS = {
    "spiky_powerlaw": spiky_powerlaw,
    "low_rank_noise": low_rank_noise,
    "binary_pixel": binary_pixel,
}


def generate(name: str, params: dict | None = None, seed: int = 0) -> Matrix:
    """Dispatch to a generator by name; ``params`` are keyword arguments."""
    if name not in GENERATORS:
        raise ParameterError(f"unknown generator {name!r}; choose from {sorted(GENERATORS)}")
    params = dict(params or {})
    if "seed" in params:
        raise ParameterError("pass the seed separately, not inside params")
    try:
        return GENERATORS[name](seed=seed, **params)
    except TypeError as exc:
        raise ParameterError(f"bad parameters for {name}: {exc}") from None
