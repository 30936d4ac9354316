"""Choice of the l1/l2 mixing weight and theoretical sample sizes.

The bound objective is ``rho2(alpha) + gamma(alpha) * eps * ||A||_2 / 3`` where

* ``xi_ij = ||A||_F^2 / (alpha ||A||_F^2 / (|a_ij| ||A||_1) + 1 - alpha)``, which
  equals ``a_ij^2 / p_ij`` for the hybrid probabilities;
* ``rho2`` is the largest row or column sum of ``xi`` minus ``sigma_min(A)^2``;
* ``gamma`` is ``max |a_ij| / p_ij + ||A||_2``, attained at the smallest
  nonzero magnitude.

Both terms are convex in ``alpha``, so a grid scan followed by golden-section
refinement finds the global minimiser.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateInputError, ParameterError
from .matrix import Matrix, spectral_norm

__all__ = [
    "MixingProfile",
    "xi",
    "rho_squared",
    "gamma",
    "objective",
    "optimize_alpha",
    "sample_complexity",
    "sigma_min_squared",
    "theoretical_sample_size",
]

DENSE_SIGMA_MIN_LIMIT = 64
GOLDEN_TOL = 1e-4
# relative slack under which two objective values count as a tie
TIE_RTOL = 1e-12


class _Ingredients:
    """Per-matrix quantities reused across every alpha evaluation."""

    def __init__(self, A: Matrix, spectral: Optional[float] = None, seed: int = 0):
        rows, cols, vals = A.nonzeros()
        if vals.size == 0:
            raise DegenerateInputError("mixing quantities are undefined for a zero matrix")
        self.shape = A.shape
        self.rows, self.cols = rows, cols
        self.mag = np.abs(vals)
        self.l1 = float(self.mag.sum())
        self.fro2 = float(np.square(vals).sum())
        self.min_mag = float(self.mag.min())
        self.spectral = spectral_norm(A, seed=seed) if spectral is None else float(spectral)

    def xi(self, alpha):
        return self.fro2 / (alpha * self.fro2 / (self.mag * self.l1) + (1.0 - alpha))

    def rho2(self, alpha, sigma_min_sq):
        x = self.xi(alpha)
        m, n = self.shape
        row = np.bincount(self.rows, weights=x, minlength=m).max()
        col = np.bincount(self.cols, weights=x, minlength=n).max()
        return float(max(row, col) - sigma_min_sq)

    def gamma(self, alpha):
        denom = alpha + (1.0 - alpha) * self.l1 * self.min_mag / self.fro2
        return self.l1 / denom + self.spectral

    def objective(self, alpha, eps, sigma_min_sq):
        return self.rho2(alpha, sigma_min_sq) + self.gamma(alpha) * eps * self.spectral / 3.0


def _check_alpha(alpha):
    if not (0.0 < alpha <= 1.0):
        raise ParameterError(f"alpha must lie in (0, 1], got {alpha}")


def xi(A: Matrix, alpha: float) -> np.ndarray:
    """``xi_ij`` for every nonzero of ``A``, in ``A.nonzeros()`` order."""
    _check_alpha(alpha)
    return _Ingredients(A, spectral=0.0).xi(alpha)


def rho_squared(A: Matrix, alpha: float, sigma_min_sq: float = 0.0) -> float:
    _check_alpha(alpha)
    if sigma_min_sq < 0:
        raise ParameterError("sigma_min_sq must be nonnegative")
    return _Ingredients(A, spectral=0.0).rho2(alpha, sigma_min_sq)


def gamma(A: Matrix, alpha: float, *, spectral: Optional[float] = None, seed: int = 0) -> float:
    _check_alpha(alpha)
    return _Ingredients(A, spectral=spectral, seed=seed).gamma(alpha)


def objective(A: Matrix, alpha: float, eps: float, sigma_min_sq: float = 0.0, *, spectral=None, seed=0) -> float:
    _check_alpha(alpha)
    return _Ingredients(A, spectral=spectral, seed=seed).objective(alpha, eps, sigma_min_sq)


def sigma_min_squared(A: Matrix, exact: Optional[bool] = None) -> float:
    """``sigma_min(A)^2`` (the min(m, n)-th singular value).

    By default this is exact for small matrices (``min(m, n) <= 64``, dense
    SVD) and 0 otherwise, which only loosens the bound.
    """
    if exact is None:
        exact = min(A.shape) <= DENSE_SIGMA_MIN_LIMIT
    if not exact:
        return 0.0
    s = np.linalg.svd(A.toarray(), compute_uv=False)
    return float(s[-1] ** 2)


@dataclass
class MixingProfile:
    alpha_grid: np.ndarray
    objective_values: np.ndarray
    alpha_star: float
    objective_at_star: float
    rho2_at_star: float
    gamma_at_star: float
    eps: float
    sigma_min_sq: float
    spectral_norm: float = 0.0
    notes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "alpha_star": self.alpha_star,
            "objective_at_star": self.objective_at_star,
            "rho2_at_star": self.rho2_at_star,
            "gamma_at_star": self.gamma_at_star,
            "eps": self.eps,
            "sigma_min_sq": self.sigma_min_sq,
            "spectral_norm": self.spectral_norm,
            "grid": [float(self.alpha_grid[0]), float(self.alpha_grid[-1]), int(self.alpha_grid.size)],
        }


def _golden(f, lo, hi, tol):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def optimize_alpha(
    A: Matrix,
    eps: float,
    grid_lo: float = 0.01,
    grid_hi: float = 1.0,
    grid_steps: int = 100,
    sigma_min_sq: float = 0.0,
    *,
    spectral: Optional[float] = None,
    seed: int = 0,
) -> MixingProfile:
    """Minimise the bound objective over ``alpha`` in ``[grid_lo, grid_hi]``.

    A uniform grid is scanned first; golden-section search then refines inside
    the two grid cells around the best point. The refined value replaces the
    grid winner only if it is strictly better, and grid ties go to the
    smallest ``alpha``.
    """
    if not eps > 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    if not (0.0 < grid_lo < grid_hi <= 1.0):
        raise ParameterError(f"need 0 < grid_lo < grid_hi <= 1, got [{grid_lo}, {grid_hi}]")
    if grid_steps < 2:
        raise ParameterError("grid_steps must be at least 2")
    if sigma_min_sq < 0:
        raise ParameterError("sigma_min_sq must be nonnegative")
    ing = _Ingredients(A, spectral=spectral, seed=seed)

    def f(a):
        return ing.objective(a, eps, sigma_min_sq)

    grid = np.linspace(grid_lo, grid_hi, grid_steps)
    values = np.array([f(a) for a in grid])
    best_val = values.min()
    i = int(np.flatnonzero(values <= best_val + TIE_RTOL * abs(best_val))[0])
    alpha_star, obj_star = float(grid[i]), float(values[i])
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    a_ref, f_ref = _golden(f, lo, hi, GOLDEN_TOL)
    if f_ref < best_val - TIE_RTOL * abs(best_val):
        alpha_star, obj_star = float(a_ref), float(f_ref)
    return MixingProfile(
        alpha_grid=grid,
        objective_values=values,
        alpha_star=alpha_star,
        objective_at_star=obj_star,
        rho2_at_star=ing.rho2(alpha_star, sigma_min_sq),
        gamma_at_star=ing.gamma(alpha_star),
        eps=float(eps),
        sigma_min_sq=float(sigma_min_sq),
        spectral_norm=ing.spectral,
        notes={"sigma_min": "min(m,n)-th singular value" if sigma_min_sq > 0 else "skipped (0)"},
    )


def sample_complexity(rho2: float, gamma: float, eps: float, delta: float, m: int, n: int, k: int = 1) -> int:
    """``ceil((2 k^2 / eps^2) (rho2 + eps gamma / (3k)) log((m + n) / delta))``.

    With ``k = 1`` this is the single-sketch spectral-error condition; general
    ``k`` is the same condition at accuracy ``eps / k``. ``rho2`` and ``gamma``
    are taken as given: pass them normalised by ``||A||_2^2`` and ``||A||_2``
    (see :func:`theoretical_sample_size`) to get a relative-error guarantee.
    """
    for name, v in (("rho2", rho2), ("gamma", gamma), ("eps", eps), ("delta", delta), ("m", m), ("n", n), ("k", k)):
        if not v > 0:
            raise ParameterError(f"{name} must be positive, got {v}")
    if not delta < m + n:
        raise ParameterError("delta must be smaller than m + n")
    bound = (2.0 * k * k / eps**2) * (rho2 + eps * gamma / (3.0 * k)) * math.log((m + n) / delta)
    return int(math.ceil(bound))


def theoretical_sample_size(
    A: Matrix, eps: float, delta: float, k: int = 1, profile: Optional[MixingProfile] = None, **alpha_kw
):
    """Sample size guaranteeing ``||A - At||_2 <= (eps / k) ||A||_2`` w.p. ``1 - delta``.

    Uses the optimal mixing weight (or ``profile``) and the dimensionless
    ``rho2 / ||A||_2^2`` and ``gamma / ||A||_2``. Returns ``(s, profile)``.
    """
    if profile is None:
        alpha_kw.setdefault("sigma_min_sq", sigma_min_squared(A))
        profile = optimize_alpha(A, eps / k, **alpha_kw)
    two = profile.spectral_norm
    s = sample_complexity(
        max(profile.rho2_at_star, np.finfo(float).tiny) / two**2,
        profile.gamma_at_star / two,
        eps,
        delta,
        A.m,
        A.n,
        k,
    )
    return s, profile
