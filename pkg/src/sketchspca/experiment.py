"""Seeded sketch-then-solve experiments over a grid of variants and sparsities.

Variant names follow ``<source>_<solver>``. Sources: ``G`` is the full
(centered) matrix, ``H`` is the optimal or fixed hybrid sketch, ``U`` is the
uniform sketch, ``L`` is the leverage-score sketch and ``T`` is the greedy
thresholded sketch. Solvers: ``max`` keeps the ``r`` largest loadings of the
exact components; ``sp`` runs the truncated power method. Every variance is
measured on the original centered matrix, and every ratio is taken against the
``G`` variant with the same solver, ``r`` and seed.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

import numpy as np

from . import __version__
from .errors import ConvergenceError, ParameterError, SketchError
from .generators import generate
from .io import load_matrix
from .matrix import Matrix, center_columns
from .mixing import optimize_alpha, sigma_min_squared
from .sketch import (
    hybrid_probabilities,
    leverage_probabilities,
    leverage_scores,
    sample_sketch,
    select_threshold,
    spectral_deviation,
    threshold_sketch,
    uniform_probabilities,
)
from .spca import ComponentSet, exact_pca, iter_sparse_pca, truncate_components, variance

__all__ = ["VARIANTS", "ExperimentSpec", "ExperimentReport", "CellResult", "run_experiment", "load_dataset"]

VARIANTS = ("G_max", "G_sp", "H_max", "H_sp", "U_max", "U_sp", "L_sp", "T_sp")
SCHEMA_VERSION = 1
ALPHA_GRID = (0.01, 1.0, 100)


@dataclass
class ExperimentSpec:
    """One experiment. ``dataset`` is either ``{"generator": name, "params": {...},
    "seed": int}`` or ``{"path": str, "format": str}``."""

    dataset: dict
    variants: list = field(default_factory=lambda: ["G_max", "G_sp", "H_max", "H_sp", "U_max", "U_sp"])
    r_list: list = field(default_factory=lambda: [10, 20])
    k: int = 1
    sample_fraction: Optional[float] = 0.05
    s: Optional[int] = None
    budget_basis: str = "auto"  # nnz for sparse storage, m*n for dense
    center: bool = True
    eps: float = 0.5
    delta: float = 0.1
    alpha_mode: Union[str, float] = "optimal"
    seeds: list = field(default_factory=lambda: [0])
    leverage_rank: int = 2
    sketch_mode: str = "sample"  # "copy" uses the matrix itself as every sampled sketch
    timing_repeats: int = 5
    deviations: bool = False
    restarts: int = 8
    threads: int = 1

    def validate(self):
        if not self.variants:
            raise ParameterError("variants must be nonempty")
        bad = [v for v in self.variants if v not in VARIANTS]
        if bad:
            raise ParameterError(f"unknown variants {bad}; choose from {list(VARIANTS)}")
        if len(set(self.variants)) != len(self.variants):
            raise ParameterError("variants must be distinct")
        for v in self.variants:
            base = "G_max" if v.endswith("_max") else "G_sp"
            if base not in self.variants:
                raise ParameterError(f"variant {v} needs {base} in the same experiment for its ratio")
        if not self.r_list or any(int(r) != r or r < 1 for r in self.r_list):
            raise ParameterError("r_list must be a nonempty list of positive integers")
        if not self.seeds:
            raise ParameterError("seeds must be nonempty")
        if int(self.k) != self.k or self.k < 1:
            raise ParameterError("k must be a positive integer")
        if self.s is not None:
            if int(self.s) != self.s or self.s < 1:
                raise ParameterError("sample budget s must be at least 1")
        elif self.sample_fraction is None or not 0 < self.sample_fraction:
            raise ParameterError("give s or a positive sample_fraction")
        if self.budget_basis not in ("auto", "nnz", "entries"):
            raise ParameterError("budget_basis must be auto, nnz or entries")
        if self.sketch_mode not in ("sample", "copy"):
            raise ParameterError("sketch_mode must be sample or copy")
        if self.alpha_mode != "optimal":
            try:
                a = float(self.alpha_mode)
            except (TypeError, ValueError):
                raise ParameterError(f"alpha_mode must be 'optimal' or a number, got {self.alpha_mode!r}") from None
            if not 0 < a <= 1:
                raise ParameterError("fixed alpha must lie in (0, 1]")
        if not self.eps > 0 or not 0 < self.delta < 1:
            raise ParameterError("need eps > 0 and 0 < delta < 1")
        if self.timing_repeats < 1 or self.restarts < 1 or self.threads < 1:
            raise ParameterError("timing_repeats, restarts and threads must be at least 1")
        if self.leverage_rank < 1:
            raise ParameterError("leverage_rank must be at least 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        # scheduling only; results do not depend on it
        d.pop("threads")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        names = set(cls.__dataclass_fields__)
        unknown = sorted(set(d) - names)
        if unknown:
            raise ParameterError(f"unknown experiment fields {unknown}")
        if "dataset" not in d:
            raise ParameterError("experiment needs a dataset")
        return cls(**d)


@dataclass
class CellResult:
    variant: str
    r: int
    seed: int
    f: Optional[float] = None
    ratio: Optional[float] = None
    tau_ms: Optional[float] = None
    sketch_ms: Optional[float] = None
    sketch_nnz: Optional[int] = None
    s: Optional[int] = None
    alpha: Optional[float] = None
    dev_op: Optional[float] = None
    dev_gram: Optional[float] = None
    converged: Optional[bool] = None
    error: Optional[str] = None


@dataclass
class ExperimentReport:
    spec: dict
    cells: list
    medians: list
    meta: dict

    def cell(self, variant, r, seed) -> CellResult:
        for c in self.cells:
            if c.variant == variant and c.r == r and c.seed == seed:
                return c
        raise KeyError((variant, r, seed))

    def median(self, variant, r, key="ratio"):
        for row in self.medians:
            if row["variant"] == variant and row["r"] == r:
                return row[key]
        raise KeyError((variant, r))


def load_dataset(desc: dict) -> Matrix:
    if not isinstance(desc, dict):
        raise ParameterError("dataset must be a mapping")
    if "generator" in desc:
        return generate(desc["generator"], desc.get("params", {}), seed=int(desc.get("seed", 0)))
    if "path" in desc:
        return load_matrix(desc["path"], desc.get("format"))
    raise ParameterError("dataset needs 'generator' or 'path'")


def _err(exc) -> str:
    return f"{type(exc).__name__}: {exc}"


def _timed(fn, repeats):
    """Run once to warm up (keeping the result), then time ``repeats`` runs."""
    out = fn()
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return out, 1e3 * float(np.median(times))


def _budget(spec, A):
    if spec.s is not None:
        return int(spec.s)
    basis = spec.budget_basis
    if basis == "auto":
        basis = "nnz" if A.is_sparse else "entries"
    total = A.nnz if basis == "nnz" else A.m * A.n
    return max(1, int(round(spec.sample_fraction * total)))


def _solve(M, kind, k, r, spec, seed):
    if kind == "max":
        try:
            comps = exact_pca(M, k, seed=seed)
        except ConvergenceError as exc:
            # keep the best iterate when every component was reached; flagged unconverged
            if exc.result is None or len(exc.result) < k:
                raise
            comps = ComponentSet(exc.result.V.copy(), M.n, "exact", False, exc.result.iterations)
        return truncate_components(comps, r)
    return iter_sparse_pca(M, k, r, restarts=spec.restarts, seed=seed)


def _sources(spec, A, s, seed, dists):
    """Sketches needed by the requested variants: name -> (Matrix, build ms, alpha, s) or exception."""
    wanted = {v.split("_")[0] for v in spec.variants} - {"G"}
    out = {}
    for src in sorted(wanted):
        t0 = time.perf_counter()
        try:
            if src == "T":
                delta, _ = select_threshold(A, spec.eps, seed=seed)
                M, alpha, used = threshold_sketch(A, delta), None, None
            elif spec.sketch_mode == "copy":
                M, alpha, used = A, dists.get(src + "_alpha"), s
            else:
                dist = dists[src]
                if isinstance(dist, Exception):
                    raise dist
                M = sample_sketch(A, dist, s, seed).sketch
                alpha, used = dist.alpha, s
            out[src] = (M, 1e3 * (time.perf_counter() - t0), alpha, used)
        except SketchError as exc:
            out[src] = exc
    return out


def _distributions(spec, A, base_seed):
    """Sampling distributions shared by every seed (they depend on A only)."""
    dists = {}
    wanted = {v.split("_")[0] for v in spec.variants}
    if "H" in wanted:
        try:
            if spec.alpha_mode == "optimal":
                lo, hi, steps = ALPHA_GRID
                prof = optimize_alpha(A, spec.eps, lo, hi, steps, sigma_min_squared(A), seed=base_seed)
                alpha = prof.alpha_star
            else:
                alpha = float(spec.alpha_mode)
            dists["H"] = hybrid_probabilities(A, alpha)
            dists["H_alpha"] = alpha
        except SketchError as exc:
            dists["H"] = exc
    if "U" in wanted:
        try:
            dists["U"] = uniform_probabilities(A)
        except SketchError as exc:
            dists["U"] = exc
    if "L" in wanted:
        try:
            scores = leverage_scores(A, spec.leverage_rank, seed=base_seed)
            dists["L"] = leverage_probabilities(scores, A.m, A.n)
        except SketchError as exc:
            dists["L"] = exc
    return dists


def _run_seed(spec, A, s, seed, dists):
    sources = _sources(spec, A, s, seed, dists)
    dev_cache = {}
    cells = []
    for variant in spec.variants:
        src, kind = variant.split("_")
        for r in spec.r_list:
            cell = CellResult(variant, int(r), int(seed))
            try:
                if src == "G":
                    M = A
                else:
                    got = sources[src]
                    if isinstance(got, Exception):
                        raise got
                    M, cell.sketch_ms, cell.alpha, cell.s = got
                    cell.sketch_nnz = M.nnz
                    if spec.deviations:
                        if src not in dev_cache:
                            dev_cache[src] = spectral_deviation(A, M, seed=seed)
                        cell.dev_op, cell.dev_gram = dev_cache[src]
                comps, cell.tau_ms = _timed(lambda: _solve(M, kind, spec.k, int(r), spec, seed), spec.timing_repeats)
                cell.converged = bool(comps.converged)
                # variance is always taken on the original centered matrix
                cell.f = variance(A, comps)
            except SketchError as exc:
                cell.error = _err(exc)
            cells.append(cell)
    return cells


def _fill_ratios(cells):
    base = {(c.variant, c.r, c.seed): c.f for c in cells if c.variant in ("G_max", "G_sp")}
    for c in cells:
        ref = base.get(("G_max" if c.variant.endswith("_max") else "G_sp", c.r, c.seed))
        if c.f is not None and ref:
            c.ratio = c.f / ref


def _median(xs):
    xs = [x for x in xs if x is not None]
    return float(np.median(xs)) if xs else None


def _medians(spec, cells):
    rows = []
    for variant in spec.variants:
        for r in spec.r_list:
            sel = [c for c in cells if c.variant == variant and c.r == r]
            rows.append(
                {
                    "variant": variant,
                    "r": int(r),
                    "f": _median([c.f for c in sel]),
                    "ratio": _median([c.ratio for c in sel]),
                    "tau_ms": _median([c.tau_ms for c in sel]),
                    "sketch_ms": _median([c.sketch_ms for c in sel]),
                    "sketch_nnz": _median([c.sketch_nnz for c in sel]),
                    "errors": sum(c.error is not None for c in sel),
                }
            )
    return rows


def run_experiment(spec: ExperimentSpec, matrix: Optional[Matrix] = None) -> ExperimentReport:
    """Run every (seed, variant, r) cell of ``spec``.

    ``matrix`` overrides the dataset descriptor (used for in-memory data).
    Per-cell failures are recorded in ``CellResult.error``; the remaining
    cells still run.
    """
    spec.validate()
    A = load_dataset(spec.dataset) if matrix is None else matrix
    # the budget basis follows the stored data, before centering densifies it
    s = _budget(spec, A)
    if spec.center:
        A = center_columns(A)
    base_seed = int(spec.seeds[0])
    dists = _distributions(spec, A, base_seed)
    if spec.threads > 1 and len(spec.seeds) > 1:
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            per_seed = list(pool.map(lambda sd: _run_seed(spec, A, s, int(sd), dists), spec.seeds))
    else:
        per_seed = [_run_seed(spec, A, s, int(sd), dists) for sd in spec.seeds]
    cells = [c for chunk in per_seed for c in chunk]
    _fill_ratios(cells)
    meta = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "shape": list(A.shape),
        "nnz": int(A.nnz),
        "storage": "sparse" if A.is_sparse else "dense",
        "centered": bool(spec.center),
        "sample_budget": s,
        "alpha_grid": list(ALPHA_GRID),
        "alpha_star": dists.get("H_alpha"),
        "seeds": [int(x) for x in spec.seeds],
        "tau": "solver only, median of repeats after one warm-up; sketch build time reported separately",
    }
    return ExperimentReport(spec.to_dict(), cells, _medians(spec, cells), meta)
