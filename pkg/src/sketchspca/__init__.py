"""Element-wise matrix sketches for fast sparse PCA.

Hybrid l1/l2 entry sampling with an optimised mixing weight, uniform and
leverage-score baselines, greedy thresholding, and sparse PCA solvers whose
output is always scored on the original data.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConsistencyError,
    ConvergenceError,
    DegenerateInputError,
    DimensionError,
    ParameterError,
    ParseError,
    SizeGuardError,
    SketchError,
)
from .matrix import Matrix, center_columns, norms, spectral_norm, top_singular_triplets  # noqa: E402
from .mixing import optimize_alpha, sample_complexity, theoretical_sample_size  # noqa: E402
from .sketch import (  # noqa: E402
    hybrid_probabilities,
    leverage_probabilities,
    leverage_scores,
    sample_sketch,
    select_threshold,
    spectral_deviation,
    threshold_sketch,
    uniform_probabilities,
)
from .spca import (  # noqa: E402
    brute_force_spca,
    exact_pca,
    iter_sparse_pca,
    theorem1_gap,
    threshold_gap,
    truncate_components,
    variance,
)
