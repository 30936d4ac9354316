"""Walker/Vose alias tables for O(1) categorical draws."""

from __future__ import annotations

import numpy as np

from .errors import ParameterError


class AliasTable:
    """Alias table over ``len(p)`` outcomes.

    Construction is the usual small/large pairing, done in vectorized rounds:
    every small cell is assigned to the large cell whose cumulative excess
    interval contains the start of the small cell's cumulative deficit. A
    large cell can be overdrawn by at most one straddling deficit, which keeps
    its residual mass in [0, 1) and sends it to the small pool next round.
    """

    __slots__ = ("prob", "alias")

    def __init__(self, p):
        p = np.asarray(p, dtype=np.float64)
        if p.ndim != 1 or p.size == 0:
            raise ParameterError("probabilities must be a nonempty 1-D array")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ParameterError("probabilities must be finite and nonnegative")
        total = p.sum()
        if total <= 0:
            raise ParameterError("probabilities sum to zero")
        N = p.size
        q = (p / total) * N
        prob = np.ones(N)
        alias = np.arange(N, dtype=np.int64)

        small = np.flatnonzero(q < 1.0)
        large = np.flatnonzero(q >= 1.0)
        while small.size and large.size:
            deficit = 1.0 - q[small]
            starts = np.cumsum(deficit) - deficit
            excess_end = np.cumsum(q[large] - 1.0)
            slot = np.searchsorted(excess_end, starts, side="right")
            np.minimum(slot, large.size - 1, out=slot)
            owners = large[slot]
            prob[small] = q[small]
            alias[small] = owners
            q[large] -= np.bincount(slot, weights=deficit, minlength=large.size)
            demoted = q[large] < 1.0
            small = large[demoted]
            large = large[~demoted]
        # leftovers are 1 up to rounding
        self.prob = prob
        self.alias = alias

    def __len__(self):
        return self.prob.size

    def implied_probabilities(self) -> np.ndarray:
        """Probabilities the table actually samples from (for verification)."""
        N = self.prob.size
        out = self.prob.copy()
        out += np.bincount(self.alias, weights=1.0 - self.prob, minlength=N)
        return out / N

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        cells = rng.integers(0, self.prob.size, size=size)
        keep = rng.random(size) < self.prob[cells]
        return np.where(keep, cells, self.alias[cells])
