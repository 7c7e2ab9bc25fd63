"""High-probability boosting by pairwise-distance order statistics.

``robust_diagonal`` runs ``r`` independent generalized estimators and keeps
the one whose ``floor(r/2)``-th nearest neighbour (among the other
candidates) is closest.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .estimators import DiagonalEstimate, _check_m, generalized_diagonal
from .operators import DimensionMismatch, as_operator
from .probes import ProbeDistribution, ProbeStream, as_stream, get_distribution

MIN_ESTIMATORS = 3


@dataclass(frozen=True)
class MedianSelection:
    candidates: list
    b_values: np.ndarray
    selected_index: int

    @property
    def r(self) -> int:
        return len(self.candidates)

    @property
    def selected(self) -> np.ndarray:
        return self.candidates[self.selected_index]


def num_estimators(delta: float, log=math.log) -> int:
    """``ceil(10 log(1/delta))``, floored at 3.  ``log`` defaults to natural log."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return max(MIN_ESTIMATORS, math.ceil(10.0 * log(1.0 / delta)))


def median_select(candidates) -> MedianSelection:
    """Select the candidate with the smallest ``floor(r/2)``-th neighbour distance.

    For each candidate i, ``B_i`` is the ``floor(r/2)``-th smallest (1-indexed)
    of the ``r - 1`` distances to the other candidates.  Ties in ``argmin B``
    go to the lowest index.
    """
    vecs = [np.asarray(c, dtype=np.float64) for c in candidates]
    r = len(vecs)
    if r < MIN_ESTIMATORS:
        raise ValueError(f"need at least {MIN_ESTIMATORS} candidates, got {r}")
    shape = vecs[0].shape
    if len(shape) != 1 or any(v.shape != shape for v in vecs):
        raise DimensionMismatch("candidates must be vectors of equal length")
    X = np.stack(vecs)
    k = r // 2
    b = np.empty(r)
    for i in range(r):
        others = np.sort(np.linalg.norm(np.delete(X, i, axis=0) - X[i], axis=1))
        b[i] = others[k - 1]
    # np.argmin returns the first minimum
    return MedianSelection(vecs, b, int(np.argmin(b)))


@dataclass(frozen=True)
class RobustEstimate:
    selection: MedianSelection
    estimates: list
    delta: float

    @property
    def values(self) -> np.ndarray:
        return self.selection.selected

    @property
    def r(self) -> int:
        return self.selection.r

    @property
    def num_probes(self) -> int:
        return self.estimates[0].num_probes

    @property
    def matvecs(self) -> int:
        return self.r * self.num_probes


def robust_diagonal(
    op,
    m: int,
    delta: float,
    dist: ProbeDistribution | str,
    seed: int | ProbeStream,
    workers: int = 1,
    log=math.log,
) -> RobustEstimate:
    """Median-trick diagonal estimate from ``r = num_estimators(delta)`` runs.

    Candidate ``i`` uses replicate substream ``i`` of ``seed``, so candidates
    never share probes.  Total cost is ``r * m`` matvecs.
    """
    op = as_operator(op)
    m = _check_m(m)
    r = num_estimators(delta, log=log)
    dist = get_distribution(dist)
    stream = as_stream(seed)

    def run(i) -> DiagonalEstimate:
        return generalized_diagonal(op, m, dist, stream.with_replicate(i))

    if workers > 1 and op.concurrent_safe:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            estimates = list(pool.map(run, range(r)))
    else:
        estimates = [run(i) for i in range(r)]
    selection = median_select([e.values for e in estimates])
    return RobustEstimate(selection, estimates, delta)
