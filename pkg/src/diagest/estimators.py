"""Stochastic diagonal and trace estimators.

All estimators stream probes one at a time into a running sum, so memory is
O(n) regardless of the probe count.  With ``workers > 1`` (and a
``concurrent_safe`` operator) probes are evaluated on a thread pool, but
results are still folded into the sum in probe-index order, so the output is
bit-identical to a serial run.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .operators import LinearOperator, as_operator, exact_diagonal, hadamard, _check_vector
from .probes import RADEMACHER, ProbeDistribution, ProbeStream, as_stream, get_distribution, sample_probe


class DegenerateDenominator(ArithmeticError):
    """A coordinate of sum_z g_z * g_z fell below the normalization threshold."""


@dataclass(frozen=True)
class DiagonalEstimate:
    values: np.ndarray
    num_probes: int
    dist: ProbeDistribution
    stream: ProbeStream

    @property
    def master_seed(self) -> int:
        return self.stream.master_seed

    @property
    def m(self) -> int:
        return self.num_probes


def _check_m(m):
    if int(m) != m or m < 1:
        raise ValueError(f"number of probes must be a positive integer, got {m}")
    return int(m)


def _map_probes(
    op: LinearOperator,
    m: int,
    dist: ProbeDistribution,
    stream: ProbeStream,
    fn: Callable[[np.ndarray, np.ndarray], object],
    workers: int = 1,
) -> Iterator:
    """Yield ``fn(g_z, A g_z)`` for z = 0..m-1, in order."""

    def one(z):
        g = sample_probe(dist, op.dim, stream, z)
        return fn(g, op.matvec(g))

    if workers <= 1 or not op.concurrent_safe or m == 1:
        for z in range(m):
            yield one(z)
        return
    batch = 4 * workers
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for start in range(0, m, batch):
            yield from pool.map(one, range(start, min(start + batch, m)))


def _running_sum(items, n):
    total = np.zeros(n)
    for item in items:
        total += item
    return total


def generalized_diagonal(
    op, m: int, dist: ProbeDistribution | str, seed: int | ProbeStream, workers: int = 1
) -> DiagonalEstimate:
    """Average of ``g ⊙ Ag`` over ``m`` i.i.d. probes drawn from ``dist``.

    Performs exactly ``m`` matvecs.  With ``dist="rademacher"`` this is
    Hutchinson's diagonal estimator.
    """
    op = as_operator(op)
    m = _check_m(m)
    dist = get_distribution(dist)
    stream = as_stream(seed)
    total = _running_sum(_map_probes(op, m, dist, stream, hadamard, workers), op.dim)
    return DiagonalEstimate(total / m, m, dist, stream)


def hutchinson_diagonal(op, m: int, seed: int | ProbeStream, workers: int = 1) -> DiagonalEstimate:
    """Hutchinson's diagonal estimator with Rademacher probes."""
    return generalized_diagonal(op, m, RADEMACHER, seed, workers)


def normalized_diagonal(
    op, m: int, dist: ProbeDistribution | str, seed: int | ProbeStream, workers: int = 1
) -> DiagonalEstimate:
    """Entrywise ratio ``(sum_z g_z ⊙ A g_z) / (sum_z g_z ⊙ g_z)``.

    Raises ``DegenerateDenominator`` if some coordinate of the denominator has
    magnitude below ``1e-12 * m``.
    """
    op = as_operator(op)
    m = _check_m(m)
    dist = get_distribution(dist)
    stream = as_stream(seed)
    num = np.zeros(op.dim)
    den = np.zeros(op.dim)
    for gag, gg in _map_probes(op, m, dist, stream, lambda g, ag: (g * ag, g * g), workers):
        num += gag
        den += gg
    bad = np.abs(den) < 1e-12 * m
    if np.any(bad):
        raise DegenerateDenominator(
            f"normalizer vanished at coordinates {np.flatnonzero(bad)[:10].tolist()}"
        )
    return DiagonalEstimate(num / den, m, dist, stream)


def hutchinson_trace(op, m: int, seed: int | ProbeStream, workers: int = 1) -> float:
    """Average of ``g^T A g`` over ``m`` Rademacher probes."""
    op = as_operator(op)
    m = _check_m(m)
    stream = as_stream(seed)
    total = 0.0
    for q in _map_probes(op, m, RADEMACHER, stream, lambda g, ag: float(g @ ag), workers):
        total += q
    return total / m


def single_probe_error(op, g, diag=None) -> np.ndarray:
    """Error vector ``g ⊙ Ag - diag(A)`` of a single probe ``g``.

    ``diag`` may be passed to avoid recomputing ``diag(A)`` across probes.
    """
    op = as_operator(op)
    g = _check_vector(g, op.dim, "probe")
    if diag is None:
        diag = exact_diagonal(op)
    return hadamard(g, op.matvec(g)) - diag
