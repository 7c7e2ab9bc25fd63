"""Exact expectations over Rademacher probes by exhaustive enumeration.

Sign vectors are visited in Gray-code order so that consecutive vectors
differ in one coordinate and ``Ag`` is updated with a single column
add/subtract: O(2^n n) work instead of O(2^n n^2).  The enumeration is cut
into blocks by a fixed prefix of the sign vector; blocks are summed in
prefix order, so the result does not depend on how blocks are scheduled.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np

from .operators import as_operator

MAX_ENUM_DIM = 14
MAX_TIGHTNESS_M = 20


class EnumerationTooLarge(ValueError):
    pass


def _dense(matrix, max_dim):
    a = as_operator(matrix).to_dense()
    if a.shape[0] > max_dim:
        raise EnumerationTooLarge(
            f"enumeration over 2^{a.shape[0]} sign vectors exceeds the cap n <= {max_dim}"
        )
    return a


def _gray_block(a: np.ndarray, prefix: np.ndarray, free: int, visit):
    """Visit all sign vectors whose leading coordinates equal ``prefix``.

    ``visit(g, ag)`` is called 2^free times; ``g`` and ``ag`` are reused
    buffers and must not be retained.
    """
    n = a.shape[0]
    g = np.ones(n)
    g[: n - free] = prefix
    ag = a @ g
    cols = a.T.copy()
    visit(g, ag)
    for k in range(1, 2**free):
        # coordinate flipped at step k of the reflected Gray code
        j = n - 1 - ((k & -k).bit_length() - 1)
        if g[j] > 0:
            ag -= 2.0 * cols[j]
        else:
            ag += 2.0 * cols[j]
        g[j] = -g[j]
        visit(g, ag)


def _prefixes(n: int, prefix_bits: int):
    for bits in range(2**prefix_bits):
        yield np.array([1.0 - 2.0 * ((bits >> (prefix_bits - 1 - t)) & 1) for t in range(prefix_bits)])


def _enumerate(a: np.ndarray, make_acc, workers: int = 1, prefix_bits: int | None = None):
    """Run per-block accumulators over every sign vector and return them in prefix order.

    ``make_acc()`` returns ``(visit, result)`` where ``result()`` gives the
    block's partial sums.
    """
    n = a.shape[0]
    if prefix_bits is None:
        prefix_bits = min(n, 4) if n > 8 else 0
    free = n - prefix_bits

    def block(prefix):
        visit, result = make_acc()
        _gray_block(a, prefix, free, visit)
        return result()

    prefixes = list(_prefixes(n, prefix_bits))
    if workers > 1 and len(prefixes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(block, prefixes))
    return [block(p) for p in prefixes]


def _combine(parts):
    total = parts[0]
    for p in parts[1:]:
        total = total + p
    return total


def exact_expected_diag_estimate(matrix, m: int = 1, workers: int = 1, max_dim: int = MAX_ENUM_DIM) -> np.ndarray:
    """Exact mean of ``g ⊙ Ag`` over all 2^n sign vectors.

    The mean of an ``m``-probe average equals the single-probe mean, so ``m``
    only has to be positive.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    a = _dense(matrix, max_dim)
    n = a.shape[0]

    def make_acc():
        acc = np.zeros(n)

        def visit(g, ag):
            np.add(acc, g * ag, out=acc)

        return visit, lambda: acc

    return _combine(_enumerate(a, make_acc, workers)) / 2**n


def exact_expected_squared_error(matrix, workers: int = 1, max_dim: int = MAX_ENUM_DIM) -> float:
    """Exact mean of ``||g ⊙ Ag - diag(A)||^2`` over all sign vectors."""
    a = _dense(matrix, max_dim)
    n = a.shape[0]
    d = np.diagonal(a).copy()

    def make_acc():
        acc = [0.0]

        def visit(g, ag):
            e = g * ag - d
            acc[0] += e @ e

        return visit, lambda: acc[0]

    return _combine(_enumerate(a, make_acc, workers)) / 2**n


def exact_quadratic_form_mean(matrix, workers: int = 1, max_dim: int = MAX_ENUM_DIM) -> float:
    """Exact mean of ``g^T B g`` over all sign vectors."""
    b = _dense(matrix, max_dim)
    n = b.shape[0]

    def make_acc():
        acc = [0.0]

        def visit(g, bg):
            acc[0] += g @ bg

        return visit, lambda: acc[0]

    return _combine(_enumerate(b, make_acc, workers)) / 2**n


def exact_trace_moments(matrix, workers: int = 1, max_dim: int = MAX_ENUM_DIM) -> tuple[float, float]:
    """Exact mean and variance of ``g^T B g`` over all sign vectors.

    Two passes: the variance is the mean squared deviation from the
    enumerated mean, which avoids cancellation in E[T^2] - E[T]^2.
    """
    b = _dense(matrix, max_dim)
    n = b.shape[0]
    mean = exact_quadratic_form_mean(b, workers, max_dim)

    def make_acc():
        acc = [0.0]

        def visit(g, bg):
            dev = g @ bg - mean
            acc[0] += dev * dev

        return visit, lambda: acc[0]

    var = _combine(_enumerate(b, make_acc, workers)) / 2**n
    return mean, var


TIGHTNESS_MATRIX = np.array([[0.0, 1.0], [0.0, 0.0]])


def exact_tightness_pmf(m: int, max_m: int = MAX_TIGHTNESS_M) -> dict:
    """Exact distribution of the first coordinate of the m-probe estimate on [[0,1],[0,0]].

    The single-probe distribution of ``(g ⊙ Ag)_0`` is obtained by
    enumerating the four sign vectors; then every one of the 2^m sequences
    of single-probe outcomes is enumerated.  Keys are ``Fraction`` values
    ``S/m``; values are probabilities.
    """
    if not 1 <= m <= max_m:
        raise EnumerationTooLarge(f"m must be in [1, {max_m}], got {m}")

    single: dict[float, Fraction] = {}
    a = TIGHTNESS_MATRIX

    def visit(g, ag):
        v = float(g[0] * ag[0])
        single[v] = single.get(v, Fraction(0)) + Fraction(1, 4)

    _gray_block(a, np.empty(0), 2, visit)
    outcomes = sorted(single)
    if len(outcomes) != 2:
        raise AssertionError(f"expected a two-point single-probe law, got {single}")
    lo, hi = outcomes
    p_lo, p_hi = single[lo], single[hi]

    # bit t of a sequence index selects the outcome of probe t
    seq = np.arange(2**m, dtype=np.int64)
    n_hi = np.zeros_like(seq)
    for t in range(m):
        n_hi += (seq >> t) & 1
    pmf: dict[Fraction, float] = {}
    counts = np.bincount(n_hi, minlength=m + 1)
    for k in range(m + 1):
        if counts[k] == 0:
            continue
        s = Fraction(int(hi)) * k + Fraction(int(lo)) * (m - k)
        prob = int(counts[k]) * p_hi**k * p_lo ** (m - k)
        pmf[s / m] = pmf.get(s / m, 0.0) + float(prob)
    return dict(sorted(pmf.items()))


def centered_binomial_pmf(m: int) -> dict:
    """Law of ``S/m`` with ``S`` a sum of ``m`` independent fair signs (closed form)."""
    return {Fraction(2 * k - m, m): math.comb(m, k) / 2**m for k in range(m + 1)}


def tightness_failure_probability(pmf: dict, epsilon: float) -> float:
    """``Pr[|S/m| > epsilon]`` under ``pmf``."""
    return float(sum(p for v, p in pmf.items() if abs(v) > epsilon))
