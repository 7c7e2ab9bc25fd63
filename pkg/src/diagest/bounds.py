"""Closed-form expected errors and tail bounds for the diagonal estimators.

The absolute constants in the high-probability bounds are not known
numerically, so every such bound takes its constant ``c`` as a parameter
(default 1.0).  Those bounds describe the shape of the error curve only.
All logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .operators import as_operator, exact_diagonal, frobenius_norm, off_diagonal_frobenius
from .probes import RADEMACHER, ProbeStream, as_stream, sample_probe


def _check_m(m):
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")


def _check_delta(delta, closed=False):
    ok = 0.0 < delta <= 1.0 if closed else 0.0 < delta < 1.0
    if not ok:
        interval = "(0, 1]" if closed else "(0, 1)"
        raise ValueError(f"delta must lie in {interval}, got {delta}")


def _diag_sq(a) -> float:
    d = exact_diagonal(a)
    return float(d @ d)


def expected_squared_error_rademacher(a, m: int) -> float:
    """E||r^m(A) - diag(A)||^2 = ||offdiag(A)||_F^2 / m."""
    _check_m(m)
    return off_diagonal_frobenius(a) ** 2 / m


def expected_squared_error_general(a, m: int, c4: float) -> float:
    """Expected squared error for probes with fourth moment ``c4``.

    ``(||offdiag(A)||_F^2 + (c4 - 1) ||diag(A)||^2) / m``
    """
    _check_m(m)
    if c4 < 1:
        raise ValueError(f"fourth moment of a variance-1 variable is >= 1, got {c4}")
    return (off_diagonal_frobenius(a) ** 2 + (c4 - 1.0) * _diag_sq(a)) / m


def quantity_E(a, c4: float) -> float:
    if c4 < 1:
        raise ValueError(f"fourth moment of a variance-1 variable is >= 1, got {c4}")
    return math.sqrt((c4 - 1.0) * _diag_sq(a) + off_diagonal_frobenius(a) ** 2)


def markov_bound(a, m: int, delta: float, c4: float) -> float:
    """Error level exceeded with probability at most ``delta`` (Markov on the 2nd moment)."""
    _check_m(m)
    _check_delta(delta)
    return math.sqrt(1.0 / (m * delta)) * quantity_E(a, c4)


def main_theorem_bound(a, m: int, delta: float, c: float = 1.0) -> float:
    """``c * sqrt(log(2/delta)/m) * ||offdiag(A)||_F`` for Rademacher probes."""
    _check_m(m)
    _check_delta(delta, closed=True)
    if c <= 0:
        raise ValueError("constant c must be positive")
    return c * math.sqrt(math.log(2.0 / delta) / m) * off_diagonal_frobenius(a)


def subgauss_bound(a, m: int, delta: float, K: float, c: float = 1.0) -> float:
    """``c K^2 sqrt(L/m + L^4/m^2) ||A||_F`` with ``L = log(2/delta)``."""
    _check_m(m)
    _check_delta(delta, closed=True)
    if K <= 0 or c <= 0:
        raise ValueError("K and c must be positive")
    L = math.log(2.0 / delta)
    return c * K * K * math.sqrt(L / m + L**4 / m**2) * frobenius_norm(a)


def probes_needed(epsilon: float, delta: float, mode: str = "main") -> int:
    """Probe count for error ``epsilon`` (relative to the matrix scale) w.p. 1 - delta.

    ``main``: ceil(log(2/delta)/epsilon^2), taking the unknown constant as 1.
    ``markov``: ceil(1/(epsilon^2 delta)).
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    _check_delta(delta)
    if mode == "main":
        return max(1, math.ceil(math.log(2.0 / delta) / epsilon**2))
    if mode == "markov":
        return max(1, math.ceil(1.0 / (epsilon**2 * delta)))
    raise ValueError(f"mode must be 'main' or 'markov', got {mode!r}")


def estimate_offdiag_frobenius_sq(op, num_probes: int, seed: int | ProbeStream, diag=None):
    """Monte Carlo estimate of ||offdiag(A)||_F^2 for a matvec-only operator.

    Uses that ||g ⊙ Ag - diag(A)||^2 has mean ||offdiag(A)||_F^2 for
    Rademacher ``g``.  ``diag`` defaults to basis-vector extraction (n extra
    matvecs).  Returns ``(mean, standard_error)``.
    """
    op = as_operator(op)
    if num_probes < 2:
        raise ValueError("need at least 2 probes for a standard error")
    if diag is None:
        diag = exact_diagonal(op, allow_matvecs=not op.has_explicit_entries)
    stream = as_stream(seed)
    sq = np.empty(num_probes)
    for z in range(num_probes):
        g = sample_probe(RADEMACHER, op.dim, stream, z)
        e = g * op.matvec(g) - diag
        sq[z] = e @ e
    return float(sq.mean()), float(sq.std(ddof=1) / math.sqrt(num_probes))


@dataclass
class BoundReport:
    """Bound calculator outputs for one ``(m, delta)``; the constant-bearing
    bounds are shape-only."""

    m: int
    delta: float
    c4: float
    K: float
    c: float
    expected_sq_error: float
    markov_bound: float
    main_bound: float
    subgauss_bound: float
    quantity_E: float
    note: str = "main_bound and subgauss_bound are shape-only up to the constant c"

    def to_dict(self) -> dict:
        return asdict(self)


def bound_report(a, m: int, delta: float, c4: float, K: float, c: float = 1.0) -> BoundReport:
    a = as_operator(a)
    return BoundReport(
        m=int(m),
        delta=float(delta),
        c4=float(c4),
        K=float(K),
        c=float(c),
        expected_sq_error=expected_squared_error_general(a, m, c4),
        markov_bound=markov_bound(a, m, delta, c4),
        main_bound=main_theorem_bound(a, m, delta, c),
        subgauss_bound=subgauss_bound(a, m, delta, K, c),
        quantity_E=quantity_E(a, c4),
    )
