"""Named test matrices for experiments.

Generator specs are strings of the form ``name[:arg[:arg...]]``:

- ``offdiag-uniform:n[:seed]`` : zero diagonal, i.i.d. U(-1, 1) off-diagonal
  entries rescaled so the off-diagonal Frobenius norm is 1.
- ``spiked-diag:n[:rho[:seed]]`` : ``offdiag-uniform`` plus a single diagonal
  spike ``A[0, 0] = rho`` (default 1), so ``||diag(A)|| = rho`` and the
  off-diagonal norm stays 1.
- ``tightness2`` : the 2x2 matrix ``[[0, 1], [0, 0]]``.
"""

from __future__ import annotations

import numpy as np

from .operators import DenseMatrix


def offdiag_uniform(n: int, seed: int = 0) -> np.ndarray:
    if n < 2:
        raise ValueError("offdiag-uniform needs n >= 2")
    rng = np.random.default_rng([seed, n])
    a = rng.uniform(-1.0, 1.0, size=(n, n))
    np.fill_diagonal(a, 0.0)
    return a / np.linalg.norm(a, "fro")


def spiked_diag(n: int, rho: float = 1.0, seed: int = 0) -> np.ndarray:
    a = offdiag_uniform(n, seed)
    a[0, 0] = rho
    return a


def tightness2() -> np.ndarray:
    return np.array([[0.0, 1.0], [0.0, 0.0]])


def from_spec(spec: str) -> tuple[str, DenseMatrix]:
    """Build a generator matrix from its spec string; returns ``(matrix_id, operator)``."""
    name, *args = spec.strip().split(":")
    try:
        if name == "offdiag-uniform":
            if not 1 <= len(args) <= 2:
                raise ValueError("usage offdiag-uniform:n[:seed]")
            n = int(args[0])
            seed = int(args[1]) if len(args) > 1 else 0
            return f"offdiag-uniform:{n}:{seed}", DenseMatrix(offdiag_uniform(n, seed))
        if name == "spiked-diag":
            if not 1 <= len(args) <= 3:
                raise ValueError("usage spiked-diag:n[:rho[:seed]]")
            n = int(args[0])
            rho = float(args[1]) if len(args) > 1 else 1.0
            seed = int(args[2]) if len(args) > 2 else 0
            return f"spiked-diag:{n}:{rho:g}:{seed}", DenseMatrix(spiked_diag(n, rho, seed))
        if name == "tightness2":
            if args:
                raise ValueError("tightness2 takes no arguments")
            return "tightness2", DenseMatrix(tightness2())
    except ValueError as exc:
        raise ValueError(f"bad generator spec {spec!r}: {exc}") from None
    raise ValueError(f"unknown generator {name!r}; choose offdiag-uniform, spiked-diag or tightness2")
