"""Self-check suite run by ``diagest verify``.

Each check compares an exhaustive-enumeration result with the closed form
it should equal, on small built-in fixture matrices.  A fixture carries its
recorded diagonal separately from the matrix so that a corrupted record is
caught by the unbiasedness check.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import oracle
from .operators import frobenius_norm, off_diagonal_frobenius
from .probes import RADEMACHER, ProbeStream, sample_probe
from .estimators import single_probe_error
from .generators import tightness2


@dataclass
class Fixture:
    name: str
    matrix: np.ndarray
    diagonal: np.ndarray = None

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.diagonal is None:
            self.diagonal = np.diagonal(self.matrix).copy()


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0


@dataclass
class VerifyReport:
    results: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_dict(self):
        return {
            "passed": self.passed,
            "checks": [vars(r) for r in self.results],
        }

    def lines(self):
        for r in self.results:
            status = "PASS" if r.passed else "FAIL"
            yield f"{status} {r.name}" + (f": {r.detail}" if r.detail else "")


def default_fixtures() -> list[Fixture]:
    rng = np.random.default_rng(20230117)
    fixtures = [
        Fixture("tightness2", tightness2()),
        Fixture("identity4", np.eye(4)),
        Fixture("symmetric2", [[1.0, 2.0], [2.0, 1.0]]),
    ]
    for n in (3, 5, 6, 8, 10):
        fixtures.append(Fixture(f"gaussian{n}", rng.standard_normal((n, n))))
    return fixtures


def _rel(a, b):
    scale = max(abs(b), 1e-300)
    return abs(a - b) / scale


def _check(name, fn):
    t0 = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # report, don't abort the suite
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    return CheckResult(name, bool(ok), detail, time.perf_counter() - t0)


def check_unbiasedness(fx: Fixture, tol=1e-10):
    mean = oracle.exact_expected_diag_estimate(fx.matrix)
    dev = float(np.max(np.abs(mean - fx.diagonal)))
    scale = max(frobenius_norm(fx.matrix), 1.0)
    return dev <= tol * scale, f"matrix {fx.name}: max |E[g*Ag] - diag| = {dev:.3g}"


def check_expected_squared_error(fx: Fixture, tol=1e-10):
    got = oracle.exact_expected_squared_error(fx.matrix)
    want = off_diagonal_frobenius(fx.matrix) ** 2
    ok = abs(got - want) <= tol * max(want, frobenius_norm(fx.matrix) ** 2, 1e-300)
    return ok, f"matrix {fx.name}: enumerated {got:.17g} vs ||offdiag||_F^2 {want:.17g}"


def check_trace_moments(fx: Fixture, tol=1e-10):
    # g'Ag only sees the symmetric part, and the variance formula needs symmetry
    b = 0.5 * (fx.matrix + fx.matrix.T)
    mean, var = oracle.exact_trace_moments(b)
    tr = float(np.trace(b))
    var_want = 2.0 * off_diagonal_frobenius(b) ** 2
    scale = frobenius_norm(b)
    ok_mean = abs(mean - tr) <= tol * max(abs(tr), scale)
    ok_var = abs(var - var_want) <= tol * max(var_want, scale**2)
    return ok_mean and ok_var, f"matrix {fx.name}: mean {mean:.6g} (tr {tr:.6g}), var {var:.6g} (2||offdiag||^2 {var_want:.6g})"


def check_error_trace_identity(n=50, probes=1000, seed=7, tol=1e-9):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    b = off.T @ off
    d = np.diagonal(a).copy()
    scale = float(np.sum(a * a))
    worst = 0.0
    stream = ProbeStream(seed)
    for z in range(probes):
        g = sample_probe(RADEMACHER, n, stream, z)
        e = single_probe_error(a, g, diag=d)
        worst = max(worst, abs(e @ e - g @ b @ g))
    return worst <= tol * scale, f"max |‖e‖² - gᵀBg| / ‖A‖_F² = {worst / scale:.3g} over {probes} probes"


def check_tightness_pmf(max_m=12, tol=1e-12):
    worst = 0.0
    for m in range(1, max_m + 1):
        got = oracle.exact_tightness_pmf(m)
        want = oracle.centered_binomial_pmf(m)
        if set(got) != set(want):
            return False, f"m={m}: support {sorted(got)} differs from binomial support"
        worst = max(worst, max(abs(got[k] - want[k]) for k in want))
    return worst <= tol, f"max pmf deviation {worst:.3g} for m <= {max_m}"


def run_checks(fixtures: list[Fixture] | None = None) -> VerifyReport:
    if fixtures is None:
        fixtures = default_fixtures()
    report = VerifyReport()
    for fx in fixtures:
        report.results.append(_check(f"unbiasedness[{fx.name}]", lambda fx=fx: check_unbiasedness(fx)))
        report.results.append(_check(f"expected_squared_error[{fx.name}]", lambda fx=fx: check_expected_squared_error(fx)))
        report.results.append(_check(f"trace_moments[{fx.name}]", lambda fx=fx: check_trace_moments(fx)))
    report.results.append(_check("error_trace_identity", check_error_trace_identity))
    report.results.append(_check("tightness_pmf", check_tightness_pmf))
    return report
