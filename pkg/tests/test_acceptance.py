"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Every test measures its own wall time and fails when the runtime budget is
exceeded as well as when the statistical or exact check does not hold.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy import stats

from diagest import bounds, oracle
from diagest.estimators import generalized_diagonal, hutchinson_diagonal, normalized_diagonal, single_probe_error
from diagest.experiment import ExperimentConfig, nearest_rank_quantile, run_trials
from diagest.generators import from_spec
from diagest.median import num_estimators, robust_diagonal
from diagest.operators import off_diagonal_frobenius
from diagest.probes import GAUSSIAN, RADEMACHER, ProbeStream, sample_probe


def corpus(seed, count=20, sizes=range(2, 11)):
    rng = np.random.default_rng(seed)
    sizes = list(sizes)
    return [rng.standard_normal((sizes[i % len(sizes)],) * 2) for i in range(count)]


def q95(errors):
    return nearest_rank_quantile(errors, 0.95)


def sweep_q95(spec, m_values, trials, seed, dist="rademacher"):
    matrix_id, op = from_spec(spec)
    recs = run_trials(op, matrix_id, ExperimentConfig(m_values=list(m_values), trials=trials, seed=seed, dist=dist))
    return op, {m: q95([r.error_l2 for r in recs if r.m == m]) for m in m_values}


class Clock:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


def test_01_exact_unbiasedness(record_criterion):
    with Clock() as clock:
        worst = max(
            np.max(np.abs(oracle.exact_expected_diag_estimate(a) - np.diagonal(a))) / np.linalg.norm(a)
            for a in corpus(101)
        )
    ok = worst <= 1e-10 and clock.seconds < 5
    record_criterion(1, ok, f"max |E[est]-diag|/||A||_F = {worst:.2e} (tol 1e-10), {clock.seconds:.2f}s (<5s)")
    assert ok


def test_02_expected_squared_error(record_criterion):
    with Clock() as clock:
        worst = 0.0
        for a in corpus(101):
            want = off_diagonal_frobenius(a) ** 2
            got = oracle.exact_expected_squared_error(a)
            worst = max(worst, abs(got - want) / want)
            for m in (1, 4, 16):
                # m i.i.d. zero-mean probe terms: the single-probe error divides by m
                worst = max(worst, abs(got / m - bounds.expected_squared_error_rademacher(a, m)) / (want / m))
        # direct check of the 1/m scaling where the m-probe enumeration is feasible (2x2, m=4: 2^8 outcomes)
        a = corpus(7, count=1, sizes=[2])[0]
        signs = np.array(np.meshgrid(*[[-1.0, 1.0]] * 8, indexing="ij")).reshape(8, -1).T.reshape(-1, 4, 2)
        est = np.einsum("tzi,ij,tzj->ti", signs, a, signs) / 4
        direct = np.mean(np.sum((est - np.diagonal(a)) ** 2, axis=1))
        worst = max(worst, abs(direct - off_diagonal_frobenius(a) ** 2 / 4) / (off_diagonal_frobenius(a) ** 2 / 4))
    ok = worst <= 1e-10 and clock.seconds < 5
    record_criterion(2, ok, f"max rel deviation from ||offdiag||_F^2/m = {worst:.2e} (tol 1e-10), {clock.seconds:.2f}s (<5s)")
    assert ok


def test_03_error_equals_trace_quadratic_form(record_criterion):
    with Clock() as clock:
        a = np.random.default_rng(303).standard_normal((50, 50))
        off = a - np.diag(np.diagonal(a))
        b = off.T @ off
        stream = ProbeStream(303)
        worst = 0.0
        for z in range(1000):
            g = sample_probe(RADEMACHER, 50, stream, z)
            e = single_probe_error(a, g)
            worst = max(worst, abs(e @ e - g @ b @ g))
        rel = worst / np.sum(a * a)
    ok = rel <= 1e-9 and clock.seconds < 1
    record_criterion(3, ok, f"max | ||e||^2 - g'Bg | / ||A||_F^2 = {rel:.2e} (tol 1e-9), {clock.seconds:.2f}s (<1s)")
    assert ok


def test_04_trace_estimator_moments(record_criterion):
    with Clock() as clock:
        worst_mean = worst_var = 0.0
        for i, x in enumerate(corpus(404)):
            b = x + x.T if i % 2 else x @ x.T
            mean, var = oracle.exact_trace_moments(b)
            tr = np.trace(b)
            var_want = 2 * off_diagonal_frobenius(b) ** 2
            worst_mean = max(worst_mean, abs(mean - tr) / max(abs(tr), 1e-300))
            worst_var = max(worst_var, abs(var - var_want) / var_want)
    ok = worst_mean <= 1e-10 and worst_var <= 1e-10 and clock.seconds < 5
    record_criterion(
        4, ok, f"mean rel dev {worst_mean:.2e}, var rel dev {worst_var:.2e} (tol 1e-10), {clock.seconds:.2f}s (<5s)"
    )
    assert ok


def test_05_gaussian_single_probe_error(record_criterion):
    with Clock() as clock:
        a = np.random.default_rng(505).standard_normal((16, 16))
        d = np.diagonal(a)
        want = off_diagonal_frobenius(a) ** 2 + 2 * np.sum(d * d)
        trials = 10**5
        sq = np.empty(trials)
        for t in range(trials):
            g = sample_probe(GAUSSIAN, 16, ProbeStream(505, trial=t), 0)
            e = g * (a @ g) - d
            sq[t] = e @ e
        se = sq.std(ddof=1) / math.sqrt(trials)
        z = (sq.mean() - want) / se
    ok = abs(z) <= 5 and clock.seconds < 30
    record_criterion(5, ok, f"MC mean {sq.mean():.4f} vs {want:.4f}, z = {z:+.2f} (|z|<=5), {clock.seconds:.1f}s (<30s)")
    assert ok


def test_06_dimension_independence(record_criterion):
    with Clock() as clock:
        q = {n: sweep_q95(f"offdiag-uniform:{n}", [64], 2000, seed=606)[1][64] for n in (32, 128, 512)}
    vals = list(q.values())
    spread = (max(vals) - min(vals)) / min(vals)
    ok = spread <= 0.25 and clock.seconds < 300
    detail = ", ".join(f"n={n}: {v:.4f}" for n, v in q.items())
    record_criterion(6, ok, f"q95 at m=64: {detail}; spread {spread:.3f} (<=0.25), {clock.seconds:.1f}s (<300s)")
    assert ok


def test_07_rate(record_criterion):
    with Clock() as clock:
        _, q = sweep_q95("offdiag-uniform:128", [16, 64, 256], 2000, seed=707)
    ratios = (q[16] / q[64], q[64] / q[256])
    ok = all(1.7 <= r <= 2.3 for r in ratios) and clock.seconds < 300
    record_criterion(
        7, ok, f"q95 ratios m->4m: {ratios[0]:.3f}, {ratios[1]:.3f} (in [1.7, 2.3]), {clock.seconds:.1f}s (<300s)"
    )
    assert ok


def test_08_tightness_pmf(record_criterion):
    eps = 0.9  # failure event |S/m| > 0.9 is S = +-m for every m <= 12
    with Clock() as clock:
        worst = 0.0
        fail = []
        for m in range(1, 13):
            got, want = oracle.exact_tightness_pmf(m), oracle.centered_binomial_pmf(m)
            assert set(got) == set(want)
            worst = max(worst, max(abs(got[k] - want[k]) for k in want))
            fail.append(oracle.tightness_failure_probability(got, eps))
    monotone = all(b <= a for a, b in zip(fail, fail[1:]))
    ok = worst <= 1e-12 and monotone and clock.seconds < 5
    record_criterion(
        8, ok, f"max pmf dev {worst:.1e} (tol 1e-12); Pr[|S/m|>{eps}] nonincreasing over m=1..12: {monotone}, "
        f"{clock.seconds:.2f}s (<5s)"
    )
    assert ok


def test_09_median_trick_guarantee(record_criterion):
    m, delta, meta_trials = 32, 0.1, 500
    r = num_estimators(delta)
    with Clock() as clock:
        a = np.random.default_rng(909).standard_normal((32, 32))
        d = np.diagonal(a)
        singles = [
            np.linalg.norm(generalized_diagonal(a, m, GAUSSIAN, ProbeStream(9091, trial=t)).values - d)
            for t in range(2000)
        ]
        threshold = 3 * q95(singles)
        failures = sum(
            np.linalg.norm(robust_diagonal(a, m, delta, GAUSSIAN, ProbeStream(9092, trial=t)).values - d) > threshold
            for t in range(meta_trials)
        )
    allowed = int(stats.binom.ppf(0.99, meta_trials, delta))
    ok = r == 24 and failures <= allowed and clock.seconds < 300
    record_criterion(
        9, ok, f"r={r}; {failures}/{meta_trials} meta-trials above 3*q95 single error "
        f"(allowed {allowed}), {clock.seconds:.1f}s (<300s)"
    )
    assert ok


def test_10_normalized_coincides_with_plain(record_criterion):
    rng = np.random.default_rng(1010)
    with Clock() as clock:
        worst = 0.0
        for _ in range(100):
            n, m, seed = int(rng.integers(2, 20)), int(rng.integers(1, 50)), int(rng.integers(2**32))
            a = rng.standard_normal((n, n))
            gap = normalized_diagonal(a, m, RADEMACHER, seed).values - hutchinson_diagonal(a, m, seed).values
            worst = max(worst, float(np.max(np.abs(gap))))
    ok = worst <= 1e-12 and clock.seconds < 5
    record_criterion(10, ok, f"max |normalized - plain| = {worst:.1e} (tol 1e-12), {clock.seconds:.2f}s (<5s)")
    assert ok


def test_11_cli_determinism(record_criterion, tmp_path):
    base = [sys.executable, "-m", "diagest.cli", "experiment", "--generator", "offdiag-uniform:64",
            "--m", "8", "32", "--trials", "300", "--seed", "1111", "--dist", "gaussian"]
    with Clock() as clock:
        outs = []
        for i, workers in enumerate((1, 1, 4)):
            path = tmp_path / f"run{i}.csv"
            subprocess.run(base + ["--workers", str(workers), "--out", str(path)], check=True, capture_output=True)
            outs.append((path.read_bytes(), path.with_suffix(".json").read_bytes()))
    same = outs[0] == outs[1] == outs[2]
    ok = same and clock.seconds < 60
    record_criterion(
        11, ok, f"CSV+sidecar byte-identical across reruns and workers 1/4: {same} "
        f"({len(outs[0][0])} bytes), {clock.seconds:.1f}s (<60s)"
    )
    assert ok


def test_12_subgaussian_shape(record_criterion):
    delta = 0.05  # matches the 95th percentile
    with Clock() as clock:
        op, q = sweep_q95("spiked-diag:64", [64, 256], 2000, seed=1212, dist="gaussian")
        K = GAUSSIAN.subgauss_param
        curve = {m: bounds.subgauss_bound(op, m, delta, K) for m in q}
        c_fit = q[64] / curve[64]
    ratio = q[64] / q[256]
    fitted_256 = c_fit * curve[256]
    in_band = 1.7 <= ratio <= 2.3
    under = q[256] <= fitted_256
    ok = in_band and under
    record_criterion(
        12, ok, f"q95 ratio 64->256 {ratio:.3f} (in [1.7, 2.3]: {in_band}); fitted c={c_fit:.4f}, "
        f"q95(256)={q[256]:.4f} vs fitted bound {fitted_256:.4f} (below: {under}), {clock.seconds:.1f}s"
    )
    assert ok
