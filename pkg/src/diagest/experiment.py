"""Error sweeps over probe counts and trials, with CSV/JSON output.

Trial ``t`` of a sweep uses the substream ``ProbeStream(seed, trial=t)`` for
every ``m``, so a row ``(m, t)`` can be reproduced on its own with
``generalized_diagonal(A, m, dist, ProbeStream(seed, trial=t))``.  Probe sets
for different ``m`` in the same trial are nested (common random numbers).
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bounds
from .estimators import generalized_diagonal, normalized_diagonal
from .median import num_estimators, robust_diagonal
from .operators import LinearOperator, exact_diagonal
from .probes import ProbeStream, get_distribution

CSV_HEADER = ("matrix", "n", "distribution", "mode", "m", "trial", "error_l2", "matvecs")
MODES = ("plain", "normalized", "median")


def fmt(x: float) -> str:
    """Round-trippable decimal form of a double."""
    return f"{x:.17g}"


def nearest_rank_quantile(values, q: float) -> float:
    """Smallest sample value with at least a fraction ``q`` of the data at or below it."""
    if not 0.0 < q <= 1.0:
        raise ValueError("quantile level must lie in (0, 1]")
    xs = np.sort(np.asarray(values, dtype=np.float64))
    if xs.size == 0:
        raise ValueError("no values")
    rank = max(1, math.ceil(q * xs.size))
    return float(xs[rank - 1])


@dataclass
class ExperimentConfig:
    m_values: list
    dist: str = "rademacher"
    delta: float = 0.05
    trials: int = 100
    seed: int = 0
    mode: str = "plain"
    matrix: str | None = None
    generator: str | None = None
    out: str | None = None
    workers: int = 1
    constant: float = 1.0
    quantile: float = 0.95

    def validate(self):
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not self.m_values:
            raise ValueError("at least one m value is required")
        if any(int(m) != m or m < 1 for m in self.m_values):
            raise ValueError(f"all m must be positive integers, got {self.m_values}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        get_distribution(self.dist)
        return self


@dataclass(frozen=True)
class ErrorRecord:
    matrix: str
    n: int
    distribution: str
    mode: str
    m: int
    trial: int
    error_l2: float
    matvecs: int

    def row(self):
        return (self.matrix, str(self.n), self.distribution, self.mode, str(self.m),
                str(self.trial), fmt(self.error_l2), str(self.matvecs))


def estimate_once(op, m, config: ExperimentConfig, stream: ProbeStream):
    """Run the configured estimator once; returns ``(values, matvecs)``."""
    dist = get_distribution(config.dist)
    if config.mode == "plain":
        return generalized_diagonal(op, m, dist, stream).values, m
    if config.mode == "normalized":
        return normalized_diagonal(op, m, dist, stream).values, m
    est = robust_diagonal(op, m, config.delta, dist, stream)
    return est.values, est.matvecs


def run_trials(op: LinearOperator, matrix_id: str, config: ExperimentConfig, diag=None):
    """Return the list of ``ErrorRecord`` for every ``(m, trial)``, ordered by m then trial."""
    config.validate()
    if diag is None:
        diag = exact_diagonal(op)
    dist_name = get_distribution(config.dist).name

    def one(job):
        m, t = job
        values, matvecs = estimate_once(op, m, config, ProbeStream(config.seed, trial=t))
        err = float(np.linalg.norm(values - diag))
        return ErrorRecord(matrix_id, op.dim, dist_name, config.mode, m, t, err, matvecs)

    jobs = [(int(m), t) for m in config.m_values for t in range(config.trials)]
    if config.workers > 1 and op.concurrent_safe:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(one, jobs))
    return [one(j) for j in jobs]


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for rec in records:
        w.writerow(rec.row())
    return buf.getvalue()


@dataclass
class ExperimentResult:
    matrix_id: str
    config: ExperimentConfig
    records: list
    bound_reports: list = field(default_factory=list)

    def csv(self) -> str:
        return records_to_csv(self.records)

    def errors_for(self, m: int) -> np.ndarray:
        return np.array([r.error_l2 for r in self.records if r.m == m])

    def summary(self) -> dict:
        """Sidecar payload: config echo, per-m empirical stats and bound reports."""
        cfg = self.config
        dist = get_distribution(cfg.dist)
        per_m = []
        for m, rep in zip(cfg.m_values, self.bound_reports):
            errs = self.errors_for(m)
            per_m.append({
                "m": int(m),
                "mean_error_l2": float(errs.mean()),
                "mean_sq_error": float((errs**2).mean()),
                "quantile_level": cfg.quantile,
                "quantile_error_l2": nearest_rank_quantile(errs, cfg.quantile),
                "bounds": rep.to_dict(),
            })
        meta = {
            "matrix": self.matrix_id,
            "n": self.records[0].n if self.records else None,
            "distribution": dist.name,
            "mode": cfg.mode,
            "seed": cfg.seed,
            "trials": cfg.trials,
            "delta": cfg.delta,
            "m_values": [int(m) for m in cfg.m_values],
            "csv_header": list(CSV_HEADER),
        }
        if cfg.mode == "median":
            meta["r"] = num_estimators(cfg.delta)
        return {"experiment": meta, "per_m": per_m}


def run_experiment(op: LinearOperator, matrix_id: str, config: ExperimentConfig) -> ExperimentResult:
    config.validate()
    dist = get_distribution(config.dist)
    records = run_trials(op, matrix_id, config)
    reports = [
        bounds.bound_report(op, int(m), config.delta, dist.fourth_moment, dist.subgauss_param, config.constant)
        for m in config.m_values
    ]
    return ExperimentResult(matrix_id, config, records, reports)
