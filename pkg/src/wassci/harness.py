"""Monte-Carlo experiments: coverage, interval length, runtime, and robustness.

Every trial draws its data from an independent random stream keyed by
``(seed, trial_index)``, so results do not depend on the number of worker
processes or on scheduling order.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import stats

from ._errors import DegenerateSolution, WassCIError
from .model import ProblemInstance, pooled_variance
from .numerics import trial_rng
from .selective import SCHEMA_VERSION, run_algorithm_1

NOISE_FAMILIES = ("gaussian", "laplace", "skew_normal", "student_t")
VARIANCE_MODES = ("known", "estimated")


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 5
    m: int = 5
    d: int = 1
    delta: float = 2.0
    noise: str = "gaussian"
    variance_mode: str = "known"
    trials: int = 1000
    alpha: float = 0.05
    seed: int = 0
    parallelism: int = 1
    skew: float = 10.0
    df: float = 20.0
    # equal sample sizes always give a degenerate optimal vertex
    allow_degenerate: bool = True

    def __post_init__(self):
        for name in ("n", "m", "d", "trials", "parallelism"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.noise not in NOISE_FAMILIES:
            raise ValueError(f"noise must be one of {NOISE_FAMILIES}, got {self.noise!r}")
        if self.variance_mode not in VARIANCE_MODES:
            raise ValueError(f"variance_mode must be one of {VARIANCE_MODES}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.df <= 2:
            raise ValueError("student_t noise needs df > 2 for a finite variance")

    def to_json(self) -> dict:
        out = asdict(self)
        out.pop("parallelism")
        return out


def standardized_noise(rng: np.random.Generator, family: str, size, skew=10.0, df=20.0) -> np.ndarray:
    """Zero-mean, unit-variance draws from one of :data:`NOISE_FAMILIES`."""
    if family == "gaussian":
        return rng.standard_normal(size)
    if family == "laplace":
        return rng.laplace(0.0, 1.0 / math.sqrt(2.0), size)
    if family == "skew_normal":
        delta = skew / math.sqrt(1.0 + skew * skew)
        raw = delta * np.abs(rng.standard_normal(size)) + math.sqrt(1.0 - delta * delta) * rng.standard_normal(size)
        mean = delta * math.sqrt(2.0 / math.pi)
        sd = math.sqrt(1.0 - 2.0 * delta * delta / math.pi)
        return (raw - mean) / sd
    if family == "student_t":
        return rng.standard_t(df, size) * math.sqrt((df - 2.0) / df)
    raise ValueError(f"unknown noise family {family!r}")


def mean_vector(cfg: ExperimentConfig) -> np.ndarray:
    """Stacked true means: ones for X, ``1 + delta`` for Y."""
    return np.concatenate([np.ones(cfg.n * cfg.d), np.full(cfg.m * cfg.d, 1.0 + cfg.delta)])


def generate_instance(cfg: ExperimentConfig, trial_index: int) -> ProblemInstance:
    rng = trial_rng(cfg.seed, trial_index)
    x = 1.0 + standardized_noise(rng, cfg.noise, (cfg.n, cfg.d), cfg.skew, cfg.df)
    y = 1.0 + cfg.delta + standardized_noise(rng, cfg.noise, (cfg.m, cfg.d), cfg.skew, cfg.df)
    var = pooled_variance(x, y) if cfg.variance_mode == "estimated" else 1.0
    return ProblemInstance(x, y, var * np.eye(x.size), var * np.eye(y.size))


@dataclass
class TrialRecord:
    trial: int
    status: str  # "ok", "excluded" (degenerate refused) or "failed"
    z_obs: float = math.nan
    distance: float = math.nan
    w_true: float = math.nan
    sel_lo: float = math.nan
    sel_hi: float = math.nan
    naive_lo: float = math.nan
    naive_hi: float = math.nan
    covered_sel: bool = False
    covered_naive: bool = False
    degenerate: bool = False
    wall_ms: float = 0.0
    error: str = ""

    @property
    def sel_length(self) -> float:
        return self.sel_hi - self.sel_lo


def run_trial(cfg: ExperimentConfig, trial_index: int) -> TrialRecord:
    start = time.perf_counter()
    inst = generate_instance(cfg, trial_index)
    rec = TrialRecord(trial_index, "ok")
    try:
        res = run_algorithm_1(
            inst, cfg.alpha, allow_degenerate=cfg.allow_degenerate, on_unbracketed="infinite"
        )
    except DegenerateSolution as exc:
        rec.status, rec.degenerate, rec.error = "excluded", True, str(exc)
    except WassCIError as exc:
        rec.status, rec.error = "failed", f"{type(exc).__name__}: {exc}"
    else:
        w = float(res.eta @ mean_vector(cfg))
        rec.z_obs = res.line.z_obs
        rec.distance = res.distance
        rec.w_true = w
        rec.sel_lo, rec.sel_hi = res.selective.lo, res.selective.hi
        rec.naive_lo, rec.naive_hi = res.naive.lo, res.naive.hi
        rec.covered_sel = res.selective.contains(w)
        rec.covered_naive = res.naive.contains(w)
        rec.degenerate = res.degenerate
    rec.wall_ms = 1000.0 * (time.perf_counter() - start)
    return rec


def _run_chunk(args):
    cfg, indices = args
    return [run_trial(cfg, i) for i in indices]


def run_trials(cfg: ExperimentConfig) -> list:
    """All trial records of ``cfg`` in trial order."""
    indices = list(range(cfg.trials))
    if cfg.parallelism == 1 or cfg.trials == 1:
        return [run_trial(cfg, i) for i in indices]
    chunks = [(cfg, indices[k :: cfg.parallelism]) for k in range(cfg.parallelism)]
    with ProcessPoolExecutor(max_workers=cfg.parallelism) as pool:
        parts = list(pool.map(_run_chunk, chunks))
    records = [rec for part in parts for rec in part]
    records.sort(key=lambda r: r.trial)
    return records


def _wilson(k: int, total: int):
    if total == 0:
        return [math.nan, math.nan]
    ci = stats.binomtest(k, total).proportion_ci(0.95, method="wilson")
    return [float(ci.low), float(ci.high)]


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    records: list = field(repr=False)

    @property
    def usable(self) -> list:
        return [r for r in self.records if r.status == "ok"]

    @property
    def selective_coverage(self) -> float:
        ok = self.usable
        return sum(r.covered_sel for r in ok) / len(ok) if ok else math.nan

    @property
    def naive_coverage(self) -> float:
        ok = self.usable
        return sum(r.covered_naive for r in ok) / len(ok) if ok else math.nan

    @property
    def mean_finite_length(self) -> float:
        lengths = [r.sel_length for r in self.usable if math.isfinite(r.sel_length)]
        return float(np.mean(lengths)) if lengths else math.nan

    def aggregate(self) -> dict:
        ok = self.usable
        n_ok = len(ok)
        covered = sum(r.covered_sel for r in ok)
        covered_naive = sum(r.covered_naive for r in ok)
        infinite = sum(not math.isfinite(r.sel_length) for r in ok)
        return {
            "trials": len(self.records),
            "covered": covered,
            "not_covered": n_ok - covered,
            "excluded_degenerate": sum(r.status == "excluded" for r in self.records),
            "failed": sum(r.status == "failed" for r in self.records),
            "degenerate_flagged": sum(r.degenerate for r in self.records),
            "selective_coverage": _num(self.selective_coverage),
            "selective_coverage_band": _wilson(covered, n_ok),
            "naive_coverage": _num(self.naive_coverage),
            "naive_coverage_band": _wilson(covered_naive, n_ok),
            "mean_finite_length": _num(self.mean_finite_length),
            "fraction_infinite_length": infinite / n_ok if n_ok else None,
        }

    def to_json(self) -> dict:
        return {"config": self.config.to_json(), "aggregate": self.aggregate()}

    def write_trials_csv(self, path) -> None:
        cols = [
            "trial", "z_obs", "distance", "sel_lo", "sel_hi", "naive_lo", "naive_hi",
            "covered_sel", "covered_naive", "degenerate", "wall_ms",
        ]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(cols)
            for r in self.records:
                writer.writerow([_csv(getattr(r, c)) for c in cols])


def _num(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return None
    return float(x)


def _csv(x):
    if isinstance(x, bool):
        return int(x)
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return x


def run_coverage_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    return ExperimentReport(cfg, run_trials(cfg))


def run_length_experiment(cfg: ExperimentConfig, deltas=(0, 1, 2, 3, 4)) -> dict:
    """Coverage reports across a sweep of mean shifts plus the length trend.

    The trend is the Spearman correlation between the shift and the mean
    finite selective-interval length.
    """
    reports = [run_coverage_experiment(replace(cfg, delta=float(dl))) for dl in deltas]
    lengths = [r.mean_finite_length for r in reports]
    rho = float(stats.spearmanr(list(deltas), lengths).statistic) if len(deltas) > 1 else math.nan
    return {"reports": reports, "spearman": rho}


def run_timing_experiment(cfg: ExperimentConfig, sizes=(50, 60, 70, 80), trials=10, timeout=300.0) -> list:
    """Median wall time of full pipeline runs per ``n = m`` in ``sizes``.

    Trials are not interrupted; one that exceeds ``timeout`` seconds or
    raises counts as a failure.
    """
    table = []
    for size in sizes:
        sub = replace(cfg, n=int(size), m=int(size), trials=int(trials), parallelism=1)
        times, failures = [], 0
        for idx in range(sub.trials):
            rec = run_trial(sub, idx)
            seconds = rec.wall_ms / 1000.0
            times.append(seconds)
            if rec.status != "ok" or seconds > timeout:
                failures += 1
        table.append({
            "n": sub.n, "m": sub.m, "d": sub.d, "trials": sub.trials,
            "median_seconds": float(np.median(times)), "max_seconds": float(np.max(times)),
            "failures": failures,
        })
    return table


def run_robustness_experiment(cfg: ExperimentConfig, families=("laplace", "skew_normal", "student_t"), estimated=True) -> dict:
    """Coverage reports per non-Gaussian family and for estimated variance."""
    out = {}
    for fam in families:
        out[fam] = run_coverage_experiment(replace(cfg, noise=fam, variance_mode="known"))
    if estimated:
        out["estimated_variance"] = run_coverage_experiment(
            replace(cfg, noise="gaussian", variance_mode="estimated")
        )
    return out


def dumps(payload: dict) -> str:
    """Canonical JSON for aggregate reports (sorted keys, stable float repr)."""
    return json.dumps({"schema": SCHEMA_VERSION, **payload}, sort_keys=True, indent=2) + "\n"
