"""Monte Carlo harness: consistency, normality, and efficiency experiments.

Each experiment cell (sample size, replicate) draws its seed from a
documented mix of the plan's base seed with the cell coordinates, so results
are identical regardless of worker count or execution order.  Non-convergent
replicates are recorded and excluded from summaries; their rate is itself a
health metric and an experiment is flagged failed when it exceeds 20%.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri
from scipy.stats import kurtosis, skew

from .baselines import tar_arch_full_qmle
from .estimation import (
    ConvergenceError,
    EstimationError,
    SearchGrid,
    fit_alternating,
    threshold_delay_search,
)
from .model import (
    AarchParams,
    ModelSpec,
    TarParams,
    ThresholdPartition,
    check_stationarity,
    param_names,
    param_vector,
)
from .simulate import DEFAULT_BURN_IN, SimConfig, SimulationError, mix_seed, simulate_path

__all__ = [
    "ExperimentPlan",
    "ExperimentResult",
    "ReplicateRow",
    "CellSummary",
    "GridRecipe",
    "run_experiment",
    "efficiency_comparison",
    "EfficiencyReport",
    "normality_diagnostics",
    "NormalityReport",
    "anderson_darling_statistic",
    "reference_spec",
    "symmetric_reference_spec",
    "save_results",
    "load_results",
]

ESTIMATORS = ("concentrated", "full_symmetric")
NONCONVERGENCE_FAILURE_RATE = 0.20
AD_CRITICAL_1PCT = 3.857  # fully specified N(0,1) null
Z_975 = float(ndtri(0.975))


def reference_spec() -> ModelSpec:
    """The repository's fixed two-regime reference model for experiments."""
    return ModelSpec(
        p=1,
        q=1,
        partition=ThresholdPartition(regimes=2, delay=1, thresholds=np.array([0.0])),
        tar=TarParams(np.array([[0.2, 0.5], [-0.3, -0.4]])),
        aarch=AarchParams(alpha0=0.1, alphas=np.array([0.4]), betas=np.array([0.2])),
    )


def symmetric_reference_spec() -> ModelSpec:
    """The reference mean structure with symmetric (beta = 0) ARCH errors."""
    base = reference_spec()
    return ModelSpec(
        p=base.p,
        q=base.q,
        partition=base.partition,
        tar=base.tar,
        aarch=AarchParams(alpha0=0.1, alphas=np.array([0.5]), betas=np.array([0.0])),
    )


@dataclass(frozen=True)
class GridRecipe:
    """Per-replicate quantile grid: thresholds are recomputed from each
    simulated series, while delays and occupancy bounds stay fixed."""

    delays: tuple[int, ...]
    boundaries: int = 1
    lo: float = 0.10
    hi: float = 0.90
    step: float = 0.025
    min_regime_fraction: float = 0.1
    include_single_regime: bool = False

    def materialize(self, series) -> SearchGrid:
        return SearchGrid.from_series(
            series,
            delays=self.delays,
            boundaries=self.boundaries,
            lo=self.lo,
            hi=self.hi,
            step=self.step,
            min_regime_fraction=self.min_regime_fraction,
            include_single_regime=self.include_single_regime,
        )

    def to_dict(self) -> dict:
        return {
            "type": "quantile",
            "delays": list(self.delays),
            "boundaries": self.boundaries,
            "lo": self.lo,
            "hi": self.hi,
            "step": self.step,
            "min_regime_fraction": self.min_regime_fraction,
            "include_single_regime": self.include_single_regime,
        }


def _grid_to_dict(grid) -> dict:
    if isinstance(grid, GridRecipe):
        return grid.to_dict()
    return {
        "type": "fixed",
        "delays": list(grid.delay_candidates),
        "threshold_candidates": [list(row) for row in grid.threshold_candidates],
        "min_regime_fraction": grid.min_regime_fraction,
        "include_single_regime": grid.include_single_regime,
    }


def _grid_from_dict(d: dict):
    if d["type"] == "quantile":
        return GridRecipe(
            delays=tuple(d["delays"]),
            boundaries=int(d.get("boundaries", 1)),
            lo=float(d.get("lo", 0.10)),
            hi=float(d.get("hi", 0.90)),
            step=float(d.get("step", 0.025)),
            min_regime_fraction=float(d.get("min_regime_fraction", 0.1)),
            include_single_regime=bool(d.get("include_single_regime", False)),
        )
    return SearchGrid(
        delay_candidates=tuple(d["delays"]),
        threshold_candidates=tuple(tuple(row) for row in d["threshold_candidates"]),
        min_regime_fraction=float(d.get("min_regime_fraction", 0.1)),
        include_single_regime=bool(d.get("include_single_regime", False)),
    )


@dataclass(frozen=True)
class ExperimentPlan:
    """A fully specified Monte Carlo experiment."""

    true_spec: ModelSpec
    sample_sizes: tuple[int, ...]
    replicates: int
    base_seed: int
    estimator: str = "concentrated"
    grid: SearchGrid | GridRecipe | None = None
    burn_in: int = DEFAULT_BURN_IN

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.sample_sizes)
        if not sizes or any(b <= a for a, b in zip(sizes[:-1], sizes[1:])):
            raise ValueError("sample_sizes must be non-empty and strictly increasing")
        object.__setattr__(self, "sample_sizes", sizes)
        if self.replicates < 1:
            raise ValueError(f"replicates must be >= 1, got {self.replicates}")
        if self.estimator not in ESTIMATORS:
            raise ValueError(
                f"estimator must be one of {ESTIMATORS}, got {self.estimator!r}"
            )
        if self.estimator == "full_symmetric" and not self.true_spec.aarch.is_symmetric:
            raise ValueError("full_symmetric estimator requires a symmetric truth")

    def to_dict(self) -> dict:
        return {
            "true_spec": self.true_spec.to_dict(),
            "sample_sizes": list(self.sample_sizes),
            "replicates": self.replicates,
            "base_seed": self.base_seed,
            "estimator": self.estimator,
            "grid": None if self.grid is None else _grid_to_dict(self.grid),
            "burn_in": self.burn_in,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentPlan":
        return cls(
            true_spec=ModelSpec.from_dict(d["true_spec"]),
            sample_sizes=tuple(d["sample_sizes"]),
            replicates=int(d["replicates"]),
            base_seed=int(d["base_seed"]),
            estimator=d.get("estimator", "concentrated"),
            grid=None if d.get("grid") is None else _grid_from_dict(d["grid"]),
            burn_in=int(d.get("burn_in", DEFAULT_BURN_IN)),
        )


def plan_param_names(plan: ExperimentPlan) -> list[str]:
    """Estimated-coordinate names; the full estimator has no beta block."""
    names = param_names(plan.true_spec)
    if plan.estimator == "full_symmetric":
        names = [n for n in names if not n.startswith("beta_")]
    return names


def plan_truth(plan: ExperimentPlan) -> np.ndarray:
    truth = param_vector(plan.true_spec)
    if plan.estimator == "full_symmetric":
        truth = truth[: truth.size - plan.true_spec.q]
    return truth


@dataclass(frozen=True)
class ReplicateRow:
    n: int
    r: int
    seed: int
    converged: bool
    estimates: np.ndarray
    std_errors: np.ndarray
    selected_delay: int | None = None
    selected_thresholds: tuple[float, ...] | None = None


@dataclass(frozen=True)
class CellSummary:
    n: int
    n_total: int
    n_converged: int
    nonconverged_rate: float
    bias: np.ndarray
    rmse: np.ndarray
    cov_scaled: np.ndarray
    coverage: np.ndarray
    mean_scaled_cov: np.ndarray | None
    delay_mode: int | None = None
    threshold_medians: tuple[float, ...] | None = None


@dataclass(frozen=True)
class ExperimentResult:
    plan: ExperimentPlan
    names: tuple[str, ...]
    truth: np.ndarray
    rows: tuple[ReplicateRow, ...]
    summaries: dict[int, CellSummary]
    failed: bool


def _replicate_task(args):
    plan, n, r, compute_se = args
    seed = mix_seed(plan.base_seed, n, r)
    k = len(plan_param_names(plan))
    nan_vec = np.full(k, np.nan)
    try:
        sim = simulate_path(
            plan.true_spec, SimConfig(n=n, seed=seed, burn_in=plan.burn_in)
        )
        spec = plan.true_spec
        sel_delay = None
        sel_thresholds = None
        if plan.grid is not None:
            grid = (
                plan.grid.materialize(sim.series)
                if isinstance(plan.grid, GridRecipe)
                else plan.grid
            )
            outcome = threshold_delay_search(sim.series, spec.p, spec.q, grid)
            report = outcome.report
            sel_delay = outcome.partition.delay
            sel_thresholds = tuple(float(t) for t in outcome.partition.thresholds)
            if outcome.partition.regimes != spec.partition.regimes:
                # Estimates are not comparable to the truth vector when the
                # selected regime count differs; keep only the selection.
                return (n, r, seed, True, nan_vec, nan_vec.copy(), None,
                        sel_delay, sel_thresholds)
        elif plan.estimator == "concentrated":
            report = fit_alternating(
                sim.series, spec.partition, spec.p, spec.q, compute_se=compute_se
            )
        else:
            report = tar_arch_full_qmle(sim.series, spec.partition, spec.p, spec.q)
        est = param_vector(report.spec)[:k]
        ses = report.std_errors[:k]
        scaled_cov = None
        if np.all(np.isfinite(report.sandwich_cov[:k, :k])):
            scaled_cov = n * report.sandwich_cov[:k, :k]
        return (n, r, seed, True, est, ses, scaled_cov, sel_delay, sel_thresholds)
    except (ConvergenceError, EstimationError, SimulationError, ValueError,
            np.linalg.LinAlgError):
        return (n, r, seed, False, nan_vec, nan_vec.copy(), None, None, None)


def _summarize(plan, names, truth, rows, scaled_covs=None):
    summaries: dict[int, CellSummary] = {}
    failed = False
    k = len(names)
    for n in plan.sample_sizes:
        cell_rows = [row for row in rows if row.n == n]
        conv = [row for row in cell_rows if row.converged]
        rate = 1.0 - len(conv) / len(cell_rows) if cell_rows else 1.0
        if rate > NONCONVERGENCE_FAILURE_RATE:
            failed = True
        if conv:
            est = np.vstack([row.estimates for row in conv])
            ses = np.vstack([row.std_errors for row in conv])
            err = est - truth
            bias = err.mean(axis=0)
            rmse = np.sqrt((err * err).mean(axis=0))
            if len(conv) > 1:
                cov_scaled = n * np.cov(est, rowvar=False, ddof=1).reshape(k, k)
            else:
                cov_scaled = np.zeros((k, k))
            coverage = (np.abs(err) <= Z_975 * ses).mean(axis=0)
            # coordinates with no finite standard error have no CI to score
            coverage = np.where(np.isfinite(ses).any(axis=0), coverage, np.nan)
        else:
            bias = np.full(k, np.nan)
            rmse = np.full(k, np.nan)
            cov_scaled = np.full((k, k), np.nan)
            coverage = np.full(k, np.nan)
        mean_scaled = None
        if scaled_covs is not None:
            mats = [m for (nn, m) in scaled_covs if nn == n and m is not None]
            if mats:
                mean_scaled = np.mean(mats, axis=0)
        delay_mode = None
        threshold_medians = None
        sel = [row for row in conv if row.selected_delay is not None]
        if sel:
            delays = np.array([row.selected_delay for row in sel])
            values, counts = np.unique(delays, return_counts=True)
            delay_mode = int(values[np.argmax(counts)])
            lengths = [len(row.selected_thresholds) for row in sel]
            modal_len = max(set(lengths), key=lengths.count)
            if modal_len > 0:
                ths = np.array(
                    [row.selected_thresholds for row in sel
                     if len(row.selected_thresholds) == modal_len],
                    dtype=float,
                )
                threshold_medians = tuple(float(v) for v in np.median(ths, axis=0))
        summaries[n] = CellSummary(
            n=n,
            n_total=len(cell_rows),
            n_converged=len(conv),
            nonconverged_rate=rate,
            bias=bias,
            rmse=rmse,
            cov_scaled=cov_scaled,
            coverage=coverage,
            mean_scaled_cov=mean_scaled,
            delay_mode=delay_mode,
            threshold_medians=threshold_medians,
        )
    return summaries, failed


def run_experiment(
    plan: ExperimentPlan, workers: int = 1, compute_se: bool = True
) -> ExperimentResult:
    """Simulate and fit every (sample size, replicate) cell of the plan.

    Deterministic for a given plan: replicate ``r`` at size ``n`` always uses
    the seed ``mix_seed(base_seed, n, r)``, so the result does not depend on
    ``workers``.  ``compute_se=False`` skips the sandwich computation when
    only point estimates are needed.  The result is flagged ``failed`` when
    any cell's non-convergence rate exceeds 20%.
    """
    check_stationarity(plan.true_spec)
    names = plan_param_names(plan)
    truth = plan_truth(plan)
    tasks = [
        (plan, n, r, compute_se)
        for n in plan.sample_sizes
        for r in range(plan.replicates)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_replicate_task, tasks, chunksize=8))
    else:
        raw = [_replicate_task(t) for t in tasks]
    raw.sort(key=lambda item: (item[0], item[1]))
    rows = tuple(
        ReplicateRow(
            n=n,
            r=r,
            seed=seed,
            converged=conv,
            estimates=est,
            std_errors=ses,
            selected_delay=sel_d,
            selected_thresholds=sel_t,
        )
        for (n, r, seed, conv, est, ses, _, sel_d, sel_t) in raw
    )
    scaled_covs = [(n, m) for (n, _, _, conv, _, _, m, _, _) in raw if conv]
    summaries, failed = _summarize(plan, names, truth, rows, scaled_covs)
    return ExperimentResult(
        plan=plan,
        names=tuple(names),
        truth=truth,
        rows=rows,
        summaries=summaries,
        failed=failed,
    )


@dataclass(frozen=True)
class EfficiencyRow:
    n: int
    name: str
    var_a: float
    var_b: float
    se_var_a: float
    se_var_b: float
    ratio: float


@dataclass(frozen=True)
class EfficiencyReport:
    """Per-coordinate variances of two estimators on the same simulated truth."""

    estimator_a: str
    estimator_b: str
    rows: tuple[EfficiencyRow, ...]

    def to_dict(self) -> dict:
        return {
            "estimator_a": self.estimator_a,
            "estimator_b": self.estimator_b,
            "rows": [
                {
                    "n": row.n,
                    "name": row.name,
                    "var_a": row.var_a,
                    "var_b": row.var_b,
                    "se_var_a": row.se_var_a,
                    "se_var_b": row.se_var_b,
                    "ratio": row.ratio,
                }
                for row in self.rows
            ],
        }


def _scaled_errors(result: ExperimentResult, n: int, name: str) -> np.ndarray:
    idx = result.names.index(name)
    rows = [row for row in result.rows if row.n == n and row.converged]
    est = np.array([row.estimates[idx] for row in rows])
    return np.sqrt(n) * (est - result.truth[idx])


def _bootstrap_var_se(errors: np.ndarray, rng: np.random.Generator, b: int) -> float:
    n = errors.size
    draws = np.empty(b)
    for i in range(b):
        sample = errors[rng.integers(0, n, size=n)]
        draws[i] = sample.var(ddof=1)
    return float(draws.std(ddof=1))


def efficiency_comparison(
    plan_a: ExperimentPlan,
    plan_b: ExperimentPlan,
    workers: int = 1,
    n_bootstrap: int = 500,
    results: tuple[ExperimentResult, ExperimentResult] | None = None,
) -> EfficiencyReport:
    """Compare per-coordinate sampling variances of two estimators.

    Both plans must share the same symmetric truth (beta identically zero,
    so the full symmetric QMLE applies) and the same design.  Variances are
    of the scaled errors ``sqrt(n) * (estimate - truth)`` over converged
    replicates, with a bootstrap standard error attached to each.
    """
    if plan_a.true_spec.to_dict() != plan_b.true_spec.to_dict():
        raise ValueError("plans must share the same true_spec")
    if not plan_a.true_spec.aarch.is_symmetric:
        raise ValueError("efficiency comparison requires a symmetric truth (beta = 0)")
    if plan_a.sample_sizes != plan_b.sample_sizes:
        raise ValueError("plans must share sample_sizes")
    if results is None:
        res_a = run_experiment(plan_a, workers=workers)
        res_b = run_experiment(plan_b, workers=workers)
    else:
        res_a, res_b = results
    common = [name for name in res_a.names if name in res_b.names]
    rng = np.random.Generator(
        np.random.Philox(key=mix_seed(plan_a.base_seed, plan_b.base_seed, 0xEFF))
    )
    rows = []
    for n in plan_a.sample_sizes:
        for name in common:
            ea = _scaled_errors(res_a, n, name)
            eb = _scaled_errors(res_b, n, name)
            va = float(ea.var(ddof=1))
            vb = float(eb.var(ddof=1))
            rows.append(
                EfficiencyRow(
                    n=n,
                    name=name,
                    var_a=va,
                    var_b=vb,
                    se_var_a=_bootstrap_var_se(ea, rng, n_bootstrap),
                    se_var_b=_bootstrap_var_se(eb, rng, n_bootstrap),
                    ratio=va / vb if vb > 0 else np.inf,
                )
            )
    return EfficiencyReport(
        estimator_a=plan_a.estimator, estimator_b=plan_b.estimator, rows=tuple(rows)
    )


def anderson_darling_statistic(standardized: np.ndarray) -> float:
    """Anderson-Darling statistic against a fully specified N(0, 1) null."""
    x = np.sort(np.asarray(standardized, dtype=float))
    n = x.size
    if n < 2:
        raise ValueError("need at least 2 values")
    u = np.clip(ndtr(x), 1e-15, 1.0 - 1e-15)
    i = np.arange(1, n + 1)
    return float(-n - np.mean((2 * i - 1) * (np.log(u) + np.log(1.0 - u[::-1]))))


@dataclass(frozen=True)
class NormalityCoordinate:
    n: int
    name: str
    skewness: float
    excess_kurtosis: float
    ad_statistic: float
    ad_pass_1pct: bool


@dataclass(frozen=True)
class NormalityReport:
    coordinates: tuple[NormalityCoordinate, ...]
    cov_disagreement: dict[int, float]

    def to_dict(self) -> dict:
        return {
            "coordinates": [
                {
                    "n": c.n,
                    "name": c.name,
                    "skewness": c.skewness,
                    "excess_kurtosis": c.excess_kurtosis,
                    "ad_statistic": c.ad_statistic,
                    "ad_pass_1pct": c.ad_pass_1pct,
                }
                for c in self.coordinates
            ],
            "cov_disagreement": {str(k): v for k, v in self.cov_disagreement.items()},
        }


def normality_diagnostics(result: ExperimentResult) -> NormalityReport:
    """Distributional diagnostics of the standardized estimates.

    Each coordinate is standardized replicate by replicate with its own
    estimated standard error, then checked for skewness, excess kurtosis and
    an Anderson-Darling statistic against N(0, 1).  The empirical covariance
    of the sqrt(n)-scaled errors is compared against the mean estimated
    asymptotic covariance; the disagreement is the largest elementwise gap
    relative to the estimated diagonal scale.
    """
    if result.plan.replicates < 100:
        raise ValueError("normality diagnostics need at least 100 replicates")
    coords = []
    disagreement: dict[int, float] = {}
    for n in result.plan.sample_sizes:
        rows = [row for row in result.rows if row.n == n and row.converged]
        est = np.vstack([row.estimates for row in rows])
        ses = np.vstack([row.std_errors for row in rows])
        z = (est - result.truth) / ses
        for idx, name in enumerate(result.names):
            stat = anderson_darling_statistic(z[:, idx])
            coords.append(
                NormalityCoordinate(
                    n=n,
                    name=name,
                    skewness=float(skew(z[:, idx])),
                    excess_kurtosis=float(kurtosis(z[:, idx], fisher=True)),
                    ad_statistic=stat,
                    ad_pass_1pct=stat < AD_CRITICAL_1PCT,
                )
            )
        summary = result.summaries[n]
        if summary.mean_scaled_cov is not None:
            scale = np.sqrt(
                np.outer(
                    np.diag(summary.mean_scaled_cov), np.diag(summary.mean_scaled_cov)
                )
            )
            gap = np.abs(summary.cov_scaled - summary.mean_scaled_cov) / scale
            disagreement[n] = float(gap.max())
    return NormalityReport(coordinates=tuple(coords), cov_disagreement=disagreement)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def results_to_csv(result: ExperimentResult, fh) -> None:
    """One raw row per replicate: identifiers, convergence, estimates, SEs."""
    has_search = result.plan.grid is not None
    boundaries = result.plan.true_spec.partition.regimes - 1
    header = ["n", "r", "seed", "converged"]
    header += list(result.names)
    header += [f"se_{name}" for name in result.names]
    if has_search:
        header += ["selected_delay"]
        header += [f"selected_threshold_{i + 1}" for i in range(boundaries)]
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    for row in result.rows:
        record = [row.n, row.r, row.seed, int(row.converged)]
        record += [_fmt(v) for v in row.estimates]
        record += [_fmt(v) for v in row.std_errors]
        if has_search:
            record += [row.selected_delay if row.selected_delay is not None else ""]
            ths = row.selected_thresholds or ()
            record += [_fmt(t) for t in ths] + [""] * (boundaries - len(ths))
        writer.writerow(record)


def _cell_to_dict(c: CellSummary) -> dict:
    return {
        "n": c.n,
        "n_total": c.n_total,
        "n_converged": c.n_converged,
        "nonconverged_rate": c.nonconverged_rate,
        "bias": c.bias.tolist(),
        "rmse": c.rmse.tolist(),
        "cov_scaled": c.cov_scaled.tolist(),
        "coverage": c.coverage.tolist(),
        "mean_scaled_cov": (
            None if c.mean_scaled_cov is None else c.mean_scaled_cov.tolist()
        ),
        "delay_mode": c.delay_mode,
        "threshold_medians": (
            None if c.threshold_medians is None else list(c.threshold_medians)
        ),
    }


def summary_to_dict(result: ExperimentResult) -> dict:
    """Summary document with the full resolved plan for reproducibility."""
    return {
        "plan": result.plan.to_dict(),
        "failed": result.failed,
        "param_names": list(result.names),
        "truth": result.truth.tolist(),
        "cells": {str(n): _cell_to_dict(result.summaries[n]) for n in result.plan.sample_sizes},
    }


def save_results(result: ExperimentResult, csv_path, json_path) -> None:
    with open(csv_path, "w", newline="") as fh:
        results_to_csv(result, fh)
    with open(json_path, "w") as fh:
        json.dump(summary_to_dict(result), fh, indent=2)
        fh.write("\n")


def load_results(csv_path, json_path) -> ExperimentResult:
    """Reload persisted results, recomputing summaries from the raw rows.

    Raises ``ValueError`` if the stored summary statistics disagree with the
    recomputed ones beyond 1e-12, which would indicate the two files do not
    belong together.
    """
    with open(json_path) as fh:
        doc = json.load(fh)
    plan = ExperimentPlan.from_dict(doc["plan"])
    names = tuple(doc["param_names"])
    truth = np.asarray(doc["truth"], dtype=float)
    k = len(names)
    rows = []
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            conv = bool(int(rec["converged"]))
            est = np.array([float(rec[name]) for name in names])
            ses = np.array([float(rec[f"se_{name}"]) for name in names])
            sel_delay = None
            sel_ths = None
            if "selected_delay" in rec and rec["selected_delay"] not in (None, ""):
                sel_delay = int(rec["selected_delay"])
                ths = []
                i = 1
                while f"selected_threshold_{i}" in rec:
                    val = rec[f"selected_threshold_{i}"]
                    if val != "":
                        ths.append(float(val))
                    i += 1
                sel_ths = tuple(ths)
            rows.append(
                ReplicateRow(
                    n=int(rec["n"]),
                    r=int(rec["r"]),
                    seed=int(rec["seed"]),
                    converged=conv,
                    estimates=est,
                    std_errors=ses,
                    selected_delay=sel_delay,
                    selected_thresholds=sel_ths,
                )
            )
    rows = tuple(rows)
    summaries, failed = _summarize(plan, list(names), truth, rows)
    for n in plan.sample_sizes:
        stored = doc["cells"][str(n)]
        fresh = summaries[n]
        for key in ("bias", "rmse", "coverage"):
            a = np.asarray(stored[key], dtype=float)
            b = getattr(fresh, key)
            if not np.allclose(a, b, atol=1e-12, rtol=0.0, equal_nan=True):
                raise ValueError(
                    f"stored summary field {key!r} at n={n} disagrees with raw rows"
                )
        a = np.asarray(stored["cov_scaled"], dtype=float)
        if not np.allclose(a, fresh.cov_scaled, atol=1e-12, rtol=1e-12, equal_nan=True):
            raise ValueError(f"stored cov_scaled at n={n} disagrees with raw rows")
        mean_scaled = stored.get("mean_scaled_cov")
        if mean_scaled is not None:
            summaries[n] = CellSummary(
                **{
                    **fresh.__dict__,
                    "mean_scaled_cov": np.asarray(mean_scaled, dtype=float),
                }
            )
    if bool(doc["failed"]) != failed:
        raise ValueError("stored failure flag disagrees with raw rows")
    return ExperimentResult(
        plan=plan,
        names=names,
        truth=truth,
        rows=rows,
        summaries=summaries,
        failed=failed,
    )
