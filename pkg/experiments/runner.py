"""Experiment drivers: grids of builds, aggregation and CSV output."""

import logging
import math
import time
from dataclasses import dataclass
from multiprocessing import Pool
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np
import pandas as pd

from builders.exact_builder import build_topdown_exact
from builders.practical_builder import build_topdown_practical
from core.distribution import ProductDistribution
from core.errors import ConfigError
from core.oracle import TreeOracle
from core.tree_format import load_tree
from core.trees import DecisionTree, Leaf
from engines.exact_engine import tree_error
from experiments.config import ExperimentConfig, TargetSpec, grid
from experiments.targets import generate_balanced_target, generate_path_target
from utils import settings
from utils.seeding import derive_seed
from verify.reports import reports_frame
from verify.suite import run_property_suite

logger = logging.getLogger("ExperimentRunner")

CSV_SCHEMA = "topdown-runs v1"
RUN_KEY = ["target", "n", "epsilon", "bias", "repetition"]
RUN_COLUMNS = RUN_KEY + [
    "experiment", "config_hash", "seed", "mode", "delta", "ground_truth_size", "size",
    "exact_error", "terminated", "splits", "label_queries", "random_draws", "status",
]
TIMING_COLUMNS = RUN_KEY + ["wall_time_s"]


@dataclass
class ExperimentResult:
    runs: pd.DataFrame
    summary: Optional[pd.DataFrame] = None
    timing: Optional[pd.DataFrame] = None
    fit: Optional[Tuple[float, float]] = None
    exit_status: int = 0


def make_target(spec: TargetSpec, n: int, rng: np.random.Generator) -> DecisionTree:
    """
    Build the ground truth of a run.

    Path targets are capped at n + 1 leaves, the most a chain over n distinct
    variables can have.
    """
    if spec.family == "balanced":
        return generate_balanced_target(spec.depth, n, rng)
    if spec.family == "path":
        return generate_path_target(n, rng, length=min(spec.leaves - 1, n))
    if spec.family == "constant":
        return DecisionTree(Leaf(label=spec.label), n)
    tree = load_tree(spec.path, n)
    if not isinstance(tree, DecisionTree):
        raise ConfigError(f"Target file {spec.path} holds a bare tree, not a labeled one.")
    return DecisionTree(tree.root, n)


def sample_complexity_model(j_total: int, n: int, epsilon: float, delta: float) -> float:
    """
    J log J * n log n * eps^-2 * log(1/delta).

    J and n are floored at 2 so that single-leaf runs and n = 1 stay positive.
    """
    j, m = max(j_total, 2), max(n, 2)
    return j * math.log(j) * m * math.log(m) / epsilon ** 2 * math.log(1.0 / delta)


def fit_sample_complexity(runs: pd.DataFrame) -> Tuple[float, float]:
    """
    Fit measured random draws to C times the sample-complexity model.

    Args:
        runs: Run rows with size, n, epsilon, delta and random_draws

    Returns:
        Tuple of (C as the geometric mean of the ratios, max deviation factor from C)
    """
    ok = runs[(runs["status"] == "ok") & (runs["random_draws"] > 0)]
    if ok.empty:
        raise ValueError("No successful runs with sample usage to fit.")
    model = np.array([
        sample_complexity_model(int(r.size), int(r.n), float(r.epsilon), float(r.delta))
        for r in ok.itertuples(index=False)
    ])
    ratios = ok["random_draws"].to_numpy(dtype=float) / model
    c = float(np.exp(np.mean(np.log(ratios))))
    factor = float(max(ratios.max() / c, c / ratios.min()))
    return c, factor


def _run_one(job: Dict) -> Tuple[Dict, Dict]:
    config: ExperimentConfig = job["config"]
    t, spec, n, e, eps, b, bias, rep = job["point"]
    seed = derive_seed(config.master_seed, t, n, e, b, rep)
    key = {"target": spec.name, "n": n, "epsilon": eps, "bias": bias, "repetition": rep}
    row = {
        **key,
        "experiment": config.experiment,
        "config_hash": job["config_hash"],
        "seed": seed,
        "mode": config.mode,
        "delta": config.delta,
        "ground_truth_size": np.nan,
        "size": np.nan,
        "exact_error": np.nan,
        "terminated": False,
        "splits": np.nan,
        "label_queries": 0,
        "random_draws": 0,
        "status": "ok",
    }
    start = time.perf_counter()
    try:
        target = make_target(spec, n, np.random.default_rng(derive_seed(seed, 0)))
        dist = ProductDistribution.constant(n, bias)
        row["ground_truth_size"] = target.size
        if config.mode == "practical":
            tree, trace, usage = build_topdown_practical(
                TreeOracle(target, dist), dist, eps, config.delta,
                seed=derive_seed(seed, 1), halve_epsilon=config.halve_epsilon, ground_truth=target,
            )
            row["label_queries"], row["random_draws"] = usage.label_queries, usage.random_draws
        else:
            tree, trace = build_topdown_exact(target, dist, eps, ground_truth=target)
        row["size"] = tree.size
        row["terminated"] = trace.terminated
        row["splits"] = trace.splits
        if n <= settings.max_free_coords():
            row["exact_error"] = tree_error(tree, target, dist)
    except Exception as e:
        logger.warning("Run %s failed: %s", key, e)
        row["status"] = f"error: {e}"
    timing = {**key, "wall_time_s": time.perf_counter() - start}
    return row, timing


def aggregate(runs: pd.DataFrame) -> pd.DataFrame:
    """Mean and standard deviation per grid point over the successful repetitions."""
    ok = runs[runs["status"] == "ok"].assign(
        within_epsilon=lambda d: (d["exact_error"] <= d["epsilon"] + 1e-12).astype(float)
    )
    return ok.groupby(["target", "n", "epsilon", "bias"], sort=True).agg(
        runs=("size", "count"),
        ground_truth_size=("ground_truth_size", "mean"),
        size_mean=("size", "mean"),
        size_std=("size", "std"),
        error_mean=("exact_error", "mean"),
        error_std=("exact_error", "std"),
        within_epsilon=("within_epsilon", "mean"),
        label_queries_mean=("label_queries", "mean"),
        random_draws_mean=("random_draws", "mean"),
    ).reset_index()


def write_csv(frame: pd.DataFrame, path: Union[str, Path], config: ExperimentConfig, kind: str) -> None:
    """Write a CSV whose first line is a '#' schema comment carrying the config hash."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(f"# {CSV_SCHEMA} {kind} experiment={config.experiment} config_hash={config.config_hash()}\n")
        frame.to_csv(f, index=False, float_format="%.12g")


def _companion(path: Path, suffix: str) -> Path:
    return path.with_name(f"{path.stem}_{suffix}{path.suffix or '.csv'}")


def run_experiment(
    config: ExperimentConfig,
    out: Optional[Union[str, Path]] = None,
    workers: Optional[int] = None,
    show_details: bool = False,
) -> ExperimentResult:
    """
    Run an experiment configuration and write its CSV files.

    Grid experiments write the run rows to `out`, the per-point aggregate to
    `<out>_summary.csv`, wall times to `<out>_timing.csv` and, for
    sample-scaling, the fitted constant to `<out>_fit.csv`. The properties
    experiment writes its check rows to `out` and text reports next to it.

    Args:
        config: Validated configuration
        out: Output CSV path (config.output when omitted)
        workers: Process-pool size (TOPDOWN_WORKERS when omitted)
        show_details: Print one progress line per run

    Returns:
        ExperimentResult with the run rows and derived tables
    """
    out = out or config.output
    workers = settings.workers() if workers is None else workers

    if config.experiment == "properties":
        report_dir = _companion(Path(out), "report").with_suffix("") if out else None
        suite = run_property_suite(
            config.master_seed, config.instance_count, out_dir=report_dir,
            estimator_instances=config.estimator_instances, workers=workers,
        )
        runs = reports_frame(suite.reports)
        if out:
            write_csv(runs, out, config, "checks")
        return ExperimentResult(runs=runs, exit_status=suite.exit_status)

    config_hash = config.config_hash()
    jobs = [{"config": config, "config_hash": config_hash, "point": point} for point in grid(config)]
    logger.info("Running %d builds of %s", len(jobs), config.experiment)
    if workers > 1:
        with Pool(workers) as pool:
            results = pool.map(_run_one, jobs)
    else:
        results = []
        for k, job in enumerate(jobs, 1):
            results.append(_run_one(job))
            if show_details:
                row = results[-1][0]
                print(f"[Run {k}/{len(jobs)}] {row['target']} n={row['n']} eps={row['epsilon']} "
                      f"p={row['bias']} rep={row['repetition']}: size={row['size']} status={row['status']}")

    runs = pd.DataFrame([r for r, _ in results], columns=RUN_COLUMNS).sort_values(RUN_KEY).reset_index(drop=True)
    timing = pd.DataFrame([t for _, t in results], columns=TIMING_COLUMNS).sort_values(RUN_KEY).reset_index(drop=True)
    summary = aggregate(runs)
    fit = fit_sample_complexity(runs) if config.experiment == "sample-scaling" else None

    if out:
        out = Path(out)
        write_csv(runs, out, config, "runs")
        write_csv(summary, _companion(out, "summary"), config, "summary")
        write_csv(timing, _companion(out, "timing"), config, "timing")
        if fit is not None:
            write_csv(pd.DataFrame([{"C": fit[0], "max_deviation_factor": fit[1]}]),
                      _companion(out, "fit"), config, "fit")
    return ExperimentResult(runs=runs, summary=summary, timing=timing, fit=fit)
