"""Runs every checker over generated instances."""

import logging
from dataclasses import dataclass, field
from multiprocessing import Pool
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from builders.exact_builder import bare_tree_after, build_topdown_exact
from builders.practical_builder import build_topdown_practical
from core.trees import average_depth, max_depth
from engines.exact_engine import Normalization
from utils import settings
from verify.checks import (
    CheckReport,
    check_cost_telescoping,
    check_disagreement_vs_depth,
    check_error_vs_cost,
    check_estimator_unbiasedness,
    check_influence_vs_variance,
    check_leaf_error_vs_influence,
    check_max_influence,
    check_normalizations,
    check_robust_selection,
    check_score_bounds,
    check_size_bound,
    check_variance_chain,
)
from verify.instances import Instance, InstanceGenerator, dictator_instance
from verify.reports import write_reports, write_witness

logger = logging.getLogger("PropertySuite")

EXIT_OK = 0
EXIT_VIOLATION = 2

# Smallest epsilon the sample-driven selection probe is run with
SELECTION_EPSILON = 0.1
SELECTION_DELTA = 0.1

# Instances, dictator first, that also get the Monte Carlo checks
ESTIMATOR_INSTANCES = 20


@dataclass
class SuiteResult:
    reports: List[CheckReport] = field(default_factory=list)
    normalization_summary: Dict[str, bool] = field(default_factory=dict)
    normalization_failures: Dict[str, int] = field(default_factory=dict)

    @property
    def violations(self) -> List[CheckReport]:
        return [r for r in self.reports if r.violation]

    @property
    def flags(self) -> List[CheckReport]:
        return [r for r in self.reports if not r.hard and not r.passed]

    @property
    def exit_status(self) -> int:
        return EXIT_VIOLATION if self.violations else EXIT_OK

    def record_normalizations(self) -> None:
        """Count, per normalization, the instances on which some raw inequality fails."""
        records = [r for r in self.reports if r.check == "normalizations"]
        for normalization in Normalization:
            key = f"consistent_{normalization.value}"
            failures = sum(1 for r in records if r.details[key] != 1.0)
            self.normalization_failures[normalization.value] = failures
            self.normalization_summary[normalization.value] = failures == 0

    def summary(self) -> Dict[str, str]:
        lines = {
            "checks": str(len(self.reports)),
            "violations": str(len(self.violations)),
            "statistical flags": str(len(self.flags)),
        }
        for name, holds in self.normalization_summary.items():
            outcome = "holds on every instance" if holds else f"fails on {self.normalization_failures[name]} instances"
            lines[f"every raw inequality under {name}"] = outcome
        if self.normalization_summary:
            consistent = [name for name, holds in self.normalization_summary.items() if holds]
            lines["normalizations satisfying every raw inequality"] = ", ".join(consistent) or "none"
        stated = [r for r in self.reports if r.check == "score_bounds"]
        if stated:
            missed = sum(
                1 for r in stated
                if r.details.get("stated_high_error_misses", 0) + r.details.get("stated_high_cost_misses", 0) > 0
            )
            lines["score bounds with textbook constants"] = f"missed on {missed} of {len(stated)} instances"
        return lines


def check_instance(
    instance: Instance,
    estimator: bool = False,
    repetitions: int = 200,
    pair_count: int = 1000,
) -> List[CheckReport]:
    """
    Every checker on one instance.

    Args:
        instance: Target, distribution and accuracy
        estimator: Also run the Monte Carlo unbiasedness probe and the sample-driven selection probe
        repetitions: Resamples of the unbiasedness probe
        pair_count: Pairs per resample

    Returns:
        Reports in a fixed order
    """
    target, dist, seed = instance.target, instance.distribution, instance.seed
    _, trace = build_topdown_exact(target, dist, instance.epsilon)
    reports = [
        check_error_vs_cost(target, dist, trace, seed),
        check_leaf_error_vs_influence(trace.bare, target, dist, seed),
        check_influence_vs_variance(target, dist, seed),
        check_max_influence(target, dist, seed),
        check_normalizations(target, dist, trace, seed),
        check_disagreement_vs_depth(target, dist, seed),
        check_variance_chain(target, dist, trace.bare, seed),
        check_cost_telescoping(trace, seed),
        check_score_bounds(trace, target, instance.epsilon, dist, seed),
    ]
    if trace.terminated:
        reports.append(check_size_bound(trace.size, instance.epsilon, max_depth(target), average_depth(target, dist), seed))
    else:
        reports.append(CheckReport("size_bound", seed, False, details={"size": trace.size},
                                   message="Greedy build exhausted its size-bound budget."))
    if estimator:
        bare = bare_tree_after(trace, min(2, trace.splits), dist.n)
        reports.append(check_estimator_unbiasedness(target, dist, bare, repetitions, pair_count, seed))
        _, practical, _ = build_topdown_practical(
            target, dist, max(instance.epsilon, SELECTION_EPSILON), SELECTION_DELTA, seed=seed, ground_truth=target
        )
        reports.append(check_robust_selection(practical, target, dist, seed))
    return reports


def _check_job(job: Tuple[Instance, bool, int, int]) -> List[CheckReport]:
    return check_instance(*job)


def run_property_suite(
    seed: int,
    instance_count: int = 200,
    out_dir: Optional[Union[str, Path]] = None,
    max_n: int = 6,
    estimator_instances: int = ESTIMATOR_INSTANCES,
    repetitions: int = 200,
    pair_count: int = 1000,
    workers: Optional[int] = None,
) -> SuiteResult:
    """
    Run the checkers over the dictator probe and instance_count generated instances.

    Args:
        seed: Master seed of the instance generator
        instance_count: Number of random instances; 0 runs nothing
        out_dir: Directory for report.txt, report.csv and witnesses
        max_n: Largest dimension drawn
        estimator_instances: How many instances, dictator probe first, also get the unbiasedness probe
        repetitions: Resamples per unbiasedness probe
        pair_count: Pairs per resample
        workers: Process-pool size (TOPDOWN_WORKERS when omitted)

    Returns:
        SuiteResult whose exit_status is 2 when any hard check failed
    """
    result = SuiteResult()
    if instance_count <= 0:
        if out_dir is not None:
            write_reports([], out_dir, result.summary())
        return result

    instances = [dictator_instance()] + InstanceGenerator(seed, max_n=max_n).generate(instance_count)
    jobs = [(inst, k < estimator_instances, repetitions, pair_count) for k, inst in enumerate(instances)]
    workers = settings.workers() if workers is None else workers
    if workers > 1:
        with Pool(workers) as pool:
            per_instance = pool.map(_check_job, jobs)
    else:
        per_instance = [_check_job(job) for job in jobs]

    for instance, reports in zip(instances, per_instance):
        for report in reports:
            if report.violation:
                logger.warning("Violation of %s on instance %s: %s", report.check, instance.seed, report.message)
                if out_dir is not None:
                    write_witness(report, instance, Path(out_dir) / "witnesses")
        result.reports.extend(reports)

    result.record_normalizations()

    if out_dir is not None:
        write_reports(result.reports, out_dir, result.summary())
    logger.info("Property suite: %d checks, %d violations", len(result.reports), len(result.violations))
    return result
