"""Brute-force checkers for the inequalities the greedy analysis rests on.

Every checker returns a CheckReport. Hard checks are exact inequalities that
must hold on every instance; soft checks are statistical and only flag.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from scipy import stats

from builders.exact_builder import GreedyTrace, bare_tree_after, robust_size_bound, size_bound
from builders.practical_builder import PracticalTrace
from core.distribution import ProductDistribution, Restriction, reach_probability
from core.oracle import TreeOracle
from core.trees import BareTree, DecisionTree, average_depth, max_depth, route_many
from engines.exact_engine import (
    Normalization,
    SubfunctionView,
    Target,
    completion_error,
    cost,
    influence,
    influences,
    leaf_error,
    leaf_views,
    pairwise_disagreement,
    total_influence,
    variance,
)
from utils.sampling import draw_pairs
from utils.seeding import derive_rng

TOL = 1e-10


@dataclass
class CheckReport:
    """Outcome of one checker on one instance."""

    check: str
    seed: Optional[int]
    passed: bool
    hard: bool = True
    details: Dict[str, float] = field(default_factory=dict)
    message: str = ""
    bare: Optional[BareTree] = None
    witness: Optional[str] = None

    @property
    def violation(self) -> bool:
        return self.hard and not self.passed


def _root_view(target: Target, dist: ProductDistribution) -> SubfunctionView:
    return SubfunctionView(target, Restriction(), dist.n)


def check_leaf_error_vs_influence(
    bare: BareTree, f: Target, dist: ProductDistribution, seed: Optional[int] = None
) -> CheckReport:
    """error(f_v, +/-1) <= Inf(f_v) at every leaf of a bare tree."""
    worst = -math.inf
    for leaf_id, view in leaf_views(bare, f, dist).items():
        gap = leaf_error(view, dist) - total_influence(view, dist)
        if gap > worst:
            worst, worst_leaf = gap, leaf_id
    passed = worst <= TOL
    message = "" if passed else f"Leaf {worst_leaf} has error exceeding its total influence by {worst:.3g}."
    return CheckReport("leaf_error_vs_influence", seed, passed, details={"max_gap": worst},
                       message=message, bare=None if passed else bare)


def check_error_vs_cost(
    target: Target, dist: ProductDistribution, trace: GreedyTrace, seed: Optional[int] = None
) -> CheckReport:
    """
    Error of the f-completion is at most the cost, on every prefix of a greedy trace.

    Args:
        target: The function f
        dist: The product distribution
        trace: Greedy trace whose prefixes are replayed
        seed: Instance seed for the report

    Returns:
        Report with the largest error - cost gap over all prefixes
    """
    worst, worst_prefix = -math.inf, 0
    for k in range(trace.splits + 1):
        bare = bare_tree_after(trace, k, dist.n)
        gap = completion_error(bare, target, dist) - cost(bare, target, dist)
        if gap > worst:
            worst, worst_prefix = gap, k
    passed = worst <= TOL
    return CheckReport(
        "error_vs_cost", seed, passed,
        details={"max_gap": worst, "prefixes": trace.splits + 1},
        message="" if passed else f"Prefix of {worst_prefix} splits: error exceeds cost by {worst:.3g}.",
        bare=None if passed else bare_tree_after(trace, worst_prefix, dist.n),
    )


def check_influence_vs_variance(tree: DecisionTree, dist: ProductDistribution, seed: Optional[int] = None) -> CheckReport:
    """Inf(f) <= D(T) Var(f) and Inf(f) <= Delta(T) for the function computed by T."""
    view = _root_view(tree, dist)
    inf = total_influence(view, dist)
    var = variance(view, dist)
    d, delta = max_depth(tree), average_depth(tree, dist)
    failures = []
    if inf > d * var + TOL:
        failures.append(f"Inf {inf:.6g} > D*Var {d * var:.6g}")
    if inf > delta + TOL:
        failures.append(f"Inf {inf:.6g} > Delta {delta:.6g}")
    return CheckReport("influence_vs_variance", seed, not failures,
                       details={"influence": inf, "variance": var, "D": d, "Delta": delta},
                       message="; ".join(failures))


def check_max_influence(tree: DecisionTree, dist: ProductDistribution, seed: Optional[int] = None) -> CheckReport:
    """
    Max influence against variance over average depth.

    The hard inequality is the hybrid-argument form: Pr[f(x) != f(y)] = Var/2 is
    at most the sum over i of Pr[T queries i] * Inf_i, so max_i Inf_i >= Var / (2 Delta).
    The raw form max_i Inf_i >= Var / Delta is evaluated under every
    normalization and recorded in the details without affecting the outcome.
    """
    view = _root_view(tree, dist)
    var = variance(view, dist)
    delta = average_depth(tree, dist)
    details: Dict[str, float] = {"variance": var, "Delta": delta}
    if delta == 0:
        return CheckReport("max_influence", seed, var <= TOL, details=details,
                           message="" if var <= TOL else "Depth-0 tree with nonzero variance.")
    for normalization in Normalization:
        best = float(np.max(influences(view, dist, normalization)))
        details[f"max_influence_{normalization.value}"] = best
        details[f"raw_holds_{normalization.value}"] = float(best >= var / delta - TOL)
    best = details[f"max_influence_{Normalization.RERANDOMIZED.value}"]
    passed = best >= var / (2.0 * delta) - TOL
    return CheckReport("max_influence", seed, passed, details=details,
                       message="" if passed else f"max Inf {best:.6g} < Var/(2 Delta) {var / (2 * delta):.6g}")


def _normalized_cost(bare: BareTree, f: Target, dist: ProductDistribution, normalization: Normalization) -> float:
    return sum(
        reach_probability(dist, bare.restriction_of(leaf_id)) * float(np.sum(influences(view, dist, normalization)))
        for leaf_id, view in leaf_views(bare, f, dist).items()
    )


def check_normalizations(
    tree: DecisionTree, dist: ProductDistribution, trace: GreedyTrace, seed: Optional[int] = None
) -> CheckReport:
    """
    Which influence normalizations satisfy every inequality in its raw form on this instance.

    For each normalization records whether max_i Inf_i >= Var / Delta, whether
    Inf <= D Var and Inf <= Delta, whether max_i Inf_i(f_v) <= 2 error(f_v) at the
    root and at every leaf of the greedy tree, and whether the completion error
    is at most the normalized cost on every prefix of the trace.

    A record, not a check: it always passes, and the suite aggregates
    `consistent_<normalization>` over instances.
    """
    view = _root_view(tree, dist)
    var = variance(view, dist)
    d, delta = max_depth(tree), average_depth(tree, dist)
    views = [view] + list(leaf_views(trace.bare, tree, dist).values())
    prefixes = [bare_tree_after(trace, k, dist.n) for k in range(trace.splits + 1)]
    errors = [completion_error(bare, tree, dist) for bare in prefixes]
    details: Dict[str, float] = {}
    for normalization in Normalization:
        name = normalization.value
        inf = float(np.sum(influences(view, dist, normalization)))
        holds = {
            "raw_max_influence": delta == 0 or float(np.max(influences(view, dist, normalization))) >= var / delta - TOL,
            "influence_vs_variance": inf <= d * var + TOL and inf <= delta + TOL,
            "variance_chain": all(
                float(np.max(influences(v, dist, normalization))) <= 2.0 * leaf_error(v, dist) + TOL for v in views
            ),
            "error_vs_cost": all(
                err <= _normalized_cost(bare, tree, dist, normalization) + TOL for bare, err in zip(prefixes, errors)
            ),
        }
        for check, ok in holds.items():
            details[f"{check}_{name}"] = float(ok)
        details[f"consistent_{name}"] = float(all(holds.values()))
    return CheckReport("normalizations", seed, True, hard=False, details=details)


def check_disagreement_vs_depth(tree: DecisionTree, dist: ProductDistribution, seed: Optional[int] = None) -> CheckReport:
    """Pr[f(x) != f(y)] <= sum over i of Pr[T queries i] * Inf_i(f)."""
    view = _root_view(tree, dist)
    query_mass: Dict[int, float] = {}
    for info in tree.leaves():
        p = reach_probability(dist, info.restriction)
        for i, _ in info.restriction:
            query_mass[i] = query_mass.get(i, 0.0) + p
    rhs = sum(mass * influence(view, dist, i) for i, mass in query_mass.items())
    lhs = pairwise_disagreement(view, dist)
    passed = lhs <= rhs + TOL
    return CheckReport("disagreement_vs_depth", seed, passed, details={"disagreement": lhs, "weighted_influence": rhs},
                       message="" if passed else f"Pr[f(x)!=f(y)] {lhs:.6g} > {rhs:.6g}")


def check_variance_chain(
    target: Target, dist: ProductDistribution, bare: Optional[BareTree] = None, seed: Optional[int] = None
) -> CheckReport:
    """Inf_i(f_v) <= 2 error(f_v) <= Var(f_v) for f and for every leaf subfunction of a bare tree."""
    if bare is None:
        bare = BareTree.single_leaf(dist.n)
    views = [_root_view(target, dist)] + list(leaf_views(bare, target, dist).values())
    worst = -math.inf
    for view in views:
        err = leaf_error(view, dist)
        worst = max(
            worst,
            float(np.max(influences(view, dist))) - 2.0 * err,
            2.0 * err - variance(view, dist),
        )
    passed = worst <= TOL
    return CheckReport("variance_chain", seed, passed, details={"max_gap": worst},
                       message="" if passed else f"Influence/error/variance chain broken by {worst:.3g}.",
                       bare=None if passed else bare)


def check_cost_telescoping(trace: GreedyTrace, seed: Optional[int] = None) -> CheckReport:
    """
    Each split lowers the cost by exactly the chosen score.

    Checks cost_after = cost_before - score per step, consecutive steps chain,
    the cost never increases, and the scores sum to initial minus final cost.
    """
    failures = []
    previous = trace.initial_cost
    for step in trace.steps:
        if abs(step.cost_before - previous) > TOL:
            failures.append(f"step {step.step}: cost_before does not continue the previous step")
        if abs(step.cost_before - step.score - step.cost_after) > TOL:
            failures.append(f"step {step.step}: cost drop {step.cost_before - step.cost_after:.6g} != score {step.score:.6g}")
        if step.cost_after > step.cost_before + TOL:
            failures.append(f"step {step.step}: cost increased")
        previous = step.cost_after
    total = sum(step.score for step in trace.steps)
    final = trace.steps[-1].cost_after if trace.steps else trace.initial_cost
    if abs(total - (trace.initial_cost - final)) > TOL:
        failures.append(f"scores sum to {total:.6g}, cost fell by {trace.initial_cost - final:.6g}")
    return CheckReport("cost_telescoping", seed, not failures,
                       details={"score_sum": total, "cost_drop": trace.initial_cost - final},
                       message="; ".join(failures))


def effective_average_depth(ground_truth: DecisionTree, bare: BareTree, dist: ProductDistribution) -> float:
    """
    Largest average depth of the ground truth restricted to any leaf region, and of the ground truth itself.

    Restricting a tree can raise its conditional average depth above the unrestricted one.
    """
    value = average_depth(ground_truth, dist)
    for info in bare.leaves():
        value = max(value, average_depth(ground_truth.subtree(info.restriction), dist))
    return value


def check_score_bounds(
    trace: GreedyTrace,
    ground_truth: DecisionTree,
    epsilon: float,
    dist: ProductDistribution,
    seed: Optional[int] = None,
) -> CheckReport:
    """
    Lower bounds on the chosen score at every step j (j leaves before the split).

    Hard, with Delta_eff from effective_average_depth:
        error > eps  =>  score >= eps / (j * Delta_eff)
        score >= cost / (2 j D_opt Delta_eff)
    Recorded only:
        error > eps  =>  score >= 2 eps / (j * Delta_opt)
        score >= cost / (j D_opt Delta_opt)
    """
    d_opt, delta_opt = max_depth(ground_truth), average_depth(ground_truth, dist)
    failures: List[str] = []
    stated_high_error = stated_high_cost = 0
    for step in trace.steps:
        j = step.leaves
        delta_eff = effective_average_depth(ground_truth, bare_tree_after(trace, step.step - 1, dist.n), dist)
        if step.error_before > epsilon:
            if step.score < 2.0 * epsilon / (j * delta_opt) - TOL:
                stated_high_error += 1
            if step.score < epsilon / (j * delta_eff) - TOL:
                failures.append(f"step {step.step}: score {step.score:.6g} < eps/(j Delta_eff) {epsilon / (j * delta_eff):.6g}")
        if step.score < step.cost_before / (j * d_opt * delta_opt) - TOL:
            stated_high_cost += 1
        if step.score < step.cost_before / (2.0 * j * d_opt * delta_eff) - TOL:
            failures.append(f"step {step.step}: score {step.score:.6g} < cost/(2 j D Delta_eff)")
    return CheckReport(
        "score_bounds", seed, not failures,
        details={
            "steps": trace.splits,
            "D_opt": d_opt,
            "Delta_opt": delta_opt,
            "stated_high_error_misses": stated_high_error,
            "stated_high_cost_misses": stated_high_cost,
        },
        message="; ".join(failures),
    )


def check_size_bound(
    final_size: int, epsilon: float, d_opt: float, delta_opt: float, seed: Optional[int] = None
) -> CheckReport:
    """final_size <= max((e Delta / (eps D))^(Delta D), e^(Delta D))."""
    bound = size_bound(epsilon, d_opt, delta_opt)
    passed = final_size <= bound * (1.0 + 1e-12)
    return CheckReport("size_bound", seed, passed,
                       details={"size": final_size, "bound": bound,
                                "robust_bound": robust_size_bound(epsilon, d_opt, delta_opt)},
                       message="" if passed else f"Size {final_size} exceeds bound {bound:.6g}.")


def _estimator_probes(
    target: DecisionTree,
    dist: ProductDistribution,
    bare: BareTree,
    repetitions: int,
    pair_count: int,
    master_seed: int,
    attempt: int,
):
    oracle = TreeOracle(target, dist)
    views = leaf_views(bare, target, dist)
    probes = {}
    for i in range(dist.n):
        rng = derive_rng(master_seed, i, attempt)
        batch = draw_pairs(oracle, i, rng, repetitions * pair_count)
        leaf_x = route_many(bare, batch.x).reshape(repetitions, pair_count)
        leaf_xi = route_many(bare, batch.xi).reshape(repetitions, pair_count)
        disagree = batch.disagree.reshape(repetitions, pair_count)
        for leaf_id, view in views.items():
            if i in view.restriction:
                continue
            estimates = np.mean((leaf_x == leaf_id) & (leaf_xi == leaf_id) & disagree, axis=1)
            exact = reach_probability(dist, view.restriction) * influence(view, dist, i)
            probes[(leaf_id, i)] = (exact, estimates)
    return probes


def _within_band(exact: float, estimates: np.ndarray) -> bool:
    mean = float(np.mean(estimates))
    error = float(stats.sem(estimates)) if estimates.size > 1 else 0.0
    if error == 0.0:
        return abs(mean - exact) <= 1e-12
    return abs(mean - exact) <= 3.0 * error


def check_estimator_unbiasedness(
    target: DecisionTree,
    dist: ProductDistribution,
    bare: BareTree,
    repetitions: int = 200,
    pair_count: int = 1000,
    seed: int = 0,
    required_fraction: float = 0.95,
) -> CheckReport:
    """
    Monte Carlo means of the pair estimator against exact scores.

    Every (leaf, free coordinate) probe must land within three standard errors;
    probes that miss are re-drawn once with a fresh stream before counting as misses.
    """
    probes = _estimator_probes(target, dist, bare, repetitions, pair_count, seed, 0)
    misses = [key for key, (exact, estimates) in probes.items() if not _within_band(exact, estimates)]
    if misses:
        retried = _estimator_probes(target, dist, bare, repetitions, pair_count, seed, 1)
        misses = [key for key in misses if not _within_band(*retried[key])]
    total = len(probes)
    fraction = 1.0 if total == 0 else 1.0 - len(misses) / total
    passed = fraction >= required_fraction
    return CheckReport(
        "estimator_unbiasedness", seed, passed, hard=False,
        details={"probes": total, "misses": len(misses), "fraction_within": fraction},
        message="" if passed else f"Probes outside the 3-sigma band: {misses}",
        bare=None if passed else bare,
    )


def check_robust_selection(
    trace: PracticalTrace,
    target: Target,
    dist: ProductDistribution,
    seed: Optional[int] = None,
) -> CheckReport:
    """
    Exact score of every split a sample-driven build made, relative to the best exact score.

    Replays the trace with the exact engine; ratios of at least 1/4 satisfy the
    approximate-selection hypothesis. Statistical, so the report only flags.
    """
    ratios = []
    for step in trace.steps:
        bare = bare_tree_after(trace, step.step - 1, dist.n)
        views = leaf_views(bare, target, dist)
        best = 0.0
        for leaf_id, view in views.items():
            p = reach_probability(dist, view.restriction)
            values = influences(view, dist)
            best = max(best, p * float(np.max(values)))
        view = views[step.leaf_id]
        chosen = reach_probability(dist, view.restriction) * influence(view, dist, step.coordinate)
        ratios.append(1.0 if best == 0.0 else chosen / best)
    minimum = min(ratios) if ratios else 1.0
    passed = minimum >= 0.25
    return CheckReport("robust_selection", seed, passed, hard=False,
                       details={"steps": len(ratios), "min_ratio": minimum,
                                "mean_ratio": float(np.mean(ratios)) if ratios else 1.0},
                       message="" if passed else f"A split scored {minimum:.3g} of the best exact score.")
