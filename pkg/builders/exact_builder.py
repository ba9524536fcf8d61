"""Greedy top-down induction with exact influences."""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from builders.base_builder import BaseBuilder
from core.distribution import ProductDistribution, Restriction, reach_probability
from core.oracle import ground_truth_tree
from core.trees import BareTree, DecisionTree, average_depth, max_depth
from engines.exact_engine import (
    SubfunctionView,
    Target,
    influence,
    leaf_error,
    majority_value,
)


@dataclass(frozen=True)
class GreedyStep:
    """One split of the greedy builder; `leaves` is the leaf count before the split (= step)."""

    step: int
    leaf_id: int
    coordinate: int
    score: float
    cost_before: float
    cost_after: float
    error_before: float
    leaves: int


@dataclass
class GreedyTrace:
    """Per-step record of a greedy build."""

    steps: List[GreedyStep] = field(default_factory=list)
    initial_cost: float = 0.0
    final_cost: Optional[float] = None
    final_error: Optional[float] = None
    terminated: bool = False
    bare: Optional[BareTree] = None

    @property
    def splits(self) -> int:
        return len(self.steps)

    @property
    def size(self) -> int:
        return len(self.steps) + 1

    def to_rows(self) -> List[Dict]:
        return [asdict(step) for step in self.steps]


def bare_tree_after(trace: GreedyTrace, splits: int, dimension: Optional[int] = None) -> BareTree:
    """
    Replay the first `splits` splits of a trace.

    Leaf ids are handed out deterministically, so the replayed ids match the trace.
    """
    bare = BareTree.single_leaf(dimension)
    for step in trace.steps[:splits]:
        bare, _, _ = bare.split(step.leaf_id, step.coordinate)
    return bare


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def size_bound(epsilon: float, d_opt: float, delta_opt: float) -> float:
    """
    max((e * Delta / (eps * D))^(Delta * D), e^(Delta * D)), the size guaranteed for greedy.

    A ground truth of depth 0 (constant f) gives 1.
    """
    if d_opt == 0 or delta_opt == 0:
        return 1.0
    exponent = delta_opt * d_opt
    return _safe_exp(exponent * max(math.log(math.e * delta_opt / (epsilon * d_opt)), 1.0))


def phase_one_bound(epsilon: float, d_opt: float, delta_opt: float) -> float:
    """Steps until the cost falls to eps * D: max((Delta / (eps * D))^(D * Delta), 1)."""
    if d_opt == 0 or delta_opt == 0:
        return 1.0
    return _safe_exp(delta_opt * d_opt * max(math.log(delta_opt / (epsilon * d_opt)), 0.0))


def phase_two_bound(phase_one_steps: float, d_opt: float, delta_opt: float) -> float:
    """Total steps once the cost is low: J1 * e^(Delta * D)."""
    return phase_one_steps * _safe_exp(delta_opt * d_opt)


def robust_size_bound(epsilon: float, d_opt: float, delta_opt: float) -> float:
    """Size bound when every chosen score is at least a quarter of the best one."""
    if d_opt == 0 or delta_opt == 0:
        return 1.0
    exponent = 4.0 * delta_opt * d_opt
    return _safe_exp(exponent * max(math.log(2.0 * math.e * delta_opt / (epsilon * d_opt)), 1.0))


def practical_split_bound(epsilon: float, d_opt: float, delta_opt: float) -> float:
    """Step budget of the sample-driven builder aiming for error eps / 2."""
    return robust_size_bound(epsilon / 2.0, d_opt, delta_opt)


def default_max_splits(
    dimension: int,
    epsilon: float,
    distribution: ProductDistribution,
    ground_truth: Optional[DecisionTree] = None,
) -> int:
    """
    Split budget: the size bound at the ground truth's depths, capped by 2^n leaves.

    Args:
        dimension: Ambient n
        epsilon: Target error
        distribution: Distribution the ground truth's average depth is taken under
        ground_truth: Tree computing f, if known

    Returns:
        Maximum number of splits
    """
    cap = 2 ** dimension - 1
    if ground_truth is None:
        return cap
    bound = size_bound(epsilon, max_depth(ground_truth), average_depth(ground_truth, distribution))
    if bound >= cap + 1:
        return cap
    return max(math.ceil(bound) - 1, 0)


@dataclass
class _LeafStats:
    view: SubfunctionView
    reach: float
    best: float
    coordinate: Optional[int]
    total_influence: float
    error: float
    majority: int

    @property
    def score(self) -> float:
        return self.reach * self.best


class ExactTopDownBuilder(BaseBuilder):
    """
    Splits the leaf of highest score p_v * max_i Inf_i(f_v) on its most influential coordinate.

    Only the two children of a split leaf are rescored; every other leaf keeps
    its cached statistics since its subfunction did not change.
    """

    logger = logging.getLogger("ExactTopDownBuilder")

    def __init__(
        self,
        f: Target,
        distribution: ProductDistribution,
        epsilon: float,
        max_free: Optional[int] = None,
    ):
        """
        Initialize the builder at the single-leaf tree.

        Args:
            f: Target function as a decision tree or oracle
            distribution: The product distribution
            epsilon: Target error in (0, 1)
            max_free: Enumeration cap override for the exact engine
        """
        super().__init__(distribution, epsilon)
        self.f = f
        root = SubfunctionView(f, Restriction(), distribution.n, max_free)
        self._leaves: Dict[int, _LeafStats] = {0: self._leaf_stats(root)}
        self.trace = GreedyTrace(initial_cost=self._cost())

    def _leaf_stats(self, view: SubfunctionView) -> _LeafStats:
        dist = self.distribution
        values = [influence(view, dist, i) for i in view.free]
        if values:
            k = int(np.argmax(values))
            best, coordinate = float(values[k]), view.free[k]
        else:
            best, coordinate = 0.0, None
        return _LeafStats(
            view=view,
            reach=reach_probability(dist, view.restriction),
            best=best,
            coordinate=coordinate,
            total_influence=float(sum(values)),
            error=leaf_error(view, dist),
            majority=majority_value(view, dist),
        )

    def _cost(self) -> float:
        return float(sum(s.reach * s.total_influence for s in self._leaves.values()))

    def _error(self) -> float:
        return float(sum(s.reach * s.error for s in self._leaves.values()))

    def evaluate(self) -> Dict:
        """
        Exact error of the f-completion, the cost, and the leaf to split next.

        Returns:
            Dictionary with step, error, cost, leaf_id, coordinate and score
        """
        chosen = None
        for leaf_id in sorted(self._leaves):
            stats = self._leaves[leaf_id]
            if chosen is None or stats.score > self._leaves[chosen].score:
                chosen = leaf_id
        stats = self._leaves[chosen]
        return {
            "step": self.step,
            "error": self._error(),
            "cost": self._cost(),
            "leaf_id": chosen,
            "coordinate": stats.coordinate,
            "score": stats.score,
        }

    def should_stop(self, evaluation: Dict) -> bool:
        return evaluation["error"] <= self.epsilon

    def split(self, evaluation: Dict) -> bool:
        leaf_id, coordinate, score = evaluation["leaf_id"], evaluation["coordinate"], evaluation["score"]
        # error > eps leaves a non-constant leaf, whose best influence is positive
        assert coordinate is not None and score > 0.0, (
            f"Completion error {evaluation['error']} exceeds epsilon but every leaf scores 0."
        )
        parent = self._leaves.pop(leaf_id)
        self.bare, lo_id, hi_id = self.bare.split(leaf_id, coordinate)
        self._leaves[lo_id] = self._leaf_stats(parent.view.restrict(coordinate, 0))
        self._leaves[hi_id] = self._leaf_stats(parent.view.restrict(coordinate, 1))

        cost_after = self._cost()
        self.trace.steps.append(GreedyStep(
            step=evaluation["step"],
            leaf_id=leaf_id,
            coordinate=coordinate,
            score=score,
            cost_before=evaluation["cost"],
            cost_after=cost_after,
            error_before=evaluation["error"],
            leaves=evaluation["step"],
        ))
        self.logger.debug(
            "Step %d: split leaf %d on x%d (score %.6g, cost %.6g -> %.6g)",
            evaluation["step"], leaf_id, coordinate, score, evaluation["cost"], cost_after,
        )
        return True

    def f_completion(self) -> DecisionTree:
        """The current bare tree labeled with conditional majorities."""
        return self.bare.labeled({leaf_id: s.majority for leaf_id, s in self._leaves.items()})

    def finish(self, outcome: Dict) -> Tuple[DecisionTree, GreedyTrace]:
        final = outcome["final_evaluation"]
        self.trace.final_cost = final["cost"]
        self.trace.final_error = final["error"]
        self.trace.terminated = outcome["terminated"]
        self.trace.bare = self.bare
        if not outcome["terminated"]:
            self.logger.warning(
                "Stopped after %d splits with error %.6g > epsilon %s",
                outcome["splits"], final["error"], self.epsilon,
            )
        return self.f_completion(), self.trace


def build_topdown_exact(
    f: Target,
    distribution: ProductDistribution,
    epsilon: float,
    max_splits: Optional[int] = None,
    ground_truth: Optional[DecisionTree] = None,
    max_free: Optional[int] = None,
) -> Tuple[DecisionTree, GreedyTrace]:
    """
    Grow a tree greedily until its f-completion is an epsilon-approximation of f.

    Args:
        f: Target as a decision tree or oracle
        distribution: The product distribution
        epsilon: Target error in (0, 1)
        max_splits: Split budget; defaults to the size bound at the ground truth's depths
        ground_truth: Tree computing f used for the default budget (taken from f when it is a tree)
        max_free: Enumeration cap override

    Returns:
        Tuple of (f-completion of the grown tree, trace); trace.terminated is False
        when the budget ran out first
    """
    if ground_truth is None:
        ground_truth = ground_truth_tree(f)
    if max_splits is None:
        max_splits = default_max_splits(distribution.n, epsilon, distribution, ground_truth)
    builder = ExactTopDownBuilder(f, distribution, epsilon, max_free)
    return builder.build(max_splits)
