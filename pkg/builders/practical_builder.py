"""Sample-driven greedy top-down induction with adaptive sample schedules."""

import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from builders.base_builder import BaseBuilder
from builders.exact_builder import practical_split_bound
from core.distribution import ProductDistribution
from core.oracle import TargetOracle, as_oracle, ground_truth_tree
from core.trees import BareTree, DecisionTree, average_depth, max_depth, route_many
from utils import settings
from utils.sampling import (
    LabeledPool,
    LeafSampleState,
    PairPool,
    draw_pairs,
    empirical_error,
)
from utils.schedules import schedule_M_EE, schedule_M_LL, schedule_M_S
from utils.seeding import ERROR_ESTIMATION, LABELING, derive_rng, pair_purpose


@dataclass(frozen=True)
class PracticalStep:
    """One split of the sample-driven builder."""

    step: int
    leaf_id: int
    coordinate: int
    estimated_score: float
    misclassified: int
    error_samples: int
    leaves: int


@dataclass(frozen=True)
class UsageRow:
    """Schedules and cumulative oracle usage once the sets of a step are filled."""

    step: int
    leaves: int
    M_S: int
    M_LL: int
    M_EE: int
    label_queries: int
    random_draws: int


@dataclass
class SampleUsageReport:
    rows: List[UsageRow] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(row) for row in self.rows], columns=list(UsageRow.__dataclass_fields__))

    def write_csv(self, path: Union[str, Path]) -> None:
        self.to_frame().to_csv(path, index=False)

    @property
    def label_queries(self) -> int:
        return self.rows[-1].label_queries if self.rows else 0

    @property
    def random_draws(self) -> int:
        return self.rows[-1].random_draws if self.rows else 0


@dataclass
class PracticalTrace:
    steps: List[PracticalStep] = field(default_factory=list)
    terminated: bool = False
    final_misclassified: Optional[int] = None
    final_error_samples: Optional[int] = None
    bare: Optional[BareTree] = None

    @property
    def splits(self) -> int:
        return len(self.steps)

    @property
    def size(self) -> int:
        return len(self.steps) + 1

    def to_rows(self) -> List[Dict]:
        return [asdict(step) for step in self.steps]


class PracticalTopDownBuilder(BaseBuilder):
    """
    Greedy top-down builder driven only by label queries and random samples.

    Three sample sets are kept: labeling samples (majority labels per leaf),
    error-estimation samples (termination) and, for every coordinate, pairs
    whose second point re-draws that coordinate (score estimation). At step j
    each set holds exactly its schedule at j; after a split the difference to
    the schedule at j+1 is drawn fresh and routed from the root.
    """

    logger = logging.getLogger("PracticalTopDownBuilder")

    def __init__(
        self,
        oracle: Union[TargetOracle, DecisionTree],
        distribution: ProductDistribution,
        epsilon: float,
        delta: float,
        seed: Optional[int] = None,
        halve_epsilon: bool = False,
    ):
        """
        Initialize the builder and fill the step-1 sample sets.

        Args:
            oracle: Target oracle (a decision tree is wrapped into one)
            distribution: The product distribution samples are drawn from
            epsilon: Target error in (0, 1)
            delta: Failure probability in (0, 1)
            seed: Master seed of the derived random streams
            halve_epsilon: Run the schedules and the stopping rule at epsilon / 2
        """
        super().__init__(distribution, epsilon)
        if not 0.0 < delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {delta}.")
        self.oracle = as_oracle(oracle, distribution)
        self.delta = delta
        self.accuracy = epsilon / 2.0 if halve_epsilon else epsilon
        self.seed = settings.master_seed() if seed is None else seed
        n = distribution.n
        self._labeling = LabeledPool(n)
        self._error = LabeledPool(n)
        self._pairs = [PairPool(n, i) for i in range(n)]
        self._queries_at_start = self.oracle.label_queries
        self._draws_at_start = self.oracle.random_draws
        self.trace = PracticalTrace()
        self.usage = SampleUsageReport()
        self._replenish(1)

    def schedules(self, j: int) -> Tuple[int, int, int]:
        """(M_S, M_LL, M_EE) at step j."""
        return (
            schedule_M_S(j, self.delta, self.accuracy, self.distribution.n),
            schedule_M_LL(j, self.accuracy, self.delta),
            schedule_M_EE(j, self.accuracy, self.delta),
        )

    def _fill(self, pool: LabeledPool, target: int, purpose: int, j: int) -> None:
        need = target - len(pool)
        if need <= 0:
            return
        points = self.oracle.draw(derive_rng(self.seed, purpose, j), need)
        pool.add(points, self.oracle.label_batch(points), route_many(self.bare, points))

    def _replenish(self, j: int) -> None:
        m_s, m_ll, m_ee = self.schedules(j)
        self._fill(self._labeling, m_ll, LABELING, j)
        self._fill(self._error, m_ee, ERROR_ESTIMATION, j)
        for pool in self._pairs:
            need = m_s - len(pool)
            if need > 0:
                rng = derive_rng(self.seed, pair_purpose(pool.coordinate), j)
                batch = draw_pairs(self.oracle, pool.coordinate, rng, need)
                pool.add_batch(batch, route_many(self.bare, batch.x))
        self.usage.rows.append(UsageRow(
            step=j,
            leaves=self.bare.size,
            M_S=m_s,
            M_LL=m_ll,
            M_EE=m_ee,
            label_queries=self.oracle.label_queries - self._queries_at_start,
            random_draws=self.oracle.random_draws - self._draws_at_start,
        ))
        self.logger.debug("Step %d sets filled: M_S=%d M_LL=%d M_EE=%d", j, m_s, m_ll, m_ee)

    def leaf_labels(self) -> Dict[int, int]:
        """Majority label of the labeling samples at every leaf; ties and empty leaves give +1."""
        size = self.bare.next_id
        positive = np.bincount(self._labeling.leaves[self._labeling.labels == 1], minlength=size)
        negative = np.bincount(self._labeling.leaves[self._labeling.labels == -1], minlength=size)
        return {leaf_id: 1 if positive[leaf_id] >= negative[leaf_id] else -1 for leaf_id in self.bare.leaf_ids()}

    def score_estimates(self) -> Dict[Tuple[int, int], float]:
        """
        Estimated score of every (leaf, coordinate) with the coordinate free at the leaf.

        For a free coordinate, x reaches the leaf iff its partner does, so only
        the owner leaf of each disagreeing pair needs counting.
        """
        size = self.bare.next_id
        rates = [pool.disagreement_counts(size) / len(pool) for pool in self._pairs]
        estimates = {}
        for info in self.bare.leaves():
            for i in info.restriction.free_coordinates(self.distribution.n):
                estimates[(info.leaf.id, i)] = float(rates[i][info.leaf.id])
        return estimates

    def evaluate(self) -> Dict:
        labels = self.leaf_labels()
        misclassified, total = empirical_error(labels, self._error.leaves, self._error.labels)
        chosen, best = (None, None), -1.0
        for key, value in sorted(self.score_estimates().items()):
            if value > best:
                chosen, best = key, value
        return {
            "step": self.step,
            "labels": labels,
            "misclassified": misclassified,
            "error_samples": total,
            "leaf_id": chosen[0],
            "coordinate": chosen[1],
            "score": max(best, 0.0),
        }

    def should_stop(self, evaluation: Dict) -> bool:
        return evaluation["misclassified"] <= 0.75 * self.accuracy * evaluation["error_samples"]

    def split(self, evaluation: Dict) -> bool:
        leaf_id, coordinate = evaluation["leaf_id"], evaluation["coordinate"]
        if coordinate is None:
            return False
        self.trace.steps.append(PracticalStep(
            step=evaluation["step"],
            leaf_id=leaf_id,
            coordinate=coordinate,
            estimated_score=evaluation["score"],
            misclassified=evaluation["misclassified"],
            error_samples=evaluation["error_samples"],
            leaves=evaluation["step"],
        ))
        self.bare, lo_id, hi_id = self.bare.split(leaf_id, coordinate)
        for pool in [self._labeling, self._error, *self._pairs]:
            pool.reassign(leaf_id, coordinate, lo_id, hi_id)
        self.logger.debug(
            "Step %d: split leaf %d on x%d (estimated score %.6g, %d/%d misclassified)",
            evaluation["step"], leaf_id, coordinate, evaluation["score"],
            evaluation["misclassified"], evaluation["error_samples"],
        )
        self._replenish(self.step)
        return True

    def leaf_state(self, leaf_id: int) -> LeafSampleState:
        """The samples currently owned by a leaf."""
        self.bare.restriction_of(leaf_id)
        return LeafSampleState(
            leaf_id=leaf_id,
            labeling=self._labeling.labels[self._labeling.rows_at(leaf_id)],
            error=self._error.labels[self._error.rows_at(leaf_id)],
            pairs={pool.coordinate: pool.batch(pool.rows_at(leaf_id)) for pool in self._pairs},
        )

    def finish(self, outcome: Dict) -> Tuple[DecisionTree, PracticalTrace, SampleUsageReport]:
        final = outcome["final_evaluation"]
        self.trace.terminated = outcome["terminated"]
        self.trace.final_misclassified = final["misclassified"]
        self.trace.final_error_samples = final["error_samples"]
        self.trace.bare = self.bare
        return self.bare.labeled(final["labels"]), self.trace, self.usage


def build_topdown_practical(
    oracle: Union[TargetOracle, DecisionTree],
    distribution: ProductDistribution,
    epsilon: float,
    delta: float,
    seed: Optional[int] = None,
    max_splits: Optional[int] = None,
    halve_epsilon: bool = False,
    ground_truth: Optional[DecisionTree] = None,
) -> Tuple[DecisionTree, PracticalTrace, SampleUsageReport]:
    """
    Grow a tree from samples until the held-out error estimate clears 3/4 of epsilon.

    Args:
        oracle: Target oracle or decision tree
        distribution: The product distribution
        epsilon: Target error in (0, 1)
        delta: Failure probability in (0, 1)
        seed: Master seed (TOPDOWN_MASTER_SEED when omitted)
        max_splits: Split budget; defaults to the approximate-selection size bound when
            the ground truth is known, otherwise 2^n - 1
        halve_epsilon: Aim for epsilon / 2 internally
        ground_truth: Tree computing f, used only for the default budget

    Returns:
        Tuple of (majority-labeled tree, trace, sample-usage report)
    """
    n = distribution.n
    if max_splits is None:
        cap = 2 ** n - 1
        truth = ground_truth if ground_truth is not None else ground_truth_tree(oracle)
        max_splits = cap
        if truth is not None:
            bound = practical_split_bound(epsilon, max_depth(truth), average_depth(truth, distribution))
            if bound < cap + 1:
                max_splits = max(math.ceil(bound) - 1, 0)
    builder = PracticalTopDownBuilder(oracle, distribution, epsilon, delta, seed, halve_epsilon)
    return builder.build(max_splits)
