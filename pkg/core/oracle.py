"""Query access to a hidden target function f: {0,1}^n -> {-1, +1}."""

from typing import Callable, Optional, Sequence

import numpy as np

from core.distribution import ProductDistribution, Restriction, as_bitvector
from core.errors import DimensionMismatchError
from core.trees import DecisionTree, route_many

# Rows enumerated per evaluation when building a truth table
TRUTH_TABLE_BLOCK = 2 ** 16


class TargetOracle:
    """
    Base class for targets reachable only through label queries and random samples.

    Every label query and every random draw goes through this class, which keeps
    the running totals reported in sample-usage reports.
    """

    def __init__(self, distribution: ProductDistribution):
        """
        Initialize the oracle.

        Args:
            distribution: The product distribution samples are drawn from
        """
        self.distribution = distribution
        self.label_queries = 0
        self.random_draws = 0

    @property
    def dimension(self) -> int:
        return self.distribution.n

    def _evaluate(self, points: np.ndarray) -> np.ndarray:
        """Labels of the rows of a (m, n) bit matrix; implemented by subclasses."""
        raise NotImplementedError

    def label(self, x: Sequence[int]) -> int:
        """Label query f(x)."""
        bits = as_bitvector(x, self.dimension)
        return int(self.label_batch(bits[None, :])[0])

    def label_batch(self, points: np.ndarray) -> np.ndarray:
        """Label queries for every row of points; counted once per row."""
        points = np.asarray(points, dtype=np.uint8)
        if points.ndim != 2 or points.shape[1] != self.dimension:
            raise DimensionMismatchError(
                f"Expected points of shape (m, {self.dimension}), got {points.shape}."
            )
        self.label_queries += points.shape[0]
        return self._evaluate(points).astype(np.int8)

    def draw(self, rng: np.random.Generator, m: int = 1) -> np.ndarray:
        """Draw m points x ~ mu; counted once per point."""
        self.random_draws += m
        return self.distribution.sample(rng, m)

    def reset_counters(self) -> None:
        self.label_queries = 0
        self.random_draws = 0

    def truth_table(self, restriction: Restriction = Restriction()) -> np.ndarray:
        """
        Values of f on every point consistent with the restriction.

        Enumeration does not count as label queries; it is the exact engine's
        view of f, not the learner's. Points are built and evaluated in blocks of
        TRUTH_TABLE_BLOCK rows.

        Returns:
            int8 array with one axis of length 2 per free coordinate, in coordinate order
        """
        free = restriction.free_coordinates(self.dimension)
        k = len(free)
        total = 2 ** k
        table = np.empty(total, dtype=np.int8)
        for start in range(0, total, TRUTH_TABLE_BLOCK):
            # Row r of the table holds the bits of r, most significant first
            rows = np.arange(start, min(start + TRUTH_TABLE_BLOCK, total), dtype=np.uint32)
            points = np.zeros((len(rows), self.dimension), dtype=np.uint8)
            for axis, i in enumerate(free):
                points[:, i] = (rows >> (k - 1 - axis)) & 1
            for i, b in restriction:
                points[:, i] = b
            table[start:start + len(rows)] = self._evaluate(points)
        return table.reshape((2,) * k)


class TreeOracle(TargetOracle):
    """A target computed by a known decision tree (the ground truth of experiments)."""

    def __init__(self, tree: DecisionTree, distribution: ProductDistribution):
        super().__init__(distribution)
        if tree.required_dimension() > distribution.n:
            raise DimensionMismatchError(
                f"Tree queries coordinates beyond n={distribution.n}."
            )
        self.tree = tree

    def _evaluate(self, points: np.ndarray) -> np.ndarray:
        return route_many(self.tree, points)


class FunctionOracle(TargetOracle):
    """A target given as a vectorized Python callable on bit matrices."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], distribution: ProductDistribution):
        super().__init__(distribution)
        self.fn = fn

    def _evaluate(self, points: np.ndarray) -> np.ndarray:
        values = np.asarray(self.fn(points))
        if not np.all(np.isin(values, (-1, 1))):
            raise ValueError("Target function must return only -1 and +1.")
        return values


def as_oracle(target, distribution: ProductDistribution) -> TargetOracle:
    """Wrap a DecisionTree as an oracle; oracles pass through after a dimension check."""
    if isinstance(target, TargetOracle):
        if target.dimension != distribution.n:
            raise DimensionMismatchError(
                f"Oracle dimension {target.dimension} does not match n={distribution.n}."
            )
        return target
    if isinstance(target, DecisionTree):
        return TreeOracle(target, distribution)
    raise TypeError(f"Cannot use {type(target).__name__} as a target.")


def ground_truth_tree(target) -> Optional[DecisionTree]:
    """The decision tree behind a target, when one is known."""
    if isinstance(target, DecisionTree):
        return target
    if isinstance(target, TreeOracle):
        return target.tree
    return None
