"""Labeled samples, re-randomized pairs and the estimators computed from them."""

from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from core.distribution import ProductDistribution
from core.errors import DimensionMismatchError, EmptySampleError, UnknownLeafError
from core.oracle import TargetOracle
from core.trees import BareTree, route_many


@dataclass(frozen=True)
class PairBatch:
    """
    Labeled pairs ((x, f(x)), (x^(i), f(x^(i)))) for one coordinate i.

    x^(i) equals x except that coordinate i was re-drawn from mu_i.
    """

    coordinate: int
    x: np.ndarray
    fx: np.ndarray
    xi: np.ndarray
    fxi: np.ndarray

    def __len__(self) -> int:
        return self.x.shape[0]

    @property
    def disagree(self) -> np.ndarray:
        return self.fx != self.fxi


def draw_pairs(oracle: TargetOracle, coordinate: int, rng: np.random.Generator, m: int) -> PairBatch:
    """
    Draw m independent labeled pairs for a coordinate.

    Each pair costs two random draws (x and x') and two label queries.
    """
    if not 0 <= coordinate < oracle.dimension:
        raise DimensionMismatchError(f"Coordinate {coordinate} is out of range for n={oracle.dimension}.")
    x = oracle.draw(rng, m)
    x_prime = oracle.draw(rng, m)
    xi = x.copy()
    xi[:, coordinate] = x_prime[:, coordinate]
    return PairBatch(coordinate, x, oracle.label_batch(x), xi, oracle.label_batch(xi))


def draw_pair(
    oracle: TargetOracle,
    dist: ProductDistribution,
    coordinate: int,
    rng: np.random.Generator,
) -> Tuple[Tuple[np.ndarray, int], Tuple[np.ndarray, int]]:
    """
    Draw one labeled pair ((x, f(x)), (x^(i), f(x^(i)))).

    Args:
        oracle: Target oracle; it owns the sampling distribution
        dist: The distribution the caller expects the oracle to sample from
        coordinate: The re-drawn coordinate i
        rng: Random generator

    Returns:
        The two labeled points
    """
    if dist != oracle.distribution:
        raise DimensionMismatchError("Oracle samples from a different distribution than the one given.")
    batch = draw_pairs(oracle, coordinate, rng, 1)
    return (batch.x[0], int(batch.fx[0])), (batch.xi[0], int(batch.fxi[0]))


def score_estimate(pairs: PairBatch, leaf_id: int, tree: BareTree) -> float:
    """
    Fraction of pairs whose endpoints both reach the leaf and whose labels disagree.

    Unbiased for p_v * Inf_i(f_v) of the leaf when i is not queried on its path.
    """
    if len(pairs) == 0:
        raise EmptySampleError(f"No pairs for coordinate {pairs.coordinate}.")
    both = (route_many(tree, pairs.x) == leaf_id) & (route_many(tree, pairs.xi) == leaf_id)
    return float(np.count_nonzero(both & pairs.disagree)) / len(pairs)


def majority_label(labels: np.ndarray) -> int:
    """Majority of +/-1 labels; ties and the empty set give +1."""
    labels = np.asarray(labels)
    return 1 if np.count_nonzero(labels == 1) >= np.count_nonzero(labels == -1) else -1


def empirical_error(
    leaf_labels: Mapping[int, int],
    sample_leaves: np.ndarray,
    sample_labels: np.ndarray,
) -> Tuple[int, int]:
    """
    Misclassified count of held-out samples under per-leaf labels.

    Args:
        leaf_labels: Label of every leaf id
        sample_leaves: Leaf each sample routes to
        sample_labels: f(x) of each sample

    Returns:
        Tuple of (misclassified count, total count)
    """
    sample_leaves = np.asarray(sample_leaves)
    if sample_leaves.size == 0:
        return 0, 0
    unknown = set(np.unique(sample_leaves).tolist()) - set(leaf_labels)
    if unknown:
        raise UnknownLeafError(f"Samples route to unlabeled leaves {sorted(unknown)}.")
    lookup = np.zeros(max(leaf_labels) + 1, dtype=np.int8)
    for leaf_id, label in leaf_labels.items():
        lookup[leaf_id] = label
    predicted = lookup[sample_leaves]
    return int(np.count_nonzero(predicted != np.asarray(sample_labels))), int(sample_leaves.size)


class LabeledPool:
    """
    Labeled samples (x, f(x)) together with the leaf each x routes to.

    Points are kept bit-packed; a split only rewrites the leaf of the rows held
    by the split leaf.
    """

    def __init__(self, dimension: int):
        self.dimension = dimension
        self.packed = np.zeros((0, (dimension + 7) // 8), dtype=np.uint8)
        self.labels = np.zeros(0, dtype=np.int8)
        self.leaves = np.zeros(0, dtype=np.int64)

    def __len__(self) -> int:
        return self.labels.shape[0]

    def add(self, points: np.ndarray, labels: np.ndarray, leaves: np.ndarray) -> None:
        self.packed = np.concatenate([self.packed, np.packbits(points, axis=1)])
        self.labels = np.concatenate([self.labels, np.asarray(labels, dtype=np.int8)])
        self.leaves = np.concatenate([self.leaves, np.asarray(leaves, dtype=np.int64)])

    def points(self, rows: Optional[np.ndarray] = None) -> np.ndarray:
        packed = self.packed if rows is None else self.packed[rows]
        return np.unpackbits(packed, axis=1, count=self.dimension)

    def bits(self, rows: np.ndarray, var: int) -> np.ndarray:
        """Value of coordinate var for the given rows, read from the packed points."""
        return (self.packed[rows, var // 8] >> (7 - var % 8)) & 1

    def reassign(self, leaf_id: int, var: int, lo_id: int, hi_id: int) -> None:
        """Move the rows held by a split leaf to the child their x reaches."""
        rows = np.flatnonzero(self.leaves == leaf_id)
        self.leaves[rows] = np.where(self.bits(rows, var) == 1, hi_id, lo_id)

    def rows_at(self, leaf_id: int) -> np.ndarray:
        return np.flatnonzero(self.leaves == leaf_id)


class PairPool(LabeledPool):
    """Pairs for one coordinate, owned by the leaf their first point x reaches."""

    def __init__(self, dimension: int, coordinate: int):
        super().__init__(dimension)
        self.coordinate = coordinate
        self.redrawn = np.zeros(0, dtype=np.uint8)
        self.partner_labels = np.zeros(0, dtype=np.int8)

    def add_batch(self, batch: PairBatch, leaves: np.ndarray) -> None:
        if batch.coordinate != self.coordinate:
            raise ValueError(f"Pairs for coordinate {batch.coordinate} added to pool {self.coordinate}.")
        self.add(batch.x, batch.fx, leaves)
        self.redrawn = np.concatenate([self.redrawn, batch.xi[:, self.coordinate]])
        self.partner_labels = np.concatenate([self.partner_labels, batch.fxi])

    def disagreement_counts(self, size: int) -> np.ndarray:
        """Number of label-disagreeing pairs owned by each leaf id below size."""
        disagree = self.labels != self.partner_labels
        return np.bincount(self.leaves[disagree], minlength=size)

    def batch(self, rows: Optional[np.ndarray] = None) -> PairBatch:
        if rows is None:
            rows = np.arange(len(self))
        x = self.points(rows)
        xi = x.copy()
        xi[:, self.coordinate] = self.redrawn[rows]
        return PairBatch(self.coordinate, x, self.labels[rows], xi, self.partner_labels[rows])


@dataclass
class LeafSampleState:
    """Samples held by one leaf: labeling set, error-estimation set and pairs per coordinate."""

    leaf_id: int
    labeling: np.ndarray
    error: np.ndarray
    pairs: Dict[int, PairBatch]

    @property
    def label(self) -> int:
        return majority_label(self.labeling)

    @property
    def misclassified(self) -> int:
        return int(np.count_nonzero(self.error != self.label))
