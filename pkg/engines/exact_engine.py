"""Exact measure-theoretic quantities by enumeration over the free coordinates.

Every quantity is computed from the truth table of a subfunction f_v (f restricted
to a node's region) and the product measure on its free coordinates. Expectations
are tensor contractions, one axis per free coordinate, so nothing of size 2^n
beyond the table itself is materialized.
"""

import logging
from enum import Enum
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from core.distribution import ProductDistribution, Restriction, reach_probability
from core.errors import DimensionMismatchError, EnumerationBudgetError
from core.oracle import TargetOracle
from core.trees import BareTree, DecisionTree, Internal, Leaf, Node
from utils import settings

logger = logging.getLogger("ExactEngine")

Target = Union[DecisionTree, TargetOracle]


class Normalization(str, Enum):
    """How a coordinate's influence is normalized."""

    RERANDOMIZED = "rerandomized"  # Pr[f(x) != f(x^(i))], x_i re-drawn from mu_i
    FLIP = "flip"  # Pr[f(x) != f(x with bit i flipped)]
    DOUBLED = "doubled"  # 2 * RERANDOMIZED


def _tree_table(tree: DecisionTree, free: Tuple[int, ...], restriction: Restriction) -> np.ndarray:
    axis_of = {i: k for k, i in enumerate(free)}
    fixed = restriction.as_dict()
    table = np.zeros((2,) * len(free), dtype=np.int8)

    def fill(node: Node, index: list) -> None:
        while isinstance(node, Internal) and node.var in fixed:
            node = node.hi if fixed[node.var] else node.lo
        if isinstance(node, Leaf):
            table[tuple(index)] = node.label
            return
        pos = axis_of[node.var]
        for bit, child in ((0, node.lo), (1, node.hi)):
            index[pos] = bit
            fill(child, index)
        index[pos] = slice(None)

    fill(tree.root, [slice(None)] * len(free))
    return table


def _contract(values: np.ndarray, probs: Sequence[float]) -> float:
    """E[values] under independent axes with P(axis k = 1) = probs[k]."""
    values = np.asarray(values, dtype=np.float64)
    for p in reversed(probs):
        values = values @ np.array([1.0 - p, p])
    return float(values)


class SubfunctionView:
    """
    The subfunction f_v: f paired with a restriction.

    The truth table over the free coordinates is built on first use and cached;
    views are immutable after that.
    """

    def __init__(
        self,
        target: Target,
        restriction: Restriction = Restriction(),
        dimension: Optional[int] = None,
        max_free: Optional[int] = None,
    ):
        """
        Initialize the view.

        Args:
            target: f as a decision tree or an oracle
            restriction: Coordinates fixed along the path to the node
            dimension: Ambient n (taken from the oracle or tree when omitted)
            max_free: Enumeration cap; defaults to TOPDOWN_MAX_FREE_COORDS
        """
        if dimension is None:
            dimension = target.dimension
        if dimension is None:
            raise DimensionMismatchError("The view needs an explicit dimension for a tree without one.")
        if isinstance(target, TargetOracle) and target.dimension != dimension:
            raise DimensionMismatchError(f"Oracle dimension {target.dimension} != {dimension}.")
        if isinstance(target, DecisionTree) and target.required_dimension() > dimension:
            raise DimensionMismatchError(f"Target tree queries coordinates beyond n={dimension}.")
        restriction.check_dimension(dimension)
        self.target = target
        self.restriction = restriction
        self.dimension = dimension
        self.free = restriction.free_coordinates(dimension)
        self.max_free = settings.max_free_coords() if max_free is None else max_free
        self._table: Optional[np.ndarray] = None

    @property
    def table(self) -> np.ndarray:
        if self._table is None:
            if len(self.free) > self.max_free:
                raise EnumerationBudgetError(
                    f"{len(self.free)} free coordinates exceed the enumeration cap of {self.max_free}."
                )
            logger.debug("Enumerating %d free coordinates", len(self.free))
            if isinstance(self.target, DecisionTree):
                self._table = _tree_table(self.target, self.free, self.restriction)
            else:
                self._table = self.target.truth_table(self.restriction)
        return self._table

    def restrict(self, i: int, bit: int) -> "SubfunctionView":
        """The child view with free coordinate i fixed to bit, sliced from the cached table."""
        child = SubfunctionView(self.target, self.restriction.extend(i, bit), self.dimension, self.max_free)
        if self._table is not None:
            child._table = np.take(self._table, bit, axis=self.free.index(i))
        return child

    def probs(self, dist: ProductDistribution) -> Tuple[float, ...]:
        if dist.n != self.dimension:
            raise DimensionMismatchError(f"Distribution has n={dist.n}, view has n={self.dimension}.")
        return tuple(dist.biases[i] for i in self.free)

    def positive_mass(self, dist: ProductDistribution) -> float:
        """Pr[f_v = +1] under mu conditioned on the restriction."""
        return _contract(self.table == 1, self.probs(dist))


def _sensitivity(view: SubfunctionView, dist: ProductDistribution, i: int) -> float:
    """Pr over the other free coordinates that setting x_i to 0 or 1 changes f_v."""
    probs = view.probs(dist)
    pos = view.free.index(i)
    table = view.table
    differs = np.take(table, 0, axis=pos) != np.take(table, 1, axis=pos)
    return _contract(differs, probs[:pos] + probs[pos + 1:])


def influence(
    view: SubfunctionView,
    dist: ProductDistribution,
    i: int,
    normalization: Normalization = Normalization.RERANDOMIZED,
) -> float:
    """
    Influence of coordinate i on f_v.

    The re-randomization definition Pr[f(x) != f(x^(i))] equals
    2 p_i (1 - p_i) times the probability that flipping x_i matters.
    Restricted coordinates have influence exactly 0.

    Args:
        view: The subfunction
        dist: The product distribution
        i: Coordinate index
        normalization: Which normalization to report

    Returns:
        Influence value
    """
    if not 0 <= i < view.dimension:
        raise DimensionMismatchError(f"Coordinate {i} is out of range for n={view.dimension}.")
    if i in view.restriction:
        return 0.0
    sensitivity = _sensitivity(view, dist, i)
    if normalization == Normalization.FLIP:
        return sensitivity
    value = dist.rerandomization_mass(i) * sensitivity
    if normalization == Normalization.DOUBLED:
        return 2.0 * value
    return value


def influences(
    view: SubfunctionView,
    dist: ProductDistribution,
    normalization: Normalization = Normalization.RERANDOMIZED,
) -> np.ndarray:
    """Influence of every coordinate 0..n-1 (restricted ones are 0)."""
    return np.array([influence(view, dist, i, normalization) for i in range(view.dimension)])


def influence_by_definition(view: SubfunctionView, dist: ProductDistribution, i: int) -> float:
    """
    Pr[f(x) != f(x^(i))] by enumerating every (x, x'_i) pair.

    Independent of the closed form used by influence(); the tests compare them.
    """
    if i in view.restriction:
        return 0.0
    probs = view.probs(dist)
    pos = view.free.index(i)
    table = view.table
    weights = np.ones(())
    for p in probs:
        weights = np.multiply.outer(weights, np.array([1.0 - p, p]))
    total = 0.0
    for bit in (0, 1):
        redrawn = np.expand_dims(np.take(table, bit, axis=pos), pos)
        total += dist.marginal(i, bit) * float(np.sum(weights * (table != redrawn)))
    return total


def total_influence(view: SubfunctionView, dist: ProductDistribution) -> float:
    """Sum of the influences of all coordinates."""
    return float(sum(influence(view, dist, i) for i in view.free))


def variance(view: SubfunctionView, dist: ProductDistribution) -> float:
    """Var(f_v) = 4 mu+ (1 - mu+) for the +/-1 valued subfunction."""
    mu = view.positive_mass(dist)
    return 4.0 * mu * (1.0 - mu)


def pairwise_disagreement(view: SubfunctionView, dist: ProductDistribution) -> float:
    """Pr[f_v(x) != f_v(y)] for independent x, y; equals Var(f_v) / 2."""
    mu = view.positive_mass(dist)
    return 2.0 * mu * (1.0 - mu)


def leaf_error(view: SubfunctionView, dist: ProductDistribution) -> float:
    """error(f_v, +/-1): the minority mass under the conditional distribution."""
    mu = view.positive_mass(dist)
    return min(mu, 1.0 - mu)


def majority_value(view: SubfunctionView, dist: ProductDistribution) -> int:
    """Conditional majority label; a mass of exactly 1/2 resolves to +1."""
    return 1 if view.positive_mass(dist) >= 0.5 else -1


def best_coordinate(view: SubfunctionView, dist: ProductDistribution) -> Tuple[float, Optional[int]]:
    """
    Most influential free coordinate of f_v.

    Returns:
        Tuple of (max influence, coordinate); ties go to the lowest index, and the
        coordinate is None only when no coordinate is free
    """
    if not view.free:
        return 0.0, None
    values = [influence(view, dist, i) for i in view.free]
    k = int(np.argmax(values))
    return float(values[k]), view.free[k]


def _dimension_of(bare: BareTree, f: Target, dist: ProductDistribution) -> int:
    n = dist.n
    if bare.dimension is not None and bare.dimension != n:
        raise DimensionMismatchError(f"Bare tree has n={bare.dimension}, distribution has n={n}.")
    if isinstance(f, TargetOracle) and f.dimension != n:
        raise DimensionMismatchError(f"Oracle has n={f.dimension}, distribution has n={n}.")
    return n


def score(bare: BareTree, leaf_id: int, f: Target, dist: ProductDistribution) -> Tuple[float, Optional[int]]:
    """
    Score(v) = p_v * max_i Inf_i(f_v) of a leaf of a bare tree.

    Returns:
        Tuple of (score, maximizing coordinate), ties to the lowest coordinate
    """
    n = _dimension_of(bare, f, dist)
    restriction = bare.restriction_of(leaf_id)
    view = SubfunctionView(f, restriction, n)
    best, coordinate = best_coordinate(view, dist)
    return reach_probability(dist, restriction) * best, coordinate


def leaf_views(bare: BareTree, f: Target, dist: ProductDistribution) -> Dict[int, SubfunctionView]:
    n = _dimension_of(bare, f, dist)
    return {info.leaf.id: SubfunctionView(f, info.restriction, n) for info in bare.leaves()}


def cost(bare: BareTree, f: Target, dist: ProductDistribution) -> float:
    """cost(T) = sum over leaves of p_v * Inf(f_v)."""
    return float(sum(
        reach_probability(dist, view.restriction) * total_influence(view, dist)
        for view in leaf_views(bare, f, dist).values()
    ))


def f_completion(bare: BareTree, f: Target, dist: ProductDistribution) -> DecisionTree:
    """Label each leaf with the conditional majority of f; the error-minimizing labeling."""
    labels = {leaf_id: majority_value(view, dist) for leaf_id, view in leaf_views(bare, f, dist).items()}
    return bare.labeled(labels)


def completion_error(bare: BareTree, f: Target, dist: ProductDistribution) -> float:
    """Error of the f-completion: sum over leaves of p_v * error(f_v, +/-1)."""
    return float(sum(
        reach_probability(dist, view.restriction) * leaf_error(view, dist)
        for view in leaf_views(bare, f, dist).values()
    ))


def tree_error(tree: DecisionTree, f: Target, dist: ProductDistribution) -> float:
    """
    Pr_{x ~ mu}[T(x) != f(x)], computed exactly.

    Args:
        tree: The hypothesis
        f: The target as a tree or oracle
        dist: The product distribution

    Returns:
        Misclassified probability mass
    """
    n = dist.n
    if tree.required_dimension() > n:
        raise DimensionMismatchError(f"Hypothesis queries coordinates beyond n={n}.")
    hypothesis = SubfunctionView(tree, Restriction(), n)
    target = SubfunctionView(f, Restriction(), n)
    return _contract(hypothesis.table != target.table, target.probs(dist))


def leaf_scores(bare: BareTree, f: Target, dist: ProductDistribution) -> Dict[int, Tuple[float, Optional[int]]]:
    """Score and argmax coordinate of every leaf."""
    scores = {}
    for leaf_id, view in leaf_views(bare, f, dist).items():
        best, coordinate = best_coordinate(view, dist)
        scores[leaf_id] = (reach_probability(dist, view.restriction) * best, coordinate)
    return scores

