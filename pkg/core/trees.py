"""Labeled and bare decision trees over the Boolean cube."""

from dataclasses import dataclass
from typing import Dict, Iterator, List, Mapping, Optional, Tuple, Union

import numpy as np

from core.distribution import ProductDistribution, Restriction, as_bitvector, reach_probability
from core.errors import DimensionMismatchError, TreeFormatError, UnknownLeafError


@dataclass(frozen=True)
class Leaf:
    """
    A leaf node.

    Labeled trees carry label in {-1, +1}; bare trees carry a stable id and no label.
    """

    label: Optional[int] = None
    id: Optional[int] = None


@dataclass(frozen=True)
class Internal:
    """An internal node querying `var`; lo is followed on bit 0, hi on bit 1."""

    var: int
    lo: "Node"
    hi: "Node"


Node = Union[Leaf, Internal]


@dataclass(frozen=True)
class LeafInfo:
    """A leaf together with its root-to-leaf restriction and depth."""

    leaf: Leaf
    restriction: Restriction
    depth: int


def _iter_leaves(node: Node, path: Tuple[Tuple[int, int], ...]) -> Iterator[Tuple[Leaf, Tuple[Tuple[int, int], ...]]]:
    if isinstance(node, Leaf):
        yield node, path
        return
    yield from _iter_leaves(node.lo, path + ((node.var, 0),))
    yield from _iter_leaves(node.hi, path + ((node.var, 1),))


def _validate(node: Node, on_path: frozenset, dimension: Optional[int], bare: bool) -> None:
    if isinstance(node, Leaf):
        if bare:
            if node.id is None or node.label is not None:
                raise TreeFormatError("Bare tree leaves carry an id and no label.")
        elif node.label not in (-1, 1):
            raise TreeFormatError(f"Leaf label must be -1 or +1, got {node.label!r}.")
        return
    if not isinstance(node, Internal):
        raise TreeFormatError(f"Unknown node type {type(node).__name__}.")
    if node.var < 0 or (dimension is not None and node.var >= dimension):
        raise TreeFormatError(f"Variable index {node.var} out of range for n={dimension}.")
    if node.var in on_path:
        raise TreeFormatError(f"Variable {node.var} repeats on a root-to-leaf path.")
    on_path = on_path | {node.var}
    _validate(node.lo, on_path, dimension, bare)
    _validate(node.hi, on_path, dimension, bare)


class _TreeBase:
    """Shared structure of labeled and bare trees."""

    root: Node
    dimension: Optional[int]

    def leaves(self) -> List[LeafInfo]:
        """All leaves in lo-before-hi order with their restrictions."""
        return [
            LeafInfo(leaf, Restriction(path), len(path))
            for leaf, path in _iter_leaves(self.root, ())
        ]

    @property
    def size(self) -> int:
        """Number of leaves (= internal nodes + 1)."""
        return sum(1 for _ in _iter_leaves(self.root, ()))

    def variables(self) -> List[int]:
        found = set()
        stack = [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, Internal):
                found.add(node.var)
                stack.extend((node.lo, node.hi))
        return sorted(found)

    def required_dimension(self) -> int:
        """Smallest n for which every queried index is in range."""
        variables = self.variables()
        return variables[-1] + 1 if variables else 0


@dataclass(frozen=True)
class DecisionTree(_TreeBase):
    """A labeled decision tree computing a function {0,1}^n -> {-1, +1}."""

    root: Node
    dimension: Optional[int] = None

    def __post_init__(self):
        _validate(self.root, frozenset(), self.dimension, bare=False)

    def subtree(self, r: Restriction) -> "DecisionTree":
        """The tree computing f restricted by r (queries of fixed variables collapsed)."""
        fixed = r.as_dict()

        def collapse(node: Node) -> Node:
            if isinstance(node, Leaf):
                return node
            if node.var in fixed:
                return collapse(node.hi if fixed[node.var] else node.lo)
            return Internal(node.var, collapse(node.lo), collapse(node.hi))

        return DecisionTree(collapse(self.root), self.dimension)


@dataclass(frozen=True)
class BareTree(_TreeBase):
    """
    A decision tree whose leaves are unlabeled.

    Leaf ids are handed out monotonically from next_id and never reused, so a
    split keeps the ids of every surviving leaf.
    """

    root: Node
    dimension: Optional[int] = None
    next_id: int = 1

    def __post_init__(self):
        _validate(self.root, frozenset(), self.dimension, bare=True)
        ids = [leaf.id for leaf, _ in _iter_leaves(self.root, ())]
        if len(set(ids)) != len(ids):
            raise TreeFormatError(f"Bare tree leaf ids are not unique: {ids}.")
        if ids and max(ids) >= self.next_id:
            object.__setattr__(self, "next_id", max(ids) + 1)

    @classmethod
    def single_leaf(cls, dimension: Optional[int] = None) -> "BareTree":
        return cls(Leaf(id=0), dimension, next_id=1)

    def leaf_ids(self) -> List[int]:
        return [leaf.id for leaf, _ in _iter_leaves(self.root, ())]

    def restriction_of(self, leaf_id: int) -> Restriction:
        for leaf, path in _iter_leaves(self.root, ()):
            if leaf.id == leaf_id:
                return Restriction(path)
        raise UnknownLeafError(f"Leaf {leaf_id} is not a leaf of this tree.")

    def split(self, leaf_id: int, var: int) -> Tuple["BareTree", int, int]:
        """
        Replace a leaf by a node querying var.

        Args:
            leaf_id: The leaf to split
            var: Coordinate queried by the new internal node

        Returns:
            Tuple of (new tree, id of the bit-0 child, id of the bit-1 child)
        """
        restriction = self.restriction_of(leaf_id)
        if var in restriction:
            raise TreeFormatError(f"Variable {var} is already queried on the path to leaf {leaf_id}.")
        lo_id, hi_id = self.next_id, self.next_id + 1
        replacement = Internal(var, Leaf(id=lo_id), Leaf(id=hi_id))

        def rebuild(node: Node) -> Node:
            if isinstance(node, Leaf):
                return replacement if node.id == leaf_id else node
            return Internal(node.var, rebuild(node.lo), rebuild(node.hi))

        return BareTree(rebuild(self.root), self.dimension, self.next_id + 2), lo_id, hi_id

    def labeled(self, labels: Mapping[int, int]) -> DecisionTree:
        """Attach labels (leaf id -> +/-1) and return the labeled tree."""

        def attach(node: Node) -> Node:
            if isinstance(node, Leaf):
                if node.id not in labels:
                    raise UnknownLeafError(f"No label supplied for leaf {node.id}.")
                return Leaf(label=int(labels[node.id]))
            return Internal(node.var, attach(node.lo), attach(node.hi))

        return DecisionTree(attach(self.root), self.dimension)


AnyTree = Union[DecisionTree, BareTree]


def _payload(leaf: Leaf) -> int:
    return leaf.id if leaf.label is None else leaf.label


def route(tree: AnyTree, x) -> int:
    """
    Follow x from the root to a leaf.

    Args:
        tree: Labeled or bare tree
        x: Bit vector of the tree's dimension

    Returns:
        The leaf label (labeled tree) or the leaf id (bare tree)
    """
    n = tree.dimension if tree.dimension is not None else len(x)
    bits = as_bitvector(x, n)
    if tree.required_dimension() > n:
        raise DimensionMismatchError(f"Tree queries coordinates beyond length {n}.")
    node = tree.root
    while isinstance(node, Internal):
        node = node.hi if bits[node.var] else node.lo
    return _payload(node)


def route_many(tree: AnyTree, points: np.ndarray) -> np.ndarray:
    """
    Vectorized route over the rows of a (m, n) bit matrix.

    Returns:
        int64 array of leaf labels or leaf ids, one per row
    """
    points = np.asarray(points)
    if points.ndim != 2:
        raise DimensionMismatchError(f"Expected a 2-d bit matrix, got shape {points.shape}.")
    if tree.dimension is not None and points.shape[1] != tree.dimension:
        raise DimensionMismatchError(f"Expected {tree.dimension} columns, got {points.shape[1]}.")
    if tree.required_dimension() > points.shape[1]:
        raise DimensionMismatchError(f"Tree queries coordinates beyond {points.shape[1]} columns.")
    out = np.empty(points.shape[0], dtype=np.int64)
    stack = [(tree.root, np.arange(points.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if idx.size == 0:
            continue
        if isinstance(node, Leaf):
            out[idx] = _payload(node)
            continue
        bit = points[idx, node.var].astype(bool)
        stack.append((node.lo, idx[~bit]))
        stack.append((node.hi, idx[bit]))
    return out


def max_depth(tree: AnyTree) -> int:
    """Longest root-to-leaf edge count."""
    return max(info.depth for info in tree.leaves())


def average_depth(tree: AnyTree, dist: ProductDistribution) -> float:
    """Probability-weighted mean leaf depth, sum over leaves of p_v * depth(v)."""
    return sum(reach_probability(dist, info.restriction) * info.depth for info in tree.leaves())


def leaf_reach_probabilities(tree: AnyTree, dist: ProductDistribution) -> Dict[int, float]:
    """Reach probability of every leaf of a bare tree, keyed by leaf id."""
    return {
        info.leaf.id: reach_probability(dist, info.restriction)
        for info in tree.leaves()
    }
