"""Ground-truth target generators."""

from itertools import combinations
from typing import Optional

import numpy as np

from core.trees import DecisionTree, Internal, Leaf, Node

# Random draws of a balanced target before falling back to a parity tree
BALANCED_DRAWS = 32


def _random_label(rng: np.random.Generator) -> int:
    return 1 if rng.integers(2) else -1


def has_minimum_size(tree: DecisionTree, rng: np.random.Generator, attempts: int = 16) -> bool:
    """
    True when a fooling set certifies that no smaller tree computes the same function.

    The set holds one point per leaf, agreeing with the leaf's path, such that f is
    not constant on the smallest subcube containing any two of the points. Every
    leaf of a tree computing f covers a subcube on which f is constant, so it holds
    at most one point and the tree has at least as many leaves as `tree`.

    Requires distinct variables on every root-to-leaf path. Coordinates off a
    leaf's path are drawn at random, up to `attempts` times; False only means no
    certificate was found.
    """
    infos = tree.leaves()
    if len(infos) < 2:
        return True
    n = tree.required_dimension()
    paths = np.full((len(infos), n), -1, dtype=np.int8)
    for row, info in zip(paths, infos):
        for i, bit in info.restriction:
            row[i] = bit
    labels = np.array([info.leaf.label for info in infos])
    on_path = paths >= 0
    for _ in range(attempts if not on_path.all() else 1):
        points = np.where(on_path, paths, rng.integers(0, 2, size=paths.shape)).astype(np.int8)
        if all(_mixed_on_span(points[a], points[b], paths, on_path, labels)
               for a, b in combinations(range(len(infos)), 2)):
            return True
    return False


def _mixed_on_span(x: np.ndarray, y: np.ndarray, paths: np.ndarray, on_path: np.ndarray, labels: np.ndarray) -> bool:
    # A leaf is reachable inside the span unless its path contradicts a coordinate both points share
    fixed = x == y
    reachable = ~np.any(on_path & fixed & (paths != x), axis=1)
    return np.unique(labels[reachable]).size == 2


def generate_parity_target(variables, n: int, sign: int = 1) -> DecisionTree:
    """Complete tree computing sign * (-1)^(sum of x_v over variables); it needs every one of its leaves."""
    variables = [int(v) for v in variables]

    def grow(level: int, parity: int) -> Node:
        if level == len(variables):
            return Leaf(label=sign * (-1) ** parity)
        return Internal(variables[level], grow(level + 1, parity), grow(level + 1, parity + 1))

    return DecisionTree(grow(0, 0), n)


def generate_balanced_target(depth: int, n: int, rng: np.random.Generator) -> DecisionTree:
    """
    Complete tree of the given depth with distinct random variables on every path.

    Sibling leaves carry opposite labels, and a draw is kept only when
    has_minimum_size certifies it, so the function needs all 2^depth leaves.
    After BALANCED_DRAWS rejected draws the target is a parity of depth random
    variables, which always qualifies.
    """
    if depth < 0:
        raise ValueError(f"Depth must be non-negative, got {depth}.")
    if depth > n:
        raise ValueError(f"Depth {depth} exceeds the dimension n={n}.")

    def grow(level: int, used: frozenset) -> Node:
        if level == depth:
            return Leaf(label=_random_label(rng))
        free = [i for i in range(n) if i not in used]
        var = int(free[rng.integers(len(free))])
        if level == depth - 1:
            label = _random_label(rng)
            return Internal(var, Leaf(label=label), Leaf(label=-label))
        return Internal(var, grow(level + 1, used | {var}), grow(level + 1, used | {var}))

    for _ in range(BALANCED_DRAWS):
        tree = DecisionTree(grow(0, frozenset()), n)
        if has_minimum_size(tree, rng):
            return tree
    return generate_parity_target(rng.choice(n, size=depth, replace=False), n, _random_label(rng))


def generate_path_target(n: int, rng: np.random.Generator, length: Optional[int] = None) -> DecisionTree:
    """
    Chain of `length` internal nodes (default n) querying x_0, x_1, ... in order.

    At every node one child is a leaf and the chain continues on the other side,
    which side is drawn at random. Leaf labels alternate down the chain and the two
    bottom leaves disagree, so the tree has length + 1 leaves and none is redundant.

    Args:
        n: Dimension
        rng: Random generator
        length: Number of internal nodes, at most n

    Returns:
        The path tree
    """
    if n < 1:
        raise ValueError(f"Dimension must be at least 1, got {n}.")
    length = n if length is None else length
    if not 1 <= length <= n:
        raise ValueError(f"Path length must lie in [1, {n}], got {length}.")
    label = _random_label(rng)
    node: Node = Leaf(label=label * (-1) ** length)
    for var in reversed(range(length)):
        leaf = Leaf(label=label * (-1) ** var)
        node = Internal(var, leaf, node) if rng.integers(2) else Internal(var, node, leaf)
    return DecisionTree(node, n)


def generate_random_tree(
    n: int,
    max_depth: int,
    rng: np.random.Generator,
    split_probability: float = 0.7,
) -> DecisionTree:
    """Random tree: each node above max_depth splits with the given probability on a fresh variable."""
    max_depth = min(max_depth, n)

    def grow(level: int, used: frozenset) -> Node:
        if level == max_depth or (level > 0 and rng.random() >= split_probability):
            return Leaf(label=_random_label(rng))
        free = [i for i in range(n) if i not in used]
        var = int(free[rng.integers(len(free))])
        return Internal(var, grow(level + 1, used | {var}), grow(level + 1, used | {var}))

    return DecisionTree(grow(0, frozenset()), n)


def tree_from_truth_table(table: np.ndarray) -> DecisionTree:
    """
    Decision tree computing a +/-1 truth table with one axis per coordinate.

    Coordinates are queried in index order; a coordinate the sub-table does not
    depend on is skipped and constant sub-tables become leaves.
    """
    table = np.asarray(table)
    n = table.ndim
    if table.shape != (2,) * n:
        raise ValueError(f"Truth table must have shape (2,)*n, got {table.shape}.")
    if not np.all(np.isin(table, (-1, 1))):
        raise ValueError("Truth table entries must be -1 or +1.")

    def grow(sub: np.ndarray, var: int) -> Node:
        if np.all(sub == sub.flat[0]):
            return Leaf(label=int(sub.flat[0]))
        lo, hi = sub[0], sub[1]
        if np.array_equal(lo, hi):
            return grow(lo, var + 1)
        return Internal(var, grow(lo, var + 1), grow(hi, var + 1))

    return DecisionTree(grow(table, 0), max(n, 1))
