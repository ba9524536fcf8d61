"""Reproducible random instances for the property checkers."""

from dataclasses import dataclass
from typing import Iterator, List, Sequence

import numpy as np

from core.distribution import ProductDistribution
from core.trees import DecisionTree, Internal, Leaf
from experiments.targets import (
    generate_balanced_target,
    generate_path_target,
    generate_random_tree,
    tree_from_truth_table,
)
from utils.seeding import derive_seed

TARGET_FAMILIES = ("truth-table", "random-tree", "balanced", "path")
BIAS_FAMILIES = ("uniform", "fixed", "random")
EPSILONS = (0.05, 0.1, 0.2, 0.3)


@dataclass(frozen=True)
class Instance:
    """A target tree, a product distribution and an accuracy, plus where they came from."""

    seed: int
    target: DecisionTree
    distribution: ProductDistribution
    epsilon: float
    family: str
    bias_family: str

    @property
    def n(self) -> int:
        return self.distribution.n


def dictator_instance(p: float = 0.5, n: int = 1, epsilon: float = 0.1) -> Instance:
    """f(x) = +1 iff x_0 = 1, under bias p on every coordinate."""
    target = DecisionTree(Internal(0, Leaf(label=-1), Leaf(label=1)), n)
    return Instance(0, target, ProductDistribution.constant(n, p), epsilon, "dictator", "fixed")


class InstanceGenerator:
    """Draws instances from the target and bias families, one derived seed per index."""

    def __init__(
        self,
        seed: int,
        max_n: int = 6,
        min_n: int = 1,
        max_depth: int = 4,
        fixed_bias: float = 0.3,
        families: Sequence[str] = TARGET_FAMILIES,
        bias_families: Sequence[str] = BIAS_FAMILIES,
    ):
        """
        Initialize the generator.

        Args:
            seed: Master seed
            max_n: Largest dimension (at most 8)
            min_n: Smallest dimension
            max_depth: Depth cap of random and balanced trees
            fixed_bias: Bias used by the fixed-p family
            families: Target families to draw from
            bias_families: Bias families to draw from
        """
        if not 1 <= min_n <= max_n <= 8:
            raise ValueError(f"Dimensions must satisfy 1 <= min_n <= max_n <= 8, got {min_n}, {max_n}.")
        unknown = set(families) - set(TARGET_FAMILIES) | set(bias_families) - set(BIAS_FAMILIES)
        if unknown:
            raise ValueError(f"Unknown instance families: {sorted(unknown)}.")
        self.seed = seed
        self.max_n = max_n
        self.min_n = min_n
        self.max_depth = max_depth
        self.fixed_bias = fixed_bias
        self.families = tuple(families)
        self.bias_families = tuple(bias_families)

    def _biases(self, family: str, n: int, rng: np.random.Generator) -> ProductDistribution:
        if family == "uniform":
            return ProductDistribution.uniform(n)
        if family == "fixed":
            return ProductDistribution.constant(n, self.fixed_bias)
        return ProductDistribution(tuple(float(p) for p in rng.uniform(0.1, 0.9, size=n)))

    def _target(self, family: str, n: int, rng: np.random.Generator) -> DecisionTree:
        if family == "truth-table":
            return tree_from_truth_table(rng.choice(np.array([-1, 1], dtype=np.int8), size=(2,) * n))
        if family == "random-tree":
            return generate_random_tree(n, self.max_depth, rng)
        if family == "balanced":
            return generate_balanced_target(int(rng.integers(0, min(self.max_depth, n) + 1)), n, rng)
        return generate_path_target(n, rng, length=int(rng.integers(1, n + 1)))

    def instance(self, index: int) -> Instance:
        seed = derive_seed(self.seed, index)
        rng = np.random.default_rng(seed)
        n = int(rng.integers(self.min_n, self.max_n + 1))
        family = self.families[int(rng.integers(len(self.families)))]
        bias_family = self.bias_families[int(rng.integers(len(self.bias_families)))]
        target = self._target(family, n, rng)
        if target.dimension != n:
            target = DecisionTree(target.root, n)
        distribution = self._biases(bias_family, n, rng)
        epsilon = float(EPSILONS[int(rng.integers(len(EPSILONS)))])
        return Instance(seed, target, distribution, epsilon, family, bias_family)

    def generate(self, count: int) -> List[Instance]:
        return [self.instance(k) for k in range(count)]

    def __iter__(self) -> Iterator[Instance]:
        index = 0
        while True:
            yield self.instance(index)
            index += 1
