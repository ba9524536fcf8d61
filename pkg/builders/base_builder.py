"""Base class shared by the top-down tree builders."""

import logging
from typing import Dict

from dotenv import load_dotenv

from core.distribution import ProductDistribution
from core.trees import BareTree
from utils.growth_loop import GrowthLoop

# Load environment variables
load_dotenv()


class BaseBuilder:
    """Base class for builders that grow a bare tree one leaf split at a time."""

    logger = logging.getLogger("BaseBuilder")

    def __init__(self, distribution: ProductDistribution, epsilon: float):
        """
        Initialize the base builder.

        Args:
            distribution: Product distribution the error is measured under
            epsilon: Target error in (0, 1)
        """
        if not 0.0 < epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}.")
        self.distribution = distribution
        self.epsilon = epsilon
        self.bare = BareTree.single_leaf(distribution.n)

    @property
    def step(self) -> int:
        """Current step index j; the tree has j leaves at step j."""
        return self.bare.size

    def evaluate(self) -> Dict:
        """Measure the current tree and pick the next split."""
        raise NotImplementedError

    def should_stop(self, evaluation: Dict) -> bool:
        raise NotImplementedError

    def split(self, evaluation: Dict) -> bool:
        """Apply the split chosen by evaluate(); False when none is admissible."""
        raise NotImplementedError

    def finish(self, outcome: Dict):
        """Turn the growth loop's outcome into the builder's result."""
        raise NotImplementedError

    def build(self, max_splits: int):
        """
        Grow the tree until the stopping rule holds or max_splits splits were made.

        Args:
            max_splits: Split budget

        Returns:
            Whatever finish() assembles for this builder
        """
        self.logger.debug("Building with epsilon=%s, max_splits=%d", self.epsilon, max_splits)
        outcome = GrowthLoop(self, max_splits).grow()
        return self.finish(outcome)
