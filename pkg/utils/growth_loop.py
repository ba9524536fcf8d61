"""Growth loop that alternates evaluation and splitting until a builder is satisfied."""

import logging
from typing import Dict, List


class GrowthLoop:
    """Manages the evaluate / check / split cycle shared by the top-down builders."""

    logger = logging.getLogger("GrowthLoop")

    def __init__(self, builder, max_splits: int):
        """
        Initialize the growth loop.

        Args:
            builder: Object providing evaluate(), should_stop(evaluation) and split(evaluation)
            max_splits: Maximum number of splits before giving up
        """
        if max_splits < 0:
            raise ValueError(f"max_splits must be non-negative, got {max_splits}.")
        self.builder = builder
        self.max_splits = max_splits

    def grow(self) -> Dict:
        """
        Grow the builder's tree until its stopping rule holds or the split budget runs out.

        Returns:
            Dictionary with the final evaluation, split count and termination flag
        """
        splits = 0
        evaluations: List[Dict] = []

        while True:
            evaluation = self.builder.evaluate()
            evaluations.append(evaluation)

            if self.builder.should_stop(evaluation):
                terminated = True
                break

            if splits >= self.max_splits:
                self.logger.warning("Split budget of %d exhausted before termination", self.max_splits)
                terminated = False
                break

            if not self.builder.split(evaluation):
                self.logger.warning("No admissible split left after %d splits", splits)
                terminated = False
                break
            splits += 1
            self.logger.debug("Split %d done", splits)

        return {
            "final_evaluation": evaluations[-1],
            "splits": splits,
            "evaluations": len(evaluations),
            "terminated": terminated,
        }
