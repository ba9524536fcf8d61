"""Sample schedules and concentration bounds of the sample-driven builder."""

import math


def _check(j: int, epsilon: float, delta: float) -> None:
    if j < 1:
        raise ValueError(f"Step index j must be at least 1, got {j}.")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}.")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}.")


def score_pairs_value(j: int, delta: float, epsilon: float, n: int) -> float:
    """12 (j+1) n / eps * ln(4 j^2 (j+1) n / delta), before rounding up."""
    _check(j, epsilon, delta)
    if n < 1:
        raise ValueError(f"Dimension n must be at least 1, got {n}.")
    return 12.0 * (j + 1) * n / epsilon * math.log(4.0 * j * j * (j + 1) * n / delta)


def labeling_samples_value(j: int, epsilon: float, delta: float) -> float:
    """128 ((j+1) ln 2 + ln(16 j^2 / delta)) / eps^2, before rounding up."""
    _check(j, epsilon, delta)
    return 128.0 * ((j + 1) * math.log(2.0) + math.log(16.0 * j * j / delta)) / epsilon ** 2


def error_samples_value(j: int, epsilon: float, delta: float) -> float:
    """32 / eps^2 * ln(16 j^2 / delta), before rounding up."""
    _check(j, epsilon, delta)
    return 32.0 / epsilon ** 2 * math.log(16.0 * j * j / delta)


def schedule_M_S(j: int, delta: float, epsilon: float, n: int) -> int:
    """Pairs per coordinate for score estimation at step j."""
    return math.ceil(score_pairs_value(j, delta, epsilon, n))


def schedule_M_LL(j: int, epsilon: float, delta: float) -> int:
    """Samples for majority leaf labeling at step j."""
    return math.ceil(labeling_samples_value(j, epsilon, delta))


def schedule_M_EE(j: int, epsilon: float, delta: float) -> int:
    """Samples for error estimation at step j."""
    return math.ceil(error_samples_value(j, epsilon, delta))


def excess_error_bound(leaves: int, j: int, delta: float, m: int) -> float:
    """
    Deviation between the majority-labeled tree's error and the f-completion's error.

    Holds with probability at least 1 - delta / (8 j^2) when m labeling samples
    are spread over a tree with the given number of leaves.
    """
    if m < 1:
        raise ValueError("At least one labeling sample is required.")
    return math.sqrt(2.0 * (leaves * math.log(2.0) + math.log(16.0 * j * j / delta)) / m)


def chernoff_selection_failure(j: int, n: int, m: int, threshold: float) -> float:
    """
    Union bound (j+1) n exp(-m t / 12) on mis-ranking any leaf/coordinate pair.

    Args:
        j: Step index
        n: Dimension
        m: Minimum pair count over coordinates
        threshold: Score threshold t

    Returns:
        Upper bound on the probability of a selection failure at step j
    """
    return (j + 1) * n * math.exp(-m * threshold / 12.0)
