"""Product distributions over the Boolean cube, bit vectors and restrictions."""

from dataclasses import dataclass
from typing import Dict, Iterator, Mapping, Sequence, Tuple

import numpy as np

from core.errors import DimensionMismatchError


@dataclass(frozen=True)
class ProductDistribution:
    """
    The measure mu = mu_1 x ... x mu_n on {0,1}^n.

    biases[i] is the probability that coordinate i equals 1. Biases of exactly
    0 or 1 are rejected: influence is defined through re-randomization, which
    needs both values of every coordinate to carry mass.
    """

    biases: Tuple[float, ...]

    def __post_init__(self):
        biases = tuple(float(p) for p in self.biases)
        if len(biases) < 1:
            raise ValueError("A product distribution needs at least one coordinate.")
        for i, p in enumerate(biases):
            if not 0.0 < p < 1.0:
                raise ValueError(f"Bias of coordinate {i} must lie strictly inside (0, 1), got {p}.")
        object.__setattr__(self, "biases", biases)

    @classmethod
    def uniform(cls, n: int) -> "ProductDistribution":
        return cls((0.5,) * n)

    @classmethod
    def constant(cls, n: int, p: float) -> "ProductDistribution":
        """All n coordinates share the bias p."""
        return cls((p,) * n)

    @property
    def n(self) -> int:
        return len(self.biases)

    def bias(self, i: int) -> float:
        self._check_coordinate(i)
        return self.biases[i]

    def marginal(self, i: int, bit: int) -> float:
        """Probability that coordinate i takes the value bit."""
        p = self.bias(i)
        return p if bit else 1.0 - p

    def rerandomization_mass(self, i: int) -> float:
        """Probability 2 p_i (1 - p_i) that a re-drawn coordinate differs from the original."""
        p = self.bias(i)
        return 2.0 * p * (1.0 - p)

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        """
        Draw m independent points.

        Args:
            rng: Random generator owning the stream
            m: Number of points

        Returns:
            uint8 array of shape (m, n)
        """
        u = rng.random((m, self.n))
        return (u < np.asarray(self.biases)).astype(np.uint8)

    def _check_coordinate(self, i: int) -> None:
        if not 0 <= i < self.n:
            raise DimensionMismatchError(f"Coordinate {i} is out of range for n={self.n}.")


def as_bitvector(x: Sequence[int], n: int) -> np.ndarray:
    """Validate and convert x into a length-n bit vector."""
    bits = np.asarray(x, dtype=np.uint8)
    if bits.ndim != 1 or bits.shape[0] != n:
        raise DimensionMismatchError(f"Expected a bit vector of length {n}, got shape {bits.shape}.")
    if np.any(bits > 1):
        raise ValueError("Bit vectors may only contain 0 and 1.")
    return bits


@dataclass(frozen=True)
class Restriction:
    """
    A partial assignment of coordinates, kept sorted by coordinate.

    Derived from a root-to-leaf path it lists exactly the queried variables
    and the branch taken at each of them.
    """

    fixed: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        items = tuple(sorted((int(i), int(b)) for i, b in self.fixed))
        coords = [i for i, _ in items]
        if len(set(coords)) != len(coords):
            raise ValueError(f"Restriction fixes a coordinate twice: {coords}.")
        for i, b in items:
            if i < 0:
                raise ValueError(f"Negative coordinate {i} in restriction.")
            if b not in (0, 1):
                raise ValueError(f"Coordinate {i} fixed to non-bit value {b}.")
        object.__setattr__(self, "fixed", items)

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, int]) -> "Restriction":
        return cls(tuple(mapping.items()))

    def as_dict(self) -> Dict[int, int]:
        return dict(self.fixed)

    def __len__(self) -> int:
        return len(self.fixed)

    def __iter__(self) -> Iterator[Tuple[int, int]]:
        return iter(self.fixed)

    def __contains__(self, i: object) -> bool:
        return any(i == j for j, _ in self.fixed)

    def get(self, i: int, default=None):
        for j, b in self.fixed:
            if j == i:
                return b
        return default

    def extend(self, i: int, bit: int) -> "Restriction":
        """Return the restriction with coordinate i additionally fixed to bit."""
        if i in self:
            raise ValueError(f"Coordinate {i} is already fixed.")
        return Restriction(self.fixed + ((i, bit),))

    def free_coordinates(self, n: int) -> Tuple[int, ...]:
        fixed = self.as_dict()
        return tuple(i for i in range(n) if i not in fixed)

    def check_dimension(self, n: int) -> None:
        for i, _ in self.fixed:
            if i >= n:
                raise DimensionMismatchError(f"Restricted coordinate {i} is out of range for n={n}.")

    def agrees(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask of the rows of a (m, n) bit matrix consistent with the restriction."""
        mask = np.ones(points.shape[0], dtype=bool)
        for i, b in self.fixed:
            mask &= points[:, i] == b
        return mask


def reach_probability(dist: ProductDistribution, r: Restriction) -> float:
    """
    Probability that x ~ mu satisfies the restriction.

    Args:
        dist: The product distribution
        r: The restriction (for a tree node, its root-to-node path)

    Returns:
        Product of p_i over coordinates fixed to 1 times (1 - p_i) over those fixed to 0
    """
    r.check_dimension(dist.n)
    prob = 1.0
    for i, b in r:
        prob *= dist.marginal(i, b)
    return prob

