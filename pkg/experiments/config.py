"""Experiment configuration loaded from JSON."""

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple, Union

from core.errors import ConfigError
from verify.suite import ESTIMATOR_INSTANCES

EXPERIMENTS = ("size-vs-epsilon", "size-vs-n", "properties", "single-run", "sample-scaling")
TARGET_FAMILIES = ("balanced", "path", "constant", "file")
MODES = ("practical", "exact")


@dataclass(frozen=True)
class TargetSpec:
    """
    How the ground-truth target of a run is made.

    balanced uses depth, path uses leaves (capped at n + 1), constant uses label,
    file loads a tree document from path.
    """

    family: str
    depth: int = 3
    leaves: int = 8
    label: int = 1
    path: Optional[str] = None

    @property
    def name(self) -> str:
        if self.family == "balanced":
            return f"balanced-d{self.depth}"
        if self.family == "path":
            return f"path-l{self.leaves}"
        if self.family == "constant":
            return f"constant{self.label:+d}"
        return f"file:{self.path}"


def _as_tuple(value: Any, name: str) -> Tuple:
    if isinstance(value, (list, tuple)):
        return tuple(value)
    if value is None:
        raise ConfigError(f"Missing required field '{name}'.")
    return (value,)


@dataclass(frozen=True)
class ExperimentConfig:
    """A grid of (target, n, epsilon, bias, repetition) runs, or a property-suite run."""

    experiment: str
    n_values: Tuple[int, ...] = (5,)
    epsilons: Tuple[float, ...] = (0.15,)
    delta: float = 0.1
    biases: Tuple[float, ...] = (0.5,)
    targets: Tuple[TargetSpec, ...] = field(default_factory=lambda: (TargetSpec("balanced"),))
    repetitions: int = 6
    master_seed: int = 0
    output: Optional[str] = None
    mode: str = "practical"
    halve_epsilon: bool = False
    instance_count: int = 200
    estimator_instances: int = ESTIMATOR_INSTANCES

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        """Raise ConfigError on the first invalid field."""
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}.")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}.")
        if self.repetitions < 1:
            raise ConfigError(f"repetitions must be at least 1, got {self.repetitions}.")
        if self.master_seed < 0:
            raise ConfigError(f"master_seed must be non-negative, got {self.master_seed}.")
        if self.instance_count < 0:
            raise ConfigError(f"instance_count must be non-negative, got {self.instance_count}.")
        if self.estimator_instances < 0:
            raise ConfigError(f"estimator_instances must be non-negative, got {self.estimator_instances}.")
        if not self.n_values or any(n < 1 for n in self.n_values):
            raise ConfigError(f"Every n must be at least 1, got {self.n_values}.")
        for name, values in (("epsilon", self.epsilons), ("bias", self.biases), ("delta", (self.delta,))):
            if not values or any(not 0.0 < v < 1.0 for v in values):
                raise ConfigError(f"Every {name} must lie in (0, 1), got {values}.")
        if not self.targets:
            raise ConfigError("At least one target is required.")
        for target in self.targets:
            if target.family not in TARGET_FAMILIES:
                raise ConfigError(f"Target family must be one of {TARGET_FAMILIES}, got {target.family!r}.")
            if target.family == "balanced" and any(target.depth > n for n in self.n_values):
                raise ConfigError(f"Balanced depth {target.depth} exceeds some n in {self.n_values}.")
            if target.family == "path" and target.leaves < 2:
                raise ConfigError(f"A path target needs at least 2 leaves, got {target.leaves}.")
            if target.family == "constant" and target.label not in (-1, 1):
                raise ConfigError(f"Constant label must be -1 or +1, got {target.label}.")
            if target.family == "file" and not target.path:
                raise ConfigError("A file target needs a path.")
        if self.experiment == "single-run" and self.points() != 1:
            raise ConfigError("single-run takes exactly one target, n, epsilon and bias.")

    def points(self) -> int:
        """Number of grid points, repetitions not counted."""
        return len(self.targets) * len(self.n_values) * len(self.epsilons) * len(self.biases)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def config_hash(self) -> str:
        """Short digest of the canonical JSON form; identical configs hash identically."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("Experiment configuration must be a JSON object.")
        known = {
            "experiment", "n", "epsilon", "delta", "biases", "target", "repetitions",
            "master_seed", "output", "mode", "halve_epsilon", "instance_count", "estimator_instances",
        }
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"Unknown configuration fields: {sorted(unknown)}.")
        try:
            targets = tuple(TargetSpec(**t) for t in _as_tuple(doc.get("target", {"family": "balanced"}), "target"))
            return cls(
                experiment=doc.get("experiment"),
                n_values=tuple(int(n) for n in _as_tuple(doc.get("n", 5), "n")),
                epsilons=tuple(float(e) for e in _as_tuple(doc.get("epsilon", 0.15), "epsilon")),
                delta=float(doc.get("delta", 0.1)),
                biases=tuple(float(p) for p in _as_tuple(doc.get("biases", 0.5), "biases")),
                targets=targets,
                repetitions=int(doc.get("repetitions", 6)),
                master_seed=int(doc.get("master_seed", 0)),
                output=doc.get("output"),
                mode=doc.get("mode", "practical"),
                halve_epsilon=bool(doc.get("halve_epsilon", False)),
                instance_count=int(doc.get("instance_count", 200)),
                estimator_instances=int(doc.get("estimator_instances", ESTIMATOR_INSTANCES)),
            )
        except ConfigError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid experiment configuration: {e}") from e

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> "ExperimentConfig":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"Configuration {path} is not valid JSON: {e}") from e
        return cls.from_dict(doc)

    def with_overrides(self, **overrides: Any) -> "ExperimentConfig":
        values = {**self.__dict__, **overrides}
        return ExperimentConfig(**values)


def grid(config: ExperimentConfig) -> Sequence[Tuple[int, TargetSpec, int, int, float, int, float, int]]:
    """
    Every run of a grid config as (target index, target, n, epsilon index, epsilon, bias index, bias, repetition).
    """
    return [
        (t, target, n, e, eps, b, bias, rep)
        for t, target in enumerate(config.targets)
        for n in config.n_values
        for e, eps in enumerate(config.epsilons)
        for b, bias in enumerate(config.biases)
        for rep in range(config.repetitions)
    ]
