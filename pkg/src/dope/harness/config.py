# Experiment configuration: a tree of frozen dataclasses read from TOML/JSON/YAML

import typing
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from ..density_models.base import OptimizerConfig
from ..density_models.features import CombinationLockCells
from ..environments.combination_lock import CombinationLock
from ..errors import ConfigurationError
from ..load import load_config
from ..mdp_core.dataset import SPLIT_MODES
from ..mdp_core.policy import Policy
from ..metrics.distances import HistogramSpec

ALGORITHMS = ("fle-gmm", "fle-categorical", "fle-fqe", "fle-custom", "cate-td", "quantile-td")
METRICS = ("tv", "w1")
ENVIRONMENTS = ("combination_lock",)


@dataclass(frozen=True)
class EnvironmentConfig:
    """Benchmark environment and target policy

    .. parameter:: Environment kind
    .. parameter:: Horizon H
    .. parameter:: Number of actions
    .. parameter:: Observation dimension
    .. parameter:: Reward mode, 'scalar-gaussian' or 'ring-2d'
    .. parameter:: Observation noise standard deviation
    .. parameter:: ε of the ε-greedy target policy
    """

    kind: str = "combination_lock"
    horizon: int = 20
    n_actions: int = 2
    obs_dim: int = 30
    reward_mode: str = "scalar-gaussian"
    noise_std: float = 0.1
    epsilon: float = 1.0 / 7.0

    def __post_init__(self):
        if self.kind not in ENVIRONMENTS:
            raise ConfigurationError(f"[environment] kind must be one of {ENVIRONMENTS}, got '{self.kind}'")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigurationError(f"[environment] epsilon must lie in [0, 1], got {self.epsilon}")
        self.build()

    def build(self) -> CombinationLock:
        return CombinationLock(
            horizon=self.horizon,
            n_actions=self.n_actions,
            obs_dim=self.obs_dim,
            reward_mode=self.reward_mode,
            noise_std=self.noise_std,
        )

    def policy(self) -> Policy:
        return self.build().test_policy(self.epsilon)

    def feature_map(self) -> CombinationLockCells:
        return CombinationLockCells(self.horizon)


@dataclass(frozen=True)
class DataConfig:
    """Offline dataset

    .. parameter:: Fresh samples per (step, latent) cell
    .. parameter:: Fixed data seed; unset regenerates the data from every run seed
    .. parameter:: Existing dataset CSV to use instead of generating one
    """

    per_cell: int = 10_000
    seed: Optional[int] = None
    path: Optional[str] = None

    def __post_init__(self):
        if self.per_cell < 1:
            raise ConfigurationError(f"[data] per_cell must be >= 1, got {self.per_cell}")

    def seed_for(self, run_seed: int) -> int:
        return run_seed if self.seed is None else self.seed


@dataclass(frozen=True)
class AlgorithmConfig:
    """One algorithm of an experiment

    .. parameter:: Algorithm name
    .. parameter:: Step size
    .. parameter:: Optimizer iterations per fit
    .. parameter:: Optimizer update, 'adam' or 'gradient'
    .. parameter:: Mixture components K (fle-gmm)
    .. parameter:: Atoms per dimension (fle-categorical, cate-td)
    .. parameter:: Lower end of the atom range
    .. parameter:: Upper end of the atom range
    .. parameter:: Number of quantiles (quantile-td)
    .. parameter:: Huber threshold κ (quantile-td)
    .. parameter:: Fixed standard deviation (fle-fqe)
    .. parameter:: Split mode
    .. parameter:: Custom model class as 'module:Class' (fle-custom)
    .. parameter:: Family tag the custom model registers under (fle-custom)
    .. parameter:: Extra keyword arguments of the model (fle-custom)
    """

    name: str
    lr: float = 1e-2
    iterations: int = 500
    method: str = "adam"
    n_components: int = 10
    n_atoms: int = 100
    low: float = -1.5
    high: float = 1.5
    n_quantiles: int = 100
    kappa: float = 1.0
    sigma: float = 1.0
    split: str = "stratified"
    model_import: Optional[str] = None
    family: Optional[str] = None
    options: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in ALGORITHMS:
            raise ConfigurationError(f"[algorithms] name must be one of {ALGORITHMS}, got '{self.name}'")
        if self.split not in SPLIT_MODES:
            raise ConfigurationError(f"[algorithms] split must be one of {SPLIT_MODES}, got '{self.split}'")
        if self.name == "fle-custom" and not (self.model_import and self.family):
            raise ConfigurationError("[algorithms] fle-custom needs both 'model_import' and 'family'")
        if self.name != "fle-custom" and (self.model_import or self.family or self.options):
            raise ConfigurationError(f"[algorithms] '{self.name}' does not take model_import, family or options")
        if not self.high > self.low:
            raise ConfigurationError(f"[algorithms] need low < high, got [{self.low}, {self.high}]")

    def optimizer(self) -> OptimizerConfig:
        try:
            return OptimizerConfig(lr=self.lr, iterations=self.iterations, method=self.method)
        except ValueError as ex:
            raise ConfigurationError(f"[algorithms] {self.name}: {ex}") from ex


@dataclass(frozen=True)
class MetricConfig:
    """Evaluation metric

    .. parameter:: Metric kinds, 'tv' and/or 'w1'
    .. parameter:: Steps h to evaluate
    .. parameter:: Samples drawn from each side
    .. parameter:: Histogram bins per dimension (tv)
    .. parameter:: Lower end of the histogram range
    .. parameter:: Upper end of the histogram range
    """

    kind: Tuple[str, ...] = ("tv",)
    steps: Tuple[int, ...] = (1, 10, 19)
    samples: int = 20_000
    bins: int = 100
    low: float = -1.5
    high: float = 1.5

    def __post_init__(self):
        unknown = [k for k in self.kind if k not in METRICS]
        if unknown or not self.kind:
            raise ConfigurationError(f"[metric] kind must be drawn from {METRICS}, got {list(self.kind)}")
        if self.samples < 1:
            raise ConfigurationError(f"[metric] samples must be >= 1, got {self.samples}")

    def histogram(self, dim: int) -> HistogramSpec:
        return HistogramSpec.uniform(dim, self.bins, self.low, self.high)


@dataclass(frozen=True)
class ExperimentConfig:
    """A complete experiment: environment, data, algorithms, seeds and metric

    .. parameter:: Experiment name
    .. parameter:: Environment and target policy
    .. parameter:: Offline data
    .. parameter:: Algorithms to train
    .. parameter:: Evaluation metric
    .. parameter:: Run seeds
    .. parameter:: Output directory
    """

    name: str
    environment: EnvironmentConfig = EnvironmentConfig()
    data: DataConfig = DataConfig()
    algorithms: Tuple[AlgorithmConfig, ...] = ()
    metric: MetricConfig = MetricConfig()
    seeds: Tuple[int, ...] = (1, 2, 3, 4, 5)
    output_dir: str = "runs"

    def __post_init__(self):
        if not self.algorithms:
            raise ConfigurationError("At least one [[algorithms]] entry is required")
        names = [a.name for a in self.algorithms]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"Duplicate algorithm entries: {names}")
        if not self.seeds:
            raise ConfigurationError("At least one seed is required")
        bad = [h for h in self.metric.steps if not 1 <= h <= self.environment.horizon]
        if bad:
            raise ConfigurationError(f"[metric] steps {bad} lie outside [1, {self.environment.horizon}]")

    @classmethod
    def from_dict(cls, content: dict) -> "ExperimentConfig":
        content = dict(content)
        _reject_unknown(cls, content, "top level")
        if "name" not in content:
            raise ConfigurationError("Experiment config needs a top-level 'name'")
        algorithms = content.pop("algorithms", [])
        if isinstance(algorithms, dict):
            algorithms = [algorithms]
        if not isinstance(algorithms, list):
            raise ConfigurationError("[[algorithms]] must be a list of tables")
        metric = dict(content.pop("metric", {}))
        if isinstance(metric.get("kind"), str):
            metric["kind"] = [metric["kind"]]
        return cls(
            environment=_build(EnvironmentConfig, content.pop("environment", {}), "environment"),
            data=_build(DataConfig, content.pop("data", {}), "data"),
            algorithms=tuple(_build(AlgorithmConfig, a, "algorithms") for a in algorithms),
            metric=_build(MetricConfig, metric, "metric"),
            **_typed(cls, content, "top level"),
        )

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "ExperimentConfig":
        return cls.from_dict(load_config(path))

    def algorithm(self, name: str) -> AlgorithmConfig:
        for a in self.algorithms:
            if a.name == name:
                return a
        raise ConfigurationError(f"Algorithm '{name}' is not part of experiment '{self.name}'")

    def to_dict(self) -> dict:
        return asdict(self)


def _reject_unknown(cls, content: Any, section: str):
    if not isinstance(content, dict):
        raise ConfigurationError(f"[{section}] must be a table")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(content) - known)
    if unknown:
        raise ConfigurationError(f"Unknown keys in [{section}]: {', '.join(unknown)}")


def _build(cls, content: Any, section: str):
    _reject_unknown(cls, content, section)
    return cls(**_typed(cls, content, section))


def _typed(cls, content: dict, section: str) -> dict:
    hints = typing.get_type_hints(cls)
    return {key: _check_type(value, hints[key], f"{section}.{key}") for key, value in content.items()}


def _check_type(value: Any, expected: Any, where: str) -> Any:
    origin = typing.get_origin(expected)
    args = typing.get_args(expected)

    if origin is Union:
        if value is None and type(None) in args:
            return None
        return _check_type(value, next(a for a in args if a is not type(None)), where)
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigurationError(f"'{where}' must be a list, got {value!r}")
        return tuple(_check_type(v, args[0], where) for v in value)
    if origin is dict:
        if not isinstance(value, dict):
            raise ConfigurationError(f"'{where}' must be a table, got {value!r}")
        return dict(value)
    if expected is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"'{where}' must be a number, got {value!r}")
        return float(value)
    if expected is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"'{where}' must be an integer, got {value!r}")
        return value
    if expected is str:
        if not isinstance(value, str):
            raise ConfigurationError(f"'{where}' must be a string, got {value!r}")
        return value
    # Nested dataclasses are built by their own section
    return value
