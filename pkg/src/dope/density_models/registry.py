import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Type, Union

import numpy as np

from ..errors import InvalidArgumentError
from ..mdp_core.rng import RngStream
from .base import ConditionalDensityModel, OptimizerConfig
from .categorical import CategoricalGrid
from .features import FeatureMap
from .gaussian import FixedVarianceGaussian
from .gmm import ConditionalGmm
from .mixture import TabularMixtureModel
from .point_mass import PointMassModel

logger = logging.getLogger(__name__)


class ModelRegistry:
    """Registry of conditional density model families, keyed by family tag"""

    # Static field of references to the available model types
    __type_registry: dict[str, Type[ConditionalDensityModel]] = {
        ConditionalGmm.family: ConditionalGmm,
        CategoricalGrid.family: CategoricalGrid,
        FixedVarianceGaussian.family: FixedVarianceGaussian,
        TabularMixtureModel.family: TabularMixtureModel,
        PointMassModel.family: PointMassModel,
    }

    @classmethod
    def register_model_type(cls, name: str, new_type: Type[ConditionalDensityModel]):
        if name in cls.__type_registry:
            raise ValueError(f"Model family '{name}' already registered")
        cls.__type_registry.update({name: new_type})

    @classmethod
    def get_model_type(cls, name: str) -> Type[ConditionalDensityModel]:
        try:
            return cls.__type_registry[name]
        except KeyError:
            raise InvalidArgumentError(
                f"Model family '{name}' is not registered (known: {', '.join(cls.families())})"
            ) from None

    @classmethod
    def families(cls) -> List[str]:
        return sorted(cls.__type_registry)


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """What to fit: family, conditioning, target dimension and family options."""

    family: str
    feature_map: FeatureMap
    n_actions: int
    dim: int = 1
    bounds: Optional[Any] = None
    options: Dict[str, Any] = field(default_factory=dict)

    def build(self) -> ConditionalDensityModel:
        return ModelRegistry.get_model_type(self.family)(
            feature_map=self.feature_map,
            n_actions=self.n_actions,
            dim=self.dim,
            bounds=self.bounds,
            **self.options,
        )


def model_fit(
    spec: ModelSpec,
    x: np.ndarray,
    a: np.ndarray,
    z: np.ndarray,
    opt: Optional[OptimizerConfig] = None,
    rng: Optional[RngStream] = None,
) -> ConditionalDensityModel:
    """Build a fresh model from `spec` and fit it by maximum likelihood to (x, a, z)."""
    model = spec.build()
    model.fit(x, a, z, opt, rng)
    return model


def model_sample(model: ConditionalDensityModel, x: np.ndarray, a: np.ndarray, rng: RngStream) -> np.ndarray:
    return model.sample(x, a, rng)


def model_log_density(model: ConditionalDensityModel, x: np.ndarray, a: np.ndarray, z: np.ndarray) -> np.ndarray:
    return model.log_density(x, a, z)


def model_from_dict(content: dict) -> ConditionalDensityModel:
    return ModelRegistry.get_model_type(content["family"]).from_dict(content)


def save_model(model: ConditionalDensityModel, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(model.to_dict(), f)
    logger.debug("Saved %s model to %s", model.family, path)
    return path


def load_model(path: Union[str, Path]) -> ConditionalDensityModel:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Model file not found: {path}")
    with open(path, "r") as f:
        return model_from_dict(json.load(f))
