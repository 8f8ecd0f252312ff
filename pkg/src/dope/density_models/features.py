# Conditioning: feature maps turn observations into discrete cells; models keep one parameter set per (cell, action)

import abc
from typing import ClassVar, Type

import numpy as np

from ..errors import InvalidArgumentError


class FeatureMap(metaclass=abc.ABCMeta):
    """Deterministic map from observations (n, D) to cell indices in [0, n_cells)."""

    feature_id: ClassVar[str]

    @property
    @abc.abstractmethod
    def n_cells(self) -> int:
        pass

    @abc.abstractmethod
    def cells(self, x: np.ndarray) -> np.ndarray:
        pass

    def keys(self, x: np.ndarray, a: np.ndarray, n_actions: int) -> np.ndarray:
        """Conditioning key cell·A + a for each row."""
        a = np.asarray(a, dtype=np.int64).reshape(-1)
        if a.size and (a.min() < 0 or a.max() >= n_actions):
            raise InvalidArgumentError(f"actions must lie in [0, {n_actions})")
        return self.cells(x) * n_actions + a

    def to_dict(self) -> dict:
        return {"feature_id": self.feature_id}


class CombinationLockCells(FeatureMap):
    """Reads the latent and step one-hot blocks of a combination-lock observation: cell = w·H + (h-1)."""

    feature_id = "combination_lock"

    def __init__(self, horizon: int):
        if horizon < 1:
            raise InvalidArgumentError(f"horizon must be >= 1, got {horizon}")
        self.horizon = horizon

    @property
    def n_cells(self) -> int:
        return 2 * self.horizon

    def cells(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        latent = np.argmax(x[:, :2], axis=1)
        step = np.argmax(x[:, 2 : 2 + self.horizon], axis=1)
        return latent * self.horizon + step

    def to_dict(self) -> dict:
        return {"feature_id": self.feature_id, "horizon": self.horizon}


class OneHotStateCells(FeatureMap):
    """Tabular features: the state index of a one-hot observation."""

    feature_id = "one_hot_state"

    def __init__(self, n_states: int):
        if n_states < 1:
            raise InvalidArgumentError(f"n_states must be >= 1, got {n_states}")
        self.n_states = n_states

    @property
    def n_cells(self) -> int:
        return self.n_states

    def cells(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(np.atleast_2d(x)[:, : self.n_states], axis=1)

    def to_dict(self) -> dict:
        return {"feature_id": self.feature_id, "n_states": self.n_states}


class ConstantCells(FeatureMap):
    """Single cell: the model depends on the action only."""

    feature_id = "constant"

    @property
    def n_cells(self) -> int:
        return 1

    def cells(self, x: np.ndarray) -> np.ndarray:
        return np.zeros(np.atleast_2d(x).shape[0], dtype=np.int64)


class FeatureMaps:
    """Registry of feature map types, keyed by feature id"""

    __type_registry: dict[str, Type[FeatureMap]] = {
        CombinationLockCells.feature_id: CombinationLockCells,
        OneHotStateCells.feature_id: OneHotStateCells,
        ConstantCells.feature_id: ConstantCells,
    }

    @classmethod
    def register_feature_type(cls, name: str, new_type: Type[FeatureMap]):
        if name in cls.__type_registry:
            raise ValueError(f"Feature map '{name}' already registered")
        cls.__type_registry.update({name: new_type})

    @classmethod
    def get_feature_type(cls, name: str) -> Type[FeatureMap]:
        try:
            return cls.__type_registry[name]
        except KeyError:
            raise InvalidArgumentError(f"Feature map '{name}' is not registered") from None

    @classmethod
    def from_dict(cls, content: dict) -> FeatureMap:
        kwargs = {k: v for k, v in content.items() if k != "feature_id"}
        return cls.get_feature_type(content["feature_id"])(**kwargs)
