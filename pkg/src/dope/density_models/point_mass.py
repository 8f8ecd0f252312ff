import numpy as np

from ..errors import InvalidArgumentError
from ..mdp_core.rng import RngStream
from .base import ConditionalDensityModel, FitReport, KeyGroups, OptimizerConfig, Params
from .features import ConstantCells, FeatureMap

ATOM_TOL = 1e-12


class PointMassModel(ConditionalDensityModel):
    """Deterministic return per key; the initial model of discounted FLE and a test double."""

    family = "point_mass"

    def __init__(self, feature_map: FeatureMap, n_actions: int, dim: int = 1, bounds=None):
        super().__init__(feature_map, n_actions, dim, bounds)
        self.values = np.zeros((self.n_keys, dim))

    @classmethod
    def constant(cls, value, n_actions: int = 1, feature_map: FeatureMap = None) -> "PointMassModel":
        value = np.atleast_1d(np.asarray(value, dtype=float))
        model = cls(feature_map or ConstantCells(), n_actions, dim=value.shape[0])
        model.values[:] = value
        return model

    def get_parameters(self) -> Params:
        return {"values": self.values}

    def set_parameters(self, params: Params):
        values = np.asarray(params["values"], dtype=float)
        if values.shape != self.values.shape:
            raise InvalidArgumentError(f"Values must have shape {self.values.shape}, got {values.shape}")
        self.values = values.copy()

    def _fit(self, groups: KeyGroups, z: np.ndarray, opt: OptimizerConfig, rng: RngStream) -> FitReport:
        raise InvalidArgumentError("Point-mass models are fixed; they have no likelihood to maximise")

    def _log_density_keys(self, keys: np.ndarray, z: np.ndarray) -> np.ndarray:
        hit = np.abs(z - self.values[keys]).max(axis=1) <= ATOM_TOL
        return np.where(hit, 0.0, -np.inf)

    def _sample_keys(self, keys: np.ndarray, rng: RngStream) -> np.ndarray:
        return self.values[keys].copy()
