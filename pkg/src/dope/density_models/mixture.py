from typing import Sequence, Tuple

import numpy as np
from scipy.special import logsumexp, softmax

from ..environments.tabular import RewardDensity, sample_dictionary
from ..errors import InvalidArgumentError
from ..mdp_core.rng import RngStream
from .base import (
    LOG_DENSITY_FLOOR,
    ConditionalDensityModel,
    FitReport,
    KeyGroups,
    OptimizerConfig,
    Params,
    floor_rows,
    monotone_ascent,
)
from .features import FeatureMap


class TabularMixtureModel(ConditionalDensityModel):
    """Per-key mixture weights over a fixed dictionary of 1-d reward densities.

    With the terminal reward densities of a sparse-reward tabular MDP as dictionary the
    class contains every Z^π_h exactly; with `uniform_bins` it is a histogram density.
    """

    family = "tabular_mixture"

    def __init__(
        self,
        feature_map: FeatureMap,
        n_actions: int,
        dim: int = 1,
        bounds=None,
        dictionary: Sequence[RewardDensity] = (),
    ):
        super().__init__(feature_map, n_actions, dim, bounds)
        if dim != 1:
            raise InvalidArgumentError("Tabular mixtures are defined over scalar returns only")
        if not dictionary:
            raise InvalidArgumentError("Tabular mixtures need a non-empty density dictionary")
        self.dictionary = tuple(dictionary)
        self.logits = np.zeros((self.n_keys, len(self.dictionary)))

    def options(self) -> dict:
        return {"dictionary": [d.to_dict() for d in self.dictionary]}

    @classmethod
    def decode_options(cls, options: dict) -> dict:
        return {**options, "dictionary": [RewardDensity.from_dict(d) for d in options.get("dictionary", [])]}

    def get_parameters(self) -> Params:
        return {"logits": self.logits}

    def set_parameters(self, params: Params):
        logits = np.asarray(params["logits"], dtype=float)
        if logits.shape != self.logits.shape:
            raise InvalidArgumentError(f"Mixture logits must have shape {self.logits.shape}, got {logits.shape}")
        self.logits = logits.copy()

    @property
    def weights(self) -> np.ndarray:
        return softmax(self.logits, axis=1)

    def set_weights(self, weights: np.ndarray):
        """Load exact weights, shape (n_keys, J); zero weights become very negative logits."""
        weights = np.asarray(weights, dtype=float)
        self.set_parameters({"logits": np.log(np.maximum(weights, 1e-300))})

    def component_log_pdf(self, z: np.ndarray) -> np.ndarray:
        """log p_j(z_i) floored per component, shape (n, J)."""
        z = np.asarray(z, dtype=float).reshape(-1)
        with np.errstate(divide="ignore"):
            logs = np.stack([d.log_pdf(z) for d in self.dictionary], axis=1)
        return np.maximum(logs, LOG_DENSITY_FLOOR)

    def _mixture_terms(self, logits: np.ndarray, keys: np.ndarray, log_f: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        log_w = logits - logsumexp(logits, axis=1, keepdims=True)
        lp = log_w[keys] + log_f
        return lp, logsumexp(lp, axis=1)

    def _fit(self, groups: KeyGroups, z: np.ndarray, opt: OptimizerConfig, rng: RngStream) -> FitReport:
        log_f = self.component_log_pdf(z[:, 0])
        inside = self.inside_bounds(z)

        def objective(params: Params) -> Tuple[np.ndarray, Params]:
            lp, raw = self._mixture_terms(params["logits"], groups.keys, log_f)
            ll, kept = floor_rows(raw, inside)
            resp = np.exp(lp - raw[:, None]) * kept[:, None]
            grad = groups.mean(resp) - softmax(params["logits"], axis=1) * groups.mean(kept.astype(float))[:, None]
            return groups.mean(ll), {"logits": grad}

        self.logits = np.zeros_like(self.logits)
        params, report = monotone_ascent(self.get_parameters(), objective, groups.active, opt, weights=groups.counts)
        self.set_parameters(params)
        return report

    def _log_density_keys(self, keys: np.ndarray, z: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            logs = np.stack([d.log_pdf(z[:, 0]) for d in self.dictionary], axis=1)
        return logsumexp(np.log(self.weights[keys]) + logs, axis=1)

    def _sample_keys(self, keys: np.ndarray, rng: RngStream) -> np.ndarray:
        component = rng.derive("component").categorical(self.weights[keys])
        return sample_dictionary(self.dictionary, component, rng.derive("value"))[:, None]
