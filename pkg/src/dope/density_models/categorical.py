import itertools
from typing import List, Sequence, Tuple, Union

import numpy as np
from scipy.special import logsumexp, softmax

from ..errors import InvalidArgumentError
from ..mdp_core.rng import RngStream
from .base import ConditionalDensityModel, FitReport, KeyGroups, OptimizerConfig, Params, monotone_ascent
from .features import FeatureMap


class AtomGrid:
    """Regular grid of atoms, `n_atoms[i]` points over [low[i], high[i]] per dimension.

    Atoms are flattened in C order of their per-dimension indices.
    """

    def __init__(self, low: Sequence[float], high: Sequence[float], n_atoms: Union[int, Sequence[int]]):
        self.low = np.atleast_1d(np.asarray(low, dtype=float))
        self.high = np.atleast_1d(np.asarray(high, dtype=float))
        dim = self.low.shape[0]
        self.n_atoms = tuple(int(n) for n in np.broadcast_to(np.asarray(n_atoms), (dim,)))
        if self.high.shape != (dim,) or not (self.high > self.low).all():
            raise InvalidArgumentError("Grid range must satisfy low < high in every dimension")
        if min(self.n_atoms) < 2:
            raise InvalidArgumentError(f"Need at least 2 atoms per dimension, got {self.n_atoms}")
        self.delta = (self.high - self.low) / (np.asarray(self.n_atoms) - 1)
        self._corners = np.array(list(itertools.product((0, 1), repeat=dim)), dtype=np.int64)

    @property
    def dim(self) -> int:
        return self.low.shape[0]

    @property
    def size(self) -> int:
        return int(np.prod(self.n_atoms))

    def axes(self) -> List[np.ndarray]:
        return [np.linspace(lo, hi, n) for lo, hi, n in zip(self.low, self.high, self.n_atoms)]

    def support(self) -> np.ndarray:
        """Atom coordinates, shape (size, d)."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def project(self, z: np.ndarray, mass: Union[float, np.ndarray] = 1.0) -> Tuple[np.ndarray, np.ndarray]:
        """Multilinear projection of each row of z onto its 2^d surrounding atoms.

        Returns atom indices and weights, both (n, 2^d); each row's weights sum to its mass.
        """
        z = np.clip(np.atleast_2d(np.asarray(z, dtype=float)), self.low, self.high)
        position = (z - self.low) / self.delta
        lower = np.clip(np.floor(position), 0, np.asarray(self.n_atoms) - 2).astype(np.int64)
        frac = np.clip(position - lower, 0.0, 1.0)
        index = lower[:, None, :] + self._corners[None, :, :]
        weights = np.where(self._corners[None, :, :] == 1, frac[:, None, :], 1.0 - frac[:, None, :]).prod(axis=2)
        flat = np.ravel_multi_index(tuple(index[..., i] for i in range(self.dim)), self.n_atoms)
        return flat, weights * np.asarray(mass, dtype=float).reshape(-1, 1)

    def project_distribution(self, keys: np.ndarray, z: np.ndarray, mass: np.ndarray, n_keys: int) -> np.ndarray:
        """Scatter projected masses into per-key distributions over atoms, shape (n_keys, size)."""
        index, weights = self.project(z, mass)
        out = np.zeros((n_keys, self.size))
        np.add.at(out, (np.repeat(np.asarray(keys), index.shape[1]), index.ravel()), weights.ravel())
        return out

    def to_dict(self) -> dict:
        return {"low": self.low.tolist(), "high": self.high.tolist(), "n_atoms": list(self.n_atoms)}


def categorical_project(grid: AtomGrid, z: np.ndarray, mass: float = 1.0) -> List[Tuple[int, float]]:
    """Sparse atom-weight list for a single target z (clipped into the grid)."""
    index, weights = grid.project(np.asarray(z, dtype=float).reshape(1, -1), mass)
    merged: dict = {}
    for i, w in zip(index[0].tolist(), weights[0].tolist()):
        if w > 0.0:
            merged[i] = merged.get(i, 0.0) + w
    return sorted(merged.items())


def fit_categorical(
    logits: np.ndarray, targets: np.ndarray, active: np.ndarray, opt: OptimizerConfig, weights: np.ndarray
) -> Tuple[np.ndarray, FitReport]:
    """Minimise the cross-entropy between per-key target distributions and softmax(logits)."""

    def objective(params: Params) -> Tuple[np.ndarray, Params]:
        log_p = params["logits"] - logsumexp(params["logits"], axis=1, keepdims=True)
        value = (targets * log_p).sum(axis=1)
        grad = targets - np.exp(log_p) * targets.sum(axis=1, keepdims=True)
        return value, {"logits": grad}

    params, report = monotone_ascent({"logits": logits}, objective, active, opt, weights=weights)
    return params["logits"], report


class CategoricalGrid(ConditionalDensityModel):
    """Categorical distribution over a fixed atom grid per (cell, action) key."""

    family = "categorical"

    def __init__(
        self,
        feature_map: FeatureMap,
        n_actions: int,
        dim: int = 1,
        bounds=None,
        n_atoms: Union[int, Sequence[int]] = 100,
    ):
        super().__init__(feature_map, n_actions, dim, bounds)
        if self.bounds is None:
            raise InvalidArgumentError("A categorical grid needs explicit bounds (the atom range)")
        self.grid = AtomGrid(self.bounds[0], self.bounds[1], n_atoms)
        self.logits = np.zeros((self.n_keys, self.grid.size))

    def options(self) -> dict:
        return {"n_atoms": list(self.grid.n_atoms)}

    def get_parameters(self) -> Params:
        return {"logits": self.logits}

    def set_parameters(self, params: Params):
        logits = np.asarray(params["logits"], dtype=float)
        if logits.shape != self.logits.shape:
            raise InvalidArgumentError(f"Categorical logits must have shape {self.logits.shape}, got {logits.shape}")
        self.logits = logits.copy()

    @property
    def probs(self) -> np.ndarray:
        return softmax(self.logits, axis=1)

    def target_distribution(self, groups: KeyGroups, z: np.ndarray) -> np.ndarray:
        """Average projected target per key; rows of keys without data are zero."""
        total = self.grid.project_distribution(groups.keys, z, np.ones(z.shape[0]), self.n_keys)
        return total / np.maximum(groups.counts, 1)[:, None]

    def fit_targets(self, targets: np.ndarray, counts: np.ndarray, opt: OptimizerConfig) -> FitReport:
        """Fit every key with data to its target distribution; other keys stay uniform."""
        active = counts > 0
        self.logits = np.zeros_like(self.logits)
        self.logits, report = fit_categorical(self.logits, targets, active, opt, counts)
        return report

    def _fit(self, groups: KeyGroups, z: np.ndarray, opt: OptimizerConfig, rng: RngStream) -> FitReport:
        return self.fit_targets(self.target_distribution(groups, z), groups.counts, opt)

    def _log_density_keys(self, keys: np.ndarray, z: np.ndarray) -> np.ndarray:
        index, weights = self.grid.project(z)
        mass = (self.probs[keys[:, None], index] * weights).sum(axis=1)
        return np.log(mass)

    def _sample_keys(self, keys: np.ndarray, rng: RngStream) -> np.ndarray:
        return self.grid.support()[rng.categorical(self.probs[keys])]
