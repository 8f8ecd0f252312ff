import abc
import logging
from dataclasses import dataclass
from typing import Any, Callable, ClassVar, Dict, Optional, Tuple

import numpy as np

from ..errors import InvalidArgumentError, TrainingAbortedError
from ..mdp_core.rng import RngStream
from .features import FeatureMap, FeatureMaps

logger = logging.getLogger(__name__)

LOG_DENSITY_FLOOR = -30.0
OPTIMIZER_METHODS = ("adam", "gradient")

Params = Dict[str, np.ndarray]
Objective = Callable[[Params], Tuple[np.ndarray, Params]]


@dataclass(frozen=True)
class OptimizerConfig:
    """Full-batch ascent on the average log-likelihood with per-key monotone accept

    .. parameter:: Step size
    .. parameter:: Number of iterations
    .. parameter:: Update direction, 'adam' or 'gradient'
    .. parameter:: Maximum step halvings before a key's step is rejected
    .. parameter:: Stop once the total average log-likelihood improves by less than this (0 runs all iterations)
    """

    lr: float = 1e-2
    iterations: int = 500
    method: str = "adam"
    max_halvings: int = 20
    tol: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if not self.lr > 0:
            raise InvalidArgumentError(f"lr must be > 0, got {self.lr}")
        if self.iterations < 0:
            raise InvalidArgumentError(f"iterations must be >= 0, got {self.iterations}")
        if self.method not in OPTIMIZER_METHODS:
            raise InvalidArgumentError(f"method must be one of {OPTIMIZER_METHODS}, got '{self.method}'")
        if self.max_halvings < 0:
            raise InvalidArgumentError(f"max_halvings must be >= 0, got {self.max_halvings}")


@dataclass(frozen=True)
class FitReport:
    initial_ll: float
    final_ll: float
    iterations: int
    accepted: int = 0
    rejected: int = 0


class KeyGroups:
    """Rows grouped by conditioning key, for per-key sums and means."""

    def __init__(self, keys: np.ndarray, n_keys: int):
        self.keys = np.asarray(keys, dtype=np.int64)
        self.n_keys = n_keys
        self.counts = np.bincount(self.keys, minlength=n_keys)
        if self.counts.shape[0] > n_keys:
            raise InvalidArgumentError(f"Conditioning key out of range [0, {n_keys})")
        self.order = np.argsort(self.keys, kind="stable")
        self.present = np.flatnonzero(self.counts)
        self.starts = np.concatenate([[0], np.cumsum(self.counts[self.present])[:-1]]).astype(np.int64)

    @property
    def active(self) -> np.ndarray:
        return self.counts > 0

    def rows(self, key: int) -> np.ndarray:
        return np.flatnonzero(self.keys == key)

    def sum(self, values: np.ndarray) -> np.ndarray:
        out = np.zeros((self.n_keys,) + values.shape[1:])
        if self.present.size:
            out[self.present] = np.add.reduceat(values[self.order], self.starts, axis=0)
        return out

    def mean(self, values: np.ndarray) -> np.ndarray:
        total = self.sum(values)
        counts = np.maximum(self.counts, 1).reshape((-1,) + (1,) * (values.ndim - 1))
        return total / counts

    def total_mean(self, per_key: np.ndarray) -> float:
        """Average over rows of a per-key average."""
        return float((per_key * self.counts).sum() / max(self.counts.sum(), 1))


def _per_key(scale: np.ndarray, like: np.ndarray) -> np.ndarray:
    return scale.reshape((-1,) + (1,) * (like.ndim - 1))


def _require_finite(value: np.ndarray, grads: Params, active: np.ndarray, iteration: int):
    if not np.isfinite(value[active]).all():
        raise TrainingAbortedError(f"Non-finite log-likelihood at iteration {iteration}")
    for name, g in grads.items():
        if not np.isfinite(g).all():
            raise TrainingAbortedError(f"Non-finite gradient for '{name}' at iteration {iteration}")


def monotone_ascent(
    params: Params,
    objective: Objective,
    active: np.ndarray,
    opt: OptimizerConfig,
    project: Optional[Callable[[Params], Params]] = None,
    weights: Optional[np.ndarray] = None,
) -> Tuple[Params, FitReport]:
    """Maximise a per-key average log-likelihood.

    `objective(params)` returns the per-key values (n_keys,) and their gradients, one
    array per parameter with the key on the leading axis. Rows are floored with `floor_rows`,
    so accepted values match what `log_density` reports. A key's step is halved until its own
    value does not decrease; after `max_halvings` halvings the step is dropped.
    """
    weights = active.astype(float) if weights is None else np.asarray(weights, dtype=float)

    def total(v: np.ndarray) -> float:
        return float((v[active] * weights[active]).sum() / max(weights[active].sum(), 1e-300))

    params = {name: np.array(p, dtype=float) for name, p in params.items()}
    value, grads = objective(params)
    _require_finite(value, grads, active, 0)
    initial = total(value)

    first = {name: np.zeros_like(p) for name, p in params.items()}
    second = {name: np.zeros_like(p) for name, p in params.items()}
    accepted = rejected = 0
    iteration = 0

    for iteration in range(1, opt.iterations + 1):
        directions = {}
        for name, g in grads.items():
            if opt.method == "adam":
                first[name] = opt.beta1 * first[name] + (1 - opt.beta1) * g
                second[name] = opt.beta2 * second[name] + (1 - opt.beta2) * g * g
                m_hat = first[name] / (1 - opt.beta1**iteration)
                v_hat = second[name] / (1 - opt.beta2**iteration)
                directions[name] = m_hat / (np.sqrt(v_hat) + opt.eps)
            else:
                directions[name] = g

        pending = active.copy()
        scale = np.full(active.shape[0], opt.lr)
        new_params = {name: p.copy() for name, p in params.items()}
        new_grads = {name: g.copy() for name, g in grads.items()}
        new_value = value.copy()

        for _ in range(opt.max_halvings + 1):
            step = np.where(pending, scale, 0.0)
            candidate = {name: params[name] + _per_key(step, p) * directions[name] for name, p in params.items()}
            if project is not None:
                candidate = project(candidate)
            c_value, c_grads = objective(candidate)
            ok = pending & np.isfinite(c_value) & (c_value >= value)
            for name in params:
                new_params[name][ok] = candidate[name][ok]
                new_grads[name][ok] = c_grads[name][ok]
            new_value[ok] = c_value[ok]
            pending &= ~ok
            if not pending.any():
                break
            scale[pending] *= 0.5

        rejected += int(pending.sum())
        accepted += int(active.sum() - pending.sum())
        improvement = total(new_value) - total(value)
        params, grads, value = new_params, new_grads, new_value
        _require_finite(value, grads, active, iteration)

        if opt.tol > 0 and improvement < opt.tol:
            logger.debug("Converged after %d iterations (improvement %.3g)", iteration, improvement)
            break

    report = FitReport(initial, total(value), iteration, accepted, rejected)
    logger.debug("Ascent finished: %s", report)
    return params, report


def floor_rows(ll: np.ndarray, inside: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Row log-likelihoods floored the way `log_density` floors them, and the mask of rows left as they were."""
    # NaN rows stay unfloored and abort the fit
    kept = ~(ll < LOG_DENSITY_FLOOR)
    if inside is not None:
        kept &= inside
    return np.where(kept, ll, LOG_DENSITY_FLOOR), kept


def default_bounds(z: np.ndarray, pad: float = 0.25) -> np.ndarray:
    """Bounding box of the targets padded by `pad` of the span per dimension, shape (2, d)."""
    lo, hi = z.min(axis=0), z.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return np.stack([lo - pad * span, hi + pad * span])


class ConditionalDensityModel(metaclass=abc.ABCMeta):
    """Conditional density f(z | x, a) over R^d with one parameter set per (cell, action) key.

    Subclasses implement the per-key parameterisation; this class handles keys,
    bounding boxes, the log-density floor and (de)serialization.
    """

    family: ClassVar[str]

    def __init__(self, feature_map: FeatureMap, n_actions: int, dim: int = 1, bounds: Optional[Any] = None):
        if n_actions < 1:
            raise InvalidArgumentError(f"n_actions must be >= 1, got {n_actions}")
        if dim < 1:
            raise InvalidArgumentError(f"dim must be >= 1, got {dim}")
        self.feature_map = feature_map
        self.n_actions = n_actions
        self.dim = dim
        self.bounds = None if bounds is None else self._as_bounds(bounds)
        self.last_fit: Optional[FitReport] = None

    def _as_bounds(self, bounds: Any) -> np.ndarray:
        b = np.asarray(bounds, dtype=float).reshape(2, -1)
        if b.shape[1] == 1 and self.dim > 1:
            b = np.repeat(b, self.dim, axis=1)
        if b.shape != (2, self.dim) or not (b[1] > b[0]).all():
            raise InvalidArgumentError(f"bounds must be (low, high) with low < high per dimension, got {bounds}")
        return b

    def __repr__(self) -> str:
        return f"{type(self).__name__}(keys={self.n_keys}, dim={self.dim})"

    @property
    def n_keys(self) -> int:
        return self.feature_map.n_cells * self.n_actions

    def keys(self, x: np.ndarray, a: np.ndarray) -> np.ndarray:
        return self.feature_map.keys(x, a, self.n_actions)

    def inside_bounds(self, z: np.ndarray) -> np.ndarray:
        if self.bounds is None:
            return np.ones(z.shape[0], dtype=bool)
        return ~((z < self.bounds[0]) | (z > self.bounds[1])).any(axis=1)

    # Family interface

    @abc.abstractmethod
    def _fit(self, groups: KeyGroups, z: np.ndarray, opt: OptimizerConfig, rng: RngStream) -> FitReport:
        pass

    @abc.abstractmethod
    def _sample_keys(self, keys: np.ndarray, rng: RngStream) -> np.ndarray:
        pass

    @abc.abstractmethod
    def _log_density_keys(self, keys: np.ndarray, z: np.ndarray) -> np.ndarray:
        pass

    @abc.abstractmethod
    def get_parameters(self) -> Params:
        pass

    @abc.abstractmethod
    def set_parameters(self, params: Params):
        pass

    def options(self) -> dict:
        """Family-specific constructor arguments, JSON compatible."""
        return {}

    @classmethod
    def decode_options(cls, options: dict) -> dict:
        return dict(options)

    # Public API

    def _targets(self, z: np.ndarray, n: Optional[int] = None) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.ndim == 1:
            z = z[:, None] if self.dim == 1 else z[None, :]
        if z.shape[1] != self.dim:
            raise InvalidArgumentError(f"Expected targets of dim {self.dim}, got {z.shape[1]}")
        if n is not None and z.shape[0] != n:
            raise InvalidArgumentError(f"Got {n} conditioning rows but {z.shape[0]} targets")
        return z

    def fit(
        self,
        x: np.ndarray,
        a: np.ndarray,
        z: np.ndarray,
        opt: Optional[OptimizerConfig] = None,
        rng: Optional[RngStream] = None,
    ) -> FitReport:
        """Maximum-likelihood fit to the triples (x_i, a_i, z_i); never lowers the training likelihood."""
        keys = self.keys(x, a)
        if keys.shape[0] == 0:
            raise InvalidArgumentError("Cannot fit a model to an empty target set")
        z = self._targets(z, keys.shape[0])
        bad = np.flatnonzero(~np.isfinite(z).all(axis=1))
        if bad.size:
            raise TrainingAbortedError("Non-finite regression target", tuple_index=int(bad[0]))
        if self.bounds is None:
            self.bounds = default_bounds(z)

        groups = KeyGroups(keys, self.n_keys)
        report = self._fit(groups, z, opt or OptimizerConfig(), rng or RngStream(0))
        self.last_fit = report
        logger.debug(
            "%s fitted on %d targets over %d keys: avg log-likelihood %.4f -> %.4f",
            self.family,
            keys.shape[0],
            groups.present.size,
            report.initial_ll,
            report.final_ll,
        )
        return report

    def sample(self, x: np.ndarray, a: np.ndarray, rng: RngStream) -> np.ndarray:
        """One draw z ~ f(. | x_i, a_i) per row, shape (n, d)."""
        z = self._sample_keys(self.keys(x, a), rng)
        if self.bounds is not None:
            z = np.clip(z, self.bounds[0], self.bounds[1])
        return z

    def log_density(self, x: np.ndarray, a: np.ndarray, z: np.ndarray) -> np.ndarray:
        """log f(z_i | x_i, a_i), floored at LOG_DENSITY_FLOOR; the floor outside the bounding box."""
        keys = self.keys(x, a)
        z = self._targets(z, keys.shape[0])
        with np.errstate(divide="ignore"):
            ld = np.maximum(self._log_density_keys(keys, z), LOG_DENSITY_FLOOR)
        ld[~self.inside_bounds(z)] = LOG_DENSITY_FLOOR
        return ld

    def average_log_likelihood(self, x: np.ndarray, a: np.ndarray, z: np.ndarray) -> float:
        return float(np.mean(self.log_density(x, a, z)))

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "feature_map": self.feature_map.to_dict(),
            "n_actions": self.n_actions,
            "dim": self.dim,
            "bounds": None if self.bounds is None else self.bounds.tolist(),
            "options": self.options(),
            "parameters": {
                name: {"shape": list(p.shape), "values": p.ravel().tolist()} for name, p in self.get_parameters().items()
            },
        }

    @classmethod
    def from_dict(cls, content: dict) -> "ConditionalDensityModel":
        model = cls(
            feature_map=FeatureMaps.from_dict(content["feature_map"]),
            n_actions=content["n_actions"],
            dim=content["dim"],
            bounds=content.get("bounds"),
            **cls.decode_options(content.get("options", {})),
        )
        model.set_parameters(
            {
                name: np.array(p["values"], dtype=float).reshape(p["shape"])
                for name, p in content.get("parameters", {}).items()
            }
        )
        return model
