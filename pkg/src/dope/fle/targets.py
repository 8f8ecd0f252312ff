import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..density_models.base import ConditionalDensityModel
from ..errors import InvalidArgumentError, TrainingAbortedError
from ..mdp_core.policy import Policy
from ..mdp_core.rng import RngStream
from ..mdp_core.types import OfflineDataset


@dataclass(frozen=True, eq=False)
class RegressionTargetSet:
    """One (x, a, z) regression triple per source tuple; `source` holds the tuples' dataset indices."""

    x: np.ndarray
    a: np.ndarray
    z: np.ndarray
    source: np.ndarray

    def __len__(self) -> int:
        return self.z.shape[0]

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["source", "a"] + [f"z_{i}" for i in range(self.z.shape[1])])
            for i in range(len(self)):
                writer.writerow([int(self.source[i]), int(self.a[i])] + ["{:.17g}".format(v) for v in self.z[i]])
        return path


def bootstrap_samples(
    subset: OfflineDataset,
    model: ConditionalDensityModel,
    policy: Policy,
    rng: RngStream,
    step: Optional[int] = None,
) -> np.ndarray:
    """y_i ~ model(. | x'_i, a'_i) with a'_i ~ π(x'_i), one draw per tuple."""
    x_next = subset.x_next
    try:
        a_next = policy.sample(x_next, rng.derive("next_action"))
        y = model.sample(x_next, a_next, rng.derive("next_return"))
    except TrainingAbortedError as ex:
        raise ex.with_context(step=step) from ex
    except Exception as ex:
        raise TrainingAbortedError(f"Sampling the next-step model failed: {ex}", step=step) from ex
    bad = np.flatnonzero(~np.isfinite(y).all(axis=1))
    if bad.size:
        raise TrainingAbortedError(
            "Next-step model produced a non-finite sample", step=step, tuple_index=int(subset.indices[bad[0]])
        )
    return y


def build_targets_finite(
    subset: OfflineDataset,
    h: int,
    f_next: Optional[ConditionalDensityModel],
    policy: Policy,
    rng: RngStream,
    horizon: int,
) -> RegressionTargetSet:
    """Targets z = r + y with y ~ f̂_{h+1}(. | x', a'), a' ~ π(x'); z = r at the last step."""
    if not 1 <= h <= horizon:
        raise InvalidArgumentError(f"step must lie in [1, {horizon}], got {h}")
    if (f_next is None) != (h == horizon):
        raise InvalidArgumentError("f_next is required exactly for steps h < H")
    z = subset.r.copy()
    if f_next is not None:
        z = z + bootstrap_samples(subset, f_next, policy, rng, step=h)
    return RegressionTargetSet(subset.x, subset.a, z, subset.indices)


def build_targets_discounted(
    subset: OfflineDataset,
    f_prev: ConditionalDensityModel,
    policy: Policy,
    gamma: float,
    rng: RngStream,
    iteration: Optional[int] = None,
) -> RegressionTargetSet:
    """Targets z = r + γ·y with y ~ f̂_{t-1}(. | x', a'), a' ~ π(x')."""
    y = bootstrap_samples(subset, f_prev, policy, rng, step=iteration)
    return RegressionTargetSet(subset.x, subset.a, subset.r + gamma * y, subset.indices)
