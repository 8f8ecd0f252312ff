from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from ..errors import InvalidArgumentError, ValidationError


@dataclass(frozen=True)
class DatasetMeta:
    """Environment description carried by a dataset

    .. parameter:: Environment identifier
    .. parameter:: Reward dimension d
    .. parameter:: Observation dimension D
    .. parameter:: Number of actions A
    .. parameter:: Horizon H (finite horizon) or None
    .. parameter:: Discount factor (discounted) or None
    """

    env_id: str
    reward_dim: int
    obs_dim: int
    n_actions: int
    horizon: Optional[int] = None
    gamma: Optional[float] = None

    @property
    def finite_horizon(self) -> bool:
        return self.horizon is not None

    def to_dict(self) -> dict:
        return {
            "env_id": self.env_id,
            "reward_dim": self.reward_dim,
            "obs_dim": self.obs_dim,
            "n_actions": self.n_actions,
            "horizon": self.horizon,
            "gamma": self.gamma,
        }


@dataclass(frozen=True)
class TransitionTuple:
    """One offline transition (x, a, r, x'), with the step h when recorded."""

    x: np.ndarray
    a: int
    r: np.ndarray
    x_next: np.ndarray
    step: Optional[int] = None


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class _Columns:
    x: np.ndarray
    a: np.ndarray
    r: np.ndarray
    x_next: np.ndarray
    step: Optional[np.ndarray]


class OfflineDataset:
    """Immutable collection of transitions stored column-wise.

    Subsets created by `subset` share the parent's columns and only hold an index array.
    """

    def __init__(self, columns: _Columns, meta: DatasetMeta, indices: Optional[np.ndarray] = None):
        self._columns = columns
        self.meta = meta
        n_total = columns.a.shape[0]
        if indices is None:
            indices = np.arange(n_total)
        self._indices = _frozen(np.asarray(indices, dtype=np.int64))
        if self._indices.size == 0:
            raise InvalidArgumentError("OfflineDataset must be non-empty")

    @classmethod
    def from_arrays(
        cls,
        x: np.ndarray,
        a: np.ndarray,
        r: np.ndarray,
        x_next: np.ndarray,
        meta: DatasetMeta,
        step: Optional[np.ndarray] = None,
    ) -> "OfflineDataset":
        x = np.asarray(x, dtype=float)
        x_next = np.asarray(x_next, dtype=float)
        a = np.asarray(a, dtype=np.int64)
        r = np.asarray(r, dtype=float)
        if r.ndim == 1:
            r = r[:, None]
        n = a.shape[0]
        if x.shape != (n, meta.obs_dim) or x_next.shape != (n, meta.obs_dim):
            raise ValidationError(
                f"Observation arrays must have shape ({n}, {meta.obs_dim}), got {x.shape} and {x_next.shape}"
            )
        if r.shape != (n, meta.reward_dim):
            raise ValidationError(f"Reward array must have shape ({n}, {meta.reward_dim}), got {r.shape}")
        if n and (a.min() < 0 or a.max() >= meta.n_actions):
            raise ValidationError(f"Actions must lie in [0, {meta.n_actions})")
        if not (np.isfinite(x).all() and np.isfinite(x_next).all() and np.isfinite(r).all()):
            raise ValidationError("Observations and rewards must be finite")
        if step is not None:
            step = np.asarray(step, dtype=np.int64)
            if step.shape != (n,):
                raise ValidationError(f"Step array must have shape ({n},)")
        columns = _Columns(
            x=_frozen(x),
            a=_frozen(a),
            r=_frozen(r),
            x_next=_frozen(x_next),
            step=None if step is None else _frozen(step),
        )
        return cls(columns, meta)

    @classmethod
    def from_tuples(cls, tuples: Sequence[TransitionTuple], meta: DatasetMeta) -> "OfflineDataset":
        if not tuples:
            raise InvalidArgumentError("OfflineDataset must be non-empty")
        steps = [t.step for t in tuples]
        return cls.from_arrays(
            x=np.stack([t.x for t in tuples]),
            a=np.array([t.a for t in tuples]),
            r=np.stack([np.atleast_1d(t.r) for t in tuples]),
            x_next=np.stack([t.x_next for t in tuples]),
            meta=meta,
            step=None if any(s is None for s in steps) else np.array(steps),
        )

    def __len__(self) -> int:
        return int(self._indices.size)

    def __getitem__(self, i: int) -> TransitionTuple:
        j = self._indices[i]
        c = self._columns
        return TransitionTuple(
            x=c.x[j],
            a=int(c.a[j]),
            r=c.r[j],
            x_next=c.x_next[j],
            step=None if c.step is None else int(c.step[j]),
        )

    def __iter__(self) -> Iterator[TransitionTuple]:
        for i in range(len(self)):
            yield self[i]

    @property
    def indices(self) -> np.ndarray:
        """Row indices into the root dataset's columns."""
        return self._indices

    @property
    def x(self) -> np.ndarray:
        return self._columns.x[self._indices]

    @property
    def a(self) -> np.ndarray:
        return self._columns.a[self._indices]

    @property
    def r(self) -> np.ndarray:
        return self._columns.r[self._indices]

    @property
    def x_next(self) -> np.ndarray:
        return self._columns.x_next[self._indices]

    @property
    def step(self) -> Optional[np.ndarray]:
        if self._columns.step is None:
            return None
        return self._columns.step[self._indices]

    @property
    def has_steps(self) -> bool:
        return self._columns.step is not None

    def subset(self, positions: np.ndarray) -> "OfflineDataset":
        """Subset by positions relative to this dataset (not to the root)."""
        return OfflineDataset(self._columns, self.meta, self._indices[np.asarray(positions, dtype=np.int64)])

    def content_hash(self) -> str:
        """SHA-256 over the subset's rows; identical content gives identical hashes."""
        digest = hashlib.sha256()
        for array in (self.x, self.a, self.r, self.x_next):
            digest.update(np.ascontiguousarray(array).tobytes())
        if self.has_steps:
            digest.update(np.ascontiguousarray(self.step).tobytes())
        return digest.hexdigest()


class EmpiricalDistribution:
    """Multiset of return vectors

    .. parameter:: Samples, shape (m, d)
    """

    def __init__(self, samples: np.ndarray):
        samples = np.asarray(samples, dtype=float)
        if samples.ndim == 1:
            samples = samples[:, None]
        if samples.ndim != 2 or samples.shape[0] == 0:
            raise InvalidArgumentError("EmpiricalDistribution needs a non-empty (m, d) sample array")
        self.samples = samples

    def __len__(self) -> int:
        return self.samples.shape[0]

    def __repr__(self) -> str:
        return f"EmpiricalDistribution(m={len(self)}, d={self.dim})"

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def mean(self) -> np.ndarray:
        return self.samples.mean(axis=0)

    def scalar(self) -> np.ndarray:
        """Samples as a flat array; only defined for d=1."""
        if self.dim != 1:
            raise InvalidArgumentError(f"Expected scalar returns, got d={self.dim}")
        return self.samples[:, 0]
