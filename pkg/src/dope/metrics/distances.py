# Distances between return distributions: histogram TV, exact TV on discrete laws, W1 and exact W_p

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.integrate import trapezoid
from scipy.optimize import linear_sum_assignment, linprog
from scipy.spatial.distance import cdist

from ..errors import InvalidArgumentError, UnsupportedDimensionError, ValidationError
from ..mdp_core.rng import RngStream
from ..mdp_core.types import EmpiricalDistribution

logger = logging.getLogger(__name__)

MAX_ASSIGNMENT_SIZE = 256
MAX_LP_ATOMS = 64

Samples = Union[EmpiricalDistribution, np.ndarray]


def as_distribution(samples: Samples) -> EmpiricalDistribution:
    return samples if isinstance(samples, EmpiricalDistribution) else EmpiricalDistribution(samples)


@dataclass(frozen=True)
class HistogramSpec:
    """Per-dimension bin counts and ranges

    .. parameter:: Bin count per dimension
    .. parameter:: Lower range end per dimension
    .. parameter:: Upper range end per dimension
    """

    bins: Tuple[int, ...]
    low: Tuple[float, ...]
    high: Tuple[float, ...]

    def __post_init__(self):
        if not len(self.bins) == len(self.low) == len(self.high) or not self.bins:
            raise InvalidArgumentError("Histogram bins, low and high need one entry per dimension")
        if min(self.bins) < 1:
            raise InvalidArgumentError(f"Bin counts must be >= 1, got {self.bins}")
        if any(hi <= lo for lo, hi in zip(self.low, self.high)):
            raise InvalidArgumentError("Histogram ranges must be non-degenerate")

    @classmethod
    def uniform(cls, dim: int, bins: int, low: float, high: float) -> "HistogramSpec":
        return cls((bins,) * dim, (low,) * dim, (high,) * dim)

    @property
    def dim(self) -> int:
        return len(self.bins)

    def histogram(self, samples: np.ndarray) -> np.ndarray:
        """Normalised histogram; samples outside the range are clipped to it with a warning."""
        low, high = np.asarray(self.low), np.asarray(self.high)
        outside = ((samples < low) | (samples > high)).any(axis=1)
        if outside.any():
            logger.warning("%d of %d samples outside the histogram range were clipped", outside.sum(), len(samples))
            samples = np.clip(samples, low, high)
        counts, _ = np.histogramdd(samples, bins=self.bins, range=list(zip(self.low, self.high)))
        return counts / samples.shape[0]


def empirical_tv(p: Samples, q: Samples, spec: HistogramSpec) -> float:
    """Half the L1 distance between the normalised histograms of two sample sets."""
    p, q = as_distribution(p), as_distribution(q)
    if p.dim != q.dim or p.dim != spec.dim:
        raise InvalidArgumentError(f"Dimension mismatch: {p.dim}, {q.dim} and histogram {spec.dim}")
    return float(0.5 * np.abs(spec.histogram(p.samples) - spec.histogram(q.samples)).sum())


def wasserstein1_1d(p: Samples, q: Samples, rng: Optional[RngStream] = None) -> float:
    """W1 between scalar sample sets as the mean gap of sorted samples.

    The larger set is subsampled without replacement to the size of the smaller one.
    """
    p, q = as_distribution(p), as_distribution(q)
    if p.dim != 1 or q.dim != 1:
        raise UnsupportedDimensionError("wasserstein1_1d is defined for scalar returns only")
    a, b = p.scalar(), q.scalar()
    if a.shape[0] != b.shape[0]:
        rng = rng or RngStream(0)
        if a.shape[0] > b.shape[0]:
            a = a[rng.choice(a.shape[0], size=b.shape[0], replace=False)]
        else:
            b = b[rng.choice(b.shape[0], size=a.shape[0], replace=False)]
    return float(np.mean(np.abs(np.sort(a) - np.sort(b))))


def exact_wasserstein_p(p: Samples, q: Samples, order: float = 1.0) -> float:
    """Exact W_p between equal-size empirical measures by optimal assignment."""
    p, q = as_distribution(p), as_distribution(q)
    if order < 1:
        raise InvalidArgumentError(f"order must be >= 1, got {order}")
    if len(p) != len(q) or p.dim != q.dim:
        raise InvalidArgumentError("exact_wasserstein_p needs sample sets of equal size and dimension")
    if len(p) > MAX_ASSIGNMENT_SIZE:
        raise InvalidArgumentError(
            f"exact_wasserstein_p is limited to {MAX_ASSIGNMENT_SIZE} samples; use wasserstein1_1d for large scalar sets"
        )
    cost = cdist(p.samples, q.samples) ** order
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].mean() ** (1.0 / order))


@dataclass(frozen=True, eq=False)
class DiscreteLaw:
    """Finite discrete distribution: atoms (k, d) with probability weights (k,)."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        atoms = atoms[:, None] if atoms.ndim == 1 else atoms
        weights = np.asarray(self.weights, dtype=float)
        if atoms.ndim != 2 or weights.shape != (atoms.shape[0],) or atoms.shape[0] == 0:
            raise ValidationError("A discrete law needs atoms (k, d) and weights (k,)")
        if (weights < 0).any() or abs(weights.sum() - 1.0) > 1e-9:
            raise ValidationError("Discrete law weights must be a probability vector")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_samples(cls, samples: Samples) -> "DiscreteLaw":
        """Empirical measure with repeated samples merged into one atom."""
        atoms, counts = np.unique(as_distribution(samples).samples, axis=0, return_counts=True)
        return cls(atoms, counts / counts.sum())

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    def __len__(self) -> int:
        return self.atoms.shape[0]


def discrete_tv(p: DiscreteLaw, q: DiscreteLaw) -> float:
    """Exact TV between discrete laws; atoms are matched by exact equality."""
    if p.dim != q.dim:
        raise InvalidArgumentError("Discrete laws must share their dimension")
    atoms, inverse = np.unique(np.concatenate([p.atoms, q.atoms]), axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    diff = np.zeros(atoms.shape[0])
    np.add.at(diff, inverse[: len(p)], p.weights)
    np.add.at(diff, inverse[len(p) :], -q.weights)
    return float(0.5 * np.abs(diff).sum())


def empirical_measure_tv(p: Samples, q: Samples) -> float:
    return discrete_tv(DiscreteLaw.from_samples(p), DiscreteLaw.from_samples(q))


def discrete_wasserstein_p(p: DiscreteLaw, q: DiscreteLaw, order: float = 1.0) -> float:
    """Exact W_p between discrete laws by the transport linear program (HiGHS)."""
    if len(p) > MAX_LP_ATOMS or len(q) > MAX_LP_ATOMS:
        raise InvalidArgumentError(f"discrete_wasserstein_p is limited to {MAX_LP_ATOMS} atoms per law")
    if p.dim != q.dim:
        raise InvalidArgumentError("Discrete laws must share their dimension")
    k, l = len(p), len(q)
    cost = cdist(p.atoms, q.atoms) ** order
    # Plan π (k, l) flattened row-major: row sums equal p, column sums equal q
    rows = sparse.kron(sparse.eye(k), np.ones((1, l)))
    cols = sparse.kron(np.ones((1, k)), sparse.eye(l))
    result = linprog(
        cost.ravel(),
        A_eq=sparse.vstack([rows, cols]).tocsc(),
        b_eq=np.concatenate([p.weights, q.weights]),
        bounds=(0, None),
        method="highs",
    )
    if not result.success:
        raise ValidationError(f"Transport LP failed: {result.message}")
    return float(max(result.fun, 0.0) ** (1.0 / order))


def mixture_tv(
    w1: np.ndarray,
    w2: np.ndarray,
    dictionary: Sequence,
    grid_size: int = 20_001,
) -> float:
    """TV between two mixtures over the same 1-d density dictionary by trapezoid quadrature."""
    w1, w2 = np.asarray(w1, dtype=float), np.asarray(w2, dtype=float)
    if w1.shape != (len(dictionary),) or w2.shape != w1.shape:
        raise InvalidArgumentError("Mixture weights need one entry per dictionary density")
    low = min(d.support[0] for d in dictionary)
    high = max(d.support[1] for d in dictionary)
    z = np.linspace(low, high, grid_size)
    densities = np.stack([d.pdf(z) for d in dictionary])
    return float(0.5 * trapezoid(np.abs((w1 - w2) @ densities), z))
