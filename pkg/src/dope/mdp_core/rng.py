import zlib
from typing import Optional, Tuple, Union

import numpy as np

Label = Union[str, int]


def _label_key(label: Label) -> int:
    # crc32 is stable across processes, unlike hash()
    return zlib.crc32(str(label).encode("utf-8"))


class RngStream:
    """Seeded random stream. Child streams are derived by label, never by draw order.

    A stream is owned by one caller at a time; hand each worker its own `derive(...)`.

    .. parameter:: 64-bit seed
    """

    def __init__(self, seed: int, _key: Tuple[int, ...] = ()):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._key = tuple(_key)
        sequence = np.random.SeedSequence(self.seed, spawn_key=self._key)
        self.generator = np.random.Generator(np.random.PCG64(sequence))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, key={self._key})"

    def derive(self, *labels: Label) -> "RngStream":
        """New independent stream identified by (seed, parent labels, labels)."""
        return RngStream(self.seed, self._key + tuple(_label_key(k) for k in labels))

    def normal(self, loc=0.0, scale=1.0, size=None) -> np.ndarray:
        return self.generator.normal(loc, scale, size)

    def uniform(self, low=0.0, high=1.0, size=None) -> np.ndarray:
        return self.generator.uniform(low, high, size)

    def random(self, size=None) -> np.ndarray:
        return self.generator.random(size)

    def integers(self, low, high=None, size=None) -> np.ndarray:
        return self.generator.integers(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)

    def choice(self, a, size=None, replace=True, p=None) -> np.ndarray:
        return self.generator.choice(a, size=size, replace=replace, p=p)

    def categorical(self, probs: np.ndarray, size: Optional[int] = None) -> np.ndarray:
        """Draw one index per row of `probs` (shape (n, K)), or `size` draws from a single row."""
        probs = np.asarray(probs, dtype=float)
        if probs.ndim == 1:
            n = 1 if size is None else size
            probs = np.broadcast_to(probs, (n, probs.shape[0]))
        cdf = np.cumsum(probs, axis=1)
        u = self.generator.random(probs.shape[0]) * cdf[:, -1]
        idx = (cdf <= u[:, None]).sum(axis=1)
        return np.minimum(idx, probs.shape[1] - 1)
