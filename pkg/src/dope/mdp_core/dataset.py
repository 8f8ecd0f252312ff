import csv
import json
import logging
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from ..errors import InvalidArgumentError, ValidationError
from .rng import RngStream
from .types import DatasetMeta, OfflineDataset

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "{:.17g}"


def split_dataset(dataset: OfflineDataset, k: int, rng: RngStream) -> List[OfflineDataset]:
    """Randomly and evenly split a dataset into k disjoint subsets (sizes differ by at most 1)."""
    n = len(dataset)
    if k <= 0 or k > n:
        raise InvalidArgumentError(f"Cannot split {n} tuples into k={k} subsets")
    permutation = rng.permutation(n)
    return [dataset.subset(np.sort(part)) for part in np.array_split(permutation, k)]


def split_by_step(dataset: OfflineDataset, horizon: int) -> List[OfflineDataset]:
    """Stratified split: subset h-1 holds exactly the tuples recorded at step h."""
    if not dataset.has_steps:
        raise InvalidArgumentError("Stratified split needs step labels; use split_dataset instead")
    steps = dataset.step
    subsets = []
    for h in range(1, horizon + 1):
        positions = np.flatnonzero(steps == h)
        if positions.size == 0:
            raise InvalidArgumentError(f"No tuples recorded at step h={h}")
        subsets.append(dataset.subset(positions))
    return subsets


SPLIT_MODES = ("stratified", "random")


def step_subsets(dataset: OfflineDataset, horizon: int, split: str, rng: RngStream) -> List[OfflineDataset]:
    """Per-step subsets D_1..D_H, by recorded step ('stratified') or a random even split."""
    if split == "stratified":
        return split_by_step(dataset, horizon)
    if split == "random":
        return split_dataset(dataset, horizon, rng.derive("split"))
    raise InvalidArgumentError(f"split must be one of {SPLIT_MODES}, got '{split}'")


def csv_header(meta: DatasetMeta) -> List[str]:
    return (
        ["step"]
        + [f"x_{i}" for i in range(meta.obs_dim)]
        + ["a"]
        + [f"r_{i}" for i in range(meta.reward_dim)]
        + [f"xp_{i}" for i in range(meta.obs_dim)]
    )


def manifest_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".manifest.json")


def write_dataset_csv(
    dataset: OfflineDataset,
    path: Union[str, Path],
    extra_manifest: Optional[dict] = None,
) -> Path:
    """Write the dataset as CSV (17 significant digits) plus a JSON manifest next to it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    steps = dataset.step
    x, a, r, x_next = dataset.x, dataset.a, dataset.r, dataset.x_next

    def fmt(values: np.ndarray) -> List[str]:
        return [FLOAT_FORMAT.format(v) for v in values]

    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(csv_header(dataset.meta))
        for i in range(len(dataset)):
            writer.writerow(
                ["" if steps is None else str(int(steps[i]))]
                + fmt(x[i])
                + [str(int(a[i]))]
                + fmt(r[i])
                + fmt(x_next[i])
            )

    manifest = {"meta": dataset.meta.to_dict(), "rows": len(dataset)}
    manifest.update(extra_manifest or {})
    manifest_path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True))
    logger.info("Wrote %d tuples to %s", len(dataset), path)
    return path


def read_dataset_csv(path: Union[str, Path], meta: Optional[DatasetMeta] = None) -> OfflineDataset:
    """Read a dataset CSV. The meta data comes from `meta` or from the manifest next to the file."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Dataset file not found: {path}")
    if meta is None:
        mpath = manifest_path(path)
        if not mpath.exists():
            raise FileNotFoundError(f"Dataset manifest not found: {mpath}")
        meta = DatasetMeta(**json.loads(mpath.read_text())["meta"])

    with open(path, "r", newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header != csv_header(meta):
            raise ValidationError(f"Unexpected CSV header in {path}")
        rows = list(reader)

    D, d = meta.obs_dim, meta.reward_dim
    steps = [row[0] for row in rows]
    body = np.array([row[1:] for row in rows], dtype=float)
    step = None if any(s == "" for s in steps) else np.array(steps, dtype=np.int64)
    return OfflineDataset.from_arrays(
        x=body[:, :D],
        a=body[:, D].astype(np.int64),
        r=body[:, D + 1 : D + 1 + d],
        x_next=body[:, D + 1 + d :],
        meta=meta,
        step=step,
    )
