# Run artifact directory: per-step model JSON, optional target dumps and a run manifest

import hashlib
import json
import logging
from pathlib import Path
from typing import Dict, Optional, Union

from ..density_models.base import ConditionalDensityModel
from ..density_models.registry import load_model, save_model
from ..errors import MissingModelsError
from .targets import RegressionTargetSet

logger = logging.getLogger(__name__)

MANIFEST_FILE = "run_manifest.json"


def model_file(step: int) -> str:
    return f"model_h{step:03d}.json"


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode("utf-8")).hexdigest()


class RunArtifacts:
    """Writer for one run directory; every method is a no-op without a directory."""

    def __init__(self, directory: Optional[Union[str, Path]] = None, dump_targets: bool = False):
        self.directory = None if directory is None else Path(directory)
        self.dump_targets = dump_targets
        self.models: Dict[int, str] = {}
        if self.directory is not None:
            self.directory.mkdir(parents=True, exist_ok=True)

    @property
    def enabled(self) -> bool:
        return self.directory is not None

    def save_model(self, step: int, model: ConditionalDensityModel):
        if not self.enabled:
            return
        save_model(model, self.directory / model_file(step))
        self.models[step] = model_file(step)

    def save_targets(self, step: int, targets: RegressionTargetSet):
        if self.enabled and self.dump_targets:
            targets.to_csv(self.directory / f"targets_{step}.csv")

    def write_manifest(self, content: dict) -> Optional[Path]:
        if not self.enabled:
            return None
        content = {**content, "models": {str(k): v for k, v in sorted(self.models.items())}}
        path = self.directory / MANIFEST_FILE
        with open(path, "w") as f:
            json.dump(content, f, indent=2, sort_keys=True)
        logger.info("Wrote run manifest %s", path)
        return path


def read_run_manifest(directory: Union[str, Path]) -> dict:
    path = Path(directory) / MANIFEST_FILE
    if not path.is_file():
        raise FileNotFoundError(f"Run manifest not found: {path}")
    with open(path, "r") as f:
        return json.load(f)


def load_run_models(directory: Union[str, Path], steps: Optional[list] = None) -> Dict[int, ConditionalDensityModel]:
    """Models of a run directory by step; missing requested steps are reported together."""
    directory = Path(directory)
    listed = {int(k): v for k, v in read_run_manifest(directory).get("models", {}).items()}
    wanted = sorted(listed) if steps is None else list(steps)
    missing = [h for h in wanted if h not in listed or not (directory / listed[h]).is_file()]
    if missing:
        raise MissingModelsError(f"Run '{directory}' has no models for steps {missing}")
    return {h: load_model(directory / listed[h]) for h in wanted}


def update_run_manifest(directory: Union[str, Path], extra: dict) -> Path:
    """Merge `extra` into an existing run manifest."""
    content = read_run_manifest(directory)
    content.update(extra)
    path = Path(directory) / MANIFEST_FILE
    with open(path, "w") as f:
        json.dump(content, f, indent=2, sort_keys=True)
    return path
