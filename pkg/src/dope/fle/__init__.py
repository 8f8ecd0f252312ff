from .algorithms import FleFiniteConfig, FleInfiniteConfig, default_iterations, fle_finite, fle_infinite
from .artifacts import RunArtifacts, config_hash, load_run_models, read_run_manifest, update_run_manifest
from .estimator import ReturnEstimator, estimator_sample
from .targets import RegressionTargetSet, build_targets_discounted, build_targets_finite

__all__ = [
    "FleFiniteConfig",
    "FleInfiniteConfig",
    "RegressionTargetSet",
    "ReturnEstimator",
    "RunArtifacts",
    "build_targets_discounted",
    "build_targets_finite",
    "config_hash",
    "default_iterations",
    "estimator_sample",
    "fle_finite",
    "fle_infinite",
    "load_run_models",
    "read_run_manifest",
    "update_run_manifest",
]
