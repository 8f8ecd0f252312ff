from .base import (
    LOG_DENSITY_FLOOR,
    ConditionalDensityModel,
    FitReport,
    KeyGroups,
    OptimizerConfig,
    default_bounds,
    floor_rows,
    monotone_ascent,
)
from .categorical import AtomGrid, CategoricalGrid, categorical_project, fit_categorical
from .features import CombinationLockCells, ConstantCells, FeatureMap, FeatureMaps, OneHotStateCells
from .gaussian import FixedVarianceGaussian
from .gmm import ConditionalGmm, kmeans_pp_centers
from .mixture import TabularMixtureModel
from .point_mass import PointMassModel
from .registry import (
    ModelRegistry,
    ModelSpec,
    load_model,
    model_fit,
    model_from_dict,
    model_log_density,
    model_sample,
    save_model,
)

__all__ = [
    "LOG_DENSITY_FLOOR",
    "AtomGrid",
    "CategoricalGrid",
    "CombinationLockCells",
    "ConditionalDensityModel",
    "ConditionalGmm",
    "ConstantCells",
    "FeatureMap",
    "FeatureMaps",
    "FitReport",
    "FixedVarianceGaussian",
    "KeyGroups",
    "ModelRegistry",
    "ModelSpec",
    "OneHotStateCells",
    "OptimizerConfig",
    "PointMassModel",
    "TabularMixtureModel",
    "categorical_project",
    "default_bounds",
    "fit_categorical",
    "floor_rows",
    "kmeans_pp_centers",
    "load_model",
    "model_fit",
    "model_from_dict",
    "model_log_density",
    "model_sample",
    "monotone_ascent",
    "save_model",
]
