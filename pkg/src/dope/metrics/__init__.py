from .bellman import BellmanApplication, apply_bellman
from .checks import CheckResult, check_contraction, check_cvar_lipschitz, check_tv_dominance
from .distances import (
    DiscreteLaw,
    HistogramSpec,
    as_distribution,
    discrete_tv,
    discrete_wasserstein_p,
    empirical_measure_tv,
    empirical_tv,
    exact_wasserstein_p,
    mixture_tv,
    wasserstein1_1d,
)
from .functionals import CvarQuery, cvar, discrete_cvar

__all__ = [
    "BellmanApplication",
    "CheckResult",
    "CvarQuery",
    "DiscreteLaw",
    "HistogramSpec",
    "apply_bellman",
    "as_distribution",
    "check_contraction",
    "check_cvar_lipschitz",
    "check_tv_dominance",
    "cvar",
    "discrete_cvar",
    "discrete_tv",
    "discrete_wasserstein_p",
    "empirical_measure_tv",
    "empirical_tv",
    "exact_wasserstein_p",
    "mixture_tv",
    "wasserstein1_1d",
]
