# Executable forms of the contraction, TV-dominance and CVaR-Lipschitz inequalities

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

from ..density_models.base import ConditionalDensityModel
from ..environments.tabular import TabularMDP, discounted_occupancy
from ..errors import InvalidArgumentError
from ..mdp_core.policy import Policy
from ..mdp_core.rng import RngStream
from .distances import DiscreteLaw, Samples, discrete_tv, discrete_wasserstein_p, exact_wasserstein_p
from .functionals import discrete_cvar

logger = logging.getLogger(__name__)

ABS_SLACK = 1e-9


@dataclass(frozen=True)
class CheckResult:
    name: str
    lhs: float
    rhs: float
    passed: bool

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    def to_row(self) -> dict:
        return {"check": self.name, "lhs": self.lhs, "rhs": self.rhs, "margin": self.margin, "pass": self.passed}


def _law(value: Union[DiscreteLaw, Samples]) -> DiscreteLaw:
    return value if isinstance(value, DiscreteLaw) else DiscreteLaw.from_samples(value)


def check_contraction(
    mdp: TabularMDP,
    policy: Policy,
    f: ConditionalDensityModel,
    f_prime: ConditionalDensityModel,
    p: float,
    m: int,
    rng: RngStream,
    tol: float = 0.1,
) -> CheckResult:
    """(E_{d^π} W_p^{2p}(T f, T f'))^{1/(2p)} <= γ^{1-1/(2p)} (E_{d^π} W_p^{2p}(f, f'))^{1/(2p)}.

    Both Bellman images at a pair share the reward, next-state and next-action draws.
    """
    if mdp.gamma is None:
        raise InvalidArgumentError("The contraction check needs a discounted MDP")
    if m > 256:
        raise InvalidArgumentError("The contraction check uses exact assignment and is limited to m <= 256")
    occupancy = discounted_occupancy(mdp, policy)
    S, A = mdp.n_states, mdp.n_actions
    image_gap = np.zeros((S, A))
    base_gap = np.zeros((S, A))
    for s in range(S):
        x = mdp.one_hot(np.full(m, s))
        for a in range(A):
            acts = np.full(m, a)
            pair = rng.derive("pair", s, a)
            r, x_next = mdp.step(x, acts, 1, pair.derive("env"))
            a_next = policy.sample(x_next, pair.derive("action"))
            y = f.sample(x_next, a_next, pair.derive("next"))
            y_prime = f_prime.sample(x_next, a_next, pair.derive("next"))
            image_gap[s, a] = exact_wasserstein_p(r + mdp.gamma * y, r + mdp.gamma * y_prime, p)
            z = f.sample(x, acts, pair.derive("base"))
            z_prime = f_prime.sample(x, acts, pair.derive("base"))
            base_gap[s, a] = exact_wasserstein_p(z, z_prime, p)

    q = 2.0 * p
    lhs = float((occupancy * image_gap**q).sum() ** (1.0 / q))
    rhs = float((occupancy * base_gap**q).sum() ** (1.0 / q))
    bound = mdp.gamma ** (1.0 - 1.0 / q) * rhs
    passed = lhs <= bound * (1.0 + tol) + ABS_SLACK
    if not passed:
        logger.info("Contraction check failed: lhs=%.6g, bound=%.6g (p=%g, gamma=%g)", lhs, bound, p, mdp.gamma)
    return CheckResult(f"contraction_p{p:g}_gamma{mdp.gamma:g}", lhs, bound, passed)


def check_tv_dominance(p_law: DiscreteLaw, q_law: DiscreteLaw, order: float, diam: float) -> CheckResult:
    """W_p^p <= diam^p · TV for laws supported on a set of diameter `diam`."""
    lhs = discrete_wasserstein_p(p_law, q_law, order) ** order
    rhs = diam**order * discrete_tv(p_law, q_law)
    return CheckResult(f"tv_dominance_p{order:g}", lhs, rhs, lhs <= rhs + ABS_SLACK)


def check_cvar_lipschitz(
    f_samples: Union[DiscreteLaw, Samples],
    g_samples: Union[DiscreteLaw, Samples],
    tau: float,
    h_max: float,
) -> CheckResult:
    """|CVaR_τ(f) - CVaR_τ(g)| <= (2 H_max / τ) · TV(f, g) for laws on [0, H_max]."""
    f_law, g_law = _law(f_samples), _law(g_samples)
    for law in (f_law, g_law):
        if law.dim != 1 or law.atoms.min() < -ABS_SLACK or law.atoms.max() > h_max + ABS_SLACK:
            raise InvalidArgumentError(f"CVaR Lipschitz check needs scalar laws on [0, {h_max}]")
    lhs = abs(discrete_cvar(f_law, tau) - discrete_cvar(g_law, tau))
    rhs = 2.0 * h_max / tau * discrete_tv(f_law, g_law)
    return CheckResult(f"cvar_lipschitz_tau{tau:g}", lhs, rhs, lhs <= rhs + ABS_SLACK)
