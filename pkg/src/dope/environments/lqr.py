# Linear-quadratic system with Gaussian reward noise; the return Z_h(x, a) is Gaussian in closed form

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
import scipy.linalg as linalg

from ..errors import InvalidArgumentError, ValidationError
from ..mdp_core.rng import RngStream
from ..mdp_core.types import EmpiricalDistribution


@dataclass(frozen=True, eq=False)
class LqrSystem:
    """LQR system x_{h+1} = A x_h + B a_h, r_h = -(xᵀQx + aᵀRa) + ε, ε ~ N(0, σ²), a = Kx

    .. parameter:: State matrix A (d_x, d_x)
    .. parameter:: Input matrix B (d_x, d_a)
    .. parameter:: State cost Q (d_x, d_x), symmetric
    .. parameter:: Input cost R (d_a, d_a), symmetric
    .. parameter:: Policy gain K (d_a, d_x)
    .. parameter:: Reward noise std σ
    .. parameter:: Horizon H
    """

    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    K: np.ndarray
    sigma: float
    horizon: int

    def __post_init__(self):
        for name in ("A", "B", "Q", "R", "K"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=float)))
        dx, da = self.B.shape
        shapes = {"A": (dx, dx), "Q": (dx, dx), "R": (da, da), "K": (da, dx)}
        for name, shape in shapes.items():
            if getattr(self, name).shape != shape:
                raise ValidationError(f"{name} must have shape {shape}, got {getattr(self, name).shape}")
        if not np.allclose(self.Q, self.Q.T) or not np.allclose(self.R, self.R.T):
            raise ValidationError("Q and R must be symmetric")
        if self.sigma < 0:
            raise ValidationError(f"sigma must be >= 0, got {self.sigma}")
        if self.horizon < 1:
            raise ValidationError(f"horizon must be >= 1, got {self.horizon}")

    @property
    def state_dim(self) -> int:
        return self.A.shape[0]

    @property
    def action_dim(self) -> int:
        return self.B.shape[1]

    def closed_loop(self) -> np.ndarray:
        return self.A + self.B @ self.K

    def cost_to_go(self) -> List[np.ndarray]:
        """U_1 .. U_{H+1} with U_{H+1} = 0 and U_h = Q + KᵀRK + (A+BK)ᵀ U_{h+1} (A+BK)."""
        M = self.closed_loop()
        stage = self.Q + self.K.T @ self.R @ self.K
        U = [np.zeros_like(self.A)]
        for _ in range(self.horizon):
            U.append(stage + M.T @ U[-1] @ M)
        return U[::-1]

    def _check(self, x: np.ndarray, a: np.ndarray, h: int) -> Tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float).reshape(-1)
        a = np.asarray(a, dtype=float).reshape(-1)
        if x.shape != (self.state_dim,) or a.shape != (self.action_dim,):
            raise InvalidArgumentError(
                f"Expected x of dim {self.state_dim} and a of dim {self.action_dim}, got {x.shape} and {a.shape}"
            )
        if not 1 <= h <= self.horizon:
            raise InvalidArgumentError(f"step must lie in [1, {self.horizon}], got {h}")
        return x, a


def dlqr_gain(A: np.ndarray, B: np.ndarray, Q: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Infinite-horizon optimal gain K (a = Kx) from the discrete algebraic Riccati equation."""
    A, B, Q, R = (np.atleast_2d(np.asarray(m, dtype=float)) for m in (A, B, Q, R))
    S = linalg.solve_discrete_are(A, B, Q, R)
    return -linalg.solve(B.T @ S @ B + R, B.T @ S @ A)


def lqr_return_params(system: LqrSystem, x: np.ndarray, a: np.ndarray, h: int) -> Tuple[float, float]:
    """Mean and variance of the Gaussian return Z_h(x, a)."""
    x, a = system._check(x, a, h)
    U = system.cost_to_go()
    y = system.A @ x + system.B @ a
    mean = -(y @ U[h] @ y) - x @ system.Q @ x - a @ system.R @ a
    variance = (system.horizon - h + 1) * system.sigma**2
    return float(mean), float(variance)


def lqr_rollout_returns(system: LqrSystem, x: np.ndarray, a: np.ndarray, h: int, m: int, rng: RngStream) -> EmpiricalDistribution:
    """m Monte-Carlo returns from (x, a) at step h under the linear policy a = Kx."""
    x, a = system._check(x, a, h)
    if m < 1:
        raise InvalidArgumentError(f"m must be >= 1, got {m}")
    xs = np.broadcast_to(x, (m, system.state_dim)).copy()
    acts = np.broadcast_to(a, (m, system.action_dim)).copy()
    z = np.zeros(m)
    for t in range(h, system.horizon + 1):
        if t > h:
            acts = xs @ system.K.T
        cost = np.einsum("ni,ij,nj->n", xs, system.Q, xs) + np.einsum("ni,ij,nj->n", acts, system.R, acts)
        z += -cost + rng.derive("noise", t).normal(0.0, system.sigma, size=m)
        xs = xs @ system.A.T + acts @ system.B.T
    return EmpiricalDistribution(z)
