"""Reference scheme: classical RK4 in time with central finite differences
in space on a periodic grid (method of lines)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .equations import PdeSystem, WaveSystem
from .errors import ConfigError
from .evolver import mean_log_relative_error
from .stencil import NeighborhoodGeometry, birkhoff_weights_oracle

__all__ = ["MolState", "fd_weights", "fd_spatial_deriv", "rk4_update", "rk4_step", "stencil_radius", "mol_analytic_error"]


def stencil_radius(order: int, accuracy: int) -> int:
    """Half-width of the narrowest central stencil of the given accuracy.

    A symmetric stencil of 2r+1 points reaches accuracy 2r + 1 - d, rounded
    up to the next even number.
    """
    if order < 1 or accuracy < 2 or accuracy % 2:
        raise ConfigError(f"unsupported derivative order {order} / accuracy {accuracy}")
    return (order + 1) // 2 - 1 + accuracy // 2


@lru_cache(maxsize=64)
def fd_weights(order: int, accuracy: int, dx: float) -> np.ndarray:
    """Central-difference weights for d^order/dx^order, offsets -r..r."""
    r = stencil_radius(order, accuracy)
    ws = birkhoff_weights_oracle(NeighborhoodGeometry.uniform(r, dx), [0], [order])
    w = ws.for_target(order)[:, 0] * math.factorial(order)
    w.setflags(write=False)
    return w


def fd_spatial_deriv(u, order: int, accuracy: int, dx: float) -> np.ndarray:
    """Periodic derivative along the last axis of ``u``."""
    u = np.asarray(u, dtype=float)
    w = fd_weights(order, accuracy, float(dx))
    r = (len(w) - 1) // 2
    if u.shape[-1] <= 2 * r:
        raise ConfigError(f"stencil of {2 * r + 1} points does not fit on {u.shape[-1]} grid points", key="N")
    out = np.zeros_like(u)
    for j, wj in enumerate(w):
        if wj != 0.0:
            out += wj * np.roll(u, -(j - r), axis=-1)
    return out


@dataclass
class MolState:
    """Grid values; for the wave equation ``u`` holds (f, f_t) rows."""

    u: np.ndarray
    length: float
    t: float = 0.0

    @property
    def N(self) -> int:
        return self.u.shape[-1]

    @property
    def dx(self) -> float:
        return self.length / self.N

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.N) * self.dx

    @property
    def values(self) -> np.ndarray:
        return self.u[0] if self.u.ndim == 2 else self.u

    @classmethod
    def from_system(cls, system: PdeSystem, n_points: int, length: float) -> "MolState":
        x = np.arange(n_points) * (length / n_points)
        if isinstance(system, WaveSystem):
            u = np.stack([system.analytic(x, 0.0), system.analytic_rate(x, 0.0)])
        else:
            u = np.asarray(system.analytic(x, 0.0), dtype=float)
        return cls(u, length)


def rk4_update(y, f, dt: float):
    """One classical Runge-Kutta step of y' = f(y)."""
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4_step(state: MolState, system: PdeSystem, dt: float, accuracy: int = 8) -> MolState:
    dx = state.dx

    def deriv(v, d):
        return fd_spatial_deriv(v, d, accuracy, dx)

    u = rk4_update(state.u, lambda v: system.rhs(v, deriv), dt)
    return MolState(u, state.length, state.t + dt)


def mol_analytic_error(state: MolState, system: PdeSystem, t: float | None = None) -> float:
    t = state.t if t is None else t
    return mean_log_relative_error(state.values, system.analytic(state.x, t))
