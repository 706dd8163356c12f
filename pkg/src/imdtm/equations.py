"""PDE plugins: recurrences, analytic solutions and initial towers.

All recurrence helpers work on raw coefficient arrays whose two trailing
axes are (k, h); any leading axes are grid points, so a whole grid is
advanced one layer at a time with a handful of numpy operations.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import TruncationError
from .series import Series2, s2_add, s2_div, s2_sin_cos

__all__ = [
    "PdeSystem",
    "WaveSystem",
    "MKdVSystem",
    "MKdVCache",
    "wave_recurrence",
    "mkdv_recurrence",
    "wave_analytic",
    "mkdv_analytic",
    "cosine_taylor",
    "initial_towers",
    "make_system",
]


def _table(series) -> np.ndarray:
    return series.coeffs if isinstance(series, Series2) else np.asarray(series)


def _need(table: np.ndarray, k: int, h: int, what: str):
    if k < 0 or k >= table.shape[-2] or h >= table.shape[-1]:
        raise TruncationError(f"{what} needs F({k}, {h}) beyond table {table.shape[-2:]}")


def _conv_rows(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    """out[..., h] = sum_{i<=h} a[..., i] b[..., h-i] for h < n."""
    out = np.zeros(a.shape[:-1] + (n,))
    for i in range(n):
        out[..., i:] += a[..., i : i + 1] * b[..., : n - i]
    return out


def cosine_taylor(kappa: float, x, n: int) -> np.ndarray:
    """DTM coefficients of cos(kappa * (x + y)) in y up to order n - 1.

    Returns shape ``x.shape + (n,)``.
    """
    x = np.asarray(x, dtype=float)
    h = np.arange(n)
    fact = np.array([math.factorial(i) for i in range(n)], dtype=float)
    return kappa**h * np.cos(kappa * x[..., None] + h * (np.pi / 2)) / fact


# -- wave ------------------------------------------------------------------


def wave_recurrence(series, k: int, h: int):
    """F(k,h) = (h+2)(h+1)/(k(k-1)) F(k-2,h+2)."""
    if k < 2:
        raise ValueError("layers k = 0, 1 are stored data, not recurrence output")
    f = _table(series)
    _need(f, k - 2, h + 2, "wave recurrence")
    return (h + 2) * (h + 1) / (k * (k - 1)) * f[..., k - 2, h + 2]


def wave_analytic(x, t, length: float = 18.0):
    kappa = 2 * np.pi / length
    return np.cos(kappa * np.asarray(x)) * np.cos(kappa * np.asarray(t))


# -- modified KdV ----------------------------------------------------------


class MKdVCache:
    """Memoized H = f^2 and G = f^2 f_x tables for one extended series.

    Rows are filled lazily up to the widest column requested so far.
    """

    def __init__(self, shape):
        self.H = np.zeros(shape)
        self.G = np.zeros(shape)
        self._h_cols: dict[int, int] = {}
        self._g_cols: dict[int, int] = {}

    def h_row(self, f: np.ndarray, k: int, ncols: int) -> np.ndarray:
        if self._h_cols.get(k, 0) < ncols:
            acc = np.zeros(f.shape[:-2] + (ncols,))
            for m in range(k + 1):
                acc += _conv_rows(f[..., k - m, :ncols], f[..., m, :ncols], ncols)
            self.H[..., k, :ncols] = acc
            self._h_cols[k] = ncols
        return self.H[..., k, :ncols]

    def g_row(self, f: np.ndarray, k: int, ncols: int) -> np.ndarray:
        if self._g_cols.get(k, 0) < ncols:
            scale = np.arange(1, ncols + 1, dtype=float)
            acc = np.zeros(f.shape[:-2] + (ncols,))
            for m in range(k + 1):
                hrow = self.h_row(f, k - m, ncols)
                dx_row = scale * f[..., m, 1 : ncols + 1]
                acc += _conv_rows(hrow, dx_row, ncols)
            self.G[..., k, :ncols] = acc
            self._g_cols[k] = ncols
        return self.G[..., k, :ncols]


def mkdv_recurrence(series, caches: MKdVCache, k: int, h: int):
    """F(k,h) = -(G(k-1,h) + (h+3)(h+2)(h+1) F(k-1,h+3)) / k."""
    if k < 1:
        raise ValueError("layer k = 0 is stored data, not recurrence output")
    f = _table(series)
    _need(f, k - 1, h + 3, "mKdV recurrence")
    g = caches.g_row(f, k - 1, h + 1)[..., h]
    return -(g + (h + 3) * (h + 2) * (h + 1) * f[..., k - 1, h + 3]) / k


def mkdv_analytic(x, t, a: float):
    phase = 2 * a * np.asarray(x) - 8 * a**3 * np.asarray(t)
    r2 = math.sqrt(2.0)
    return -2 * r2 * a + 6 * r2 * a / (2 + np.cos(phase))


# -- plugin classes ----------------------------------------------------------


class PdeSystem:
    """Interface every equation plugin implements.

    ``reads(k, h)`` lists, per earlier layer, the highest spatial order the
    recurrence for F(k, h) touches.  Availability is monotone in h, so this
    is enough to compute the dependency frontier mechanically.
    """

    name: str
    temporal_order: int
    spatial_consumption: int

    def reads(self, k: int, h: int) -> list[tuple[int, int]]:
        raise NotImplementedError

    def analytic(self, x, t):
        raise NotImplementedError

    def initial_towers(self, x, n_orders: int) -> np.ndarray:
        """Stored coefficients F(0..T-1, 0..n_orders-1), shape x.shape + (T, n)."""
        raise NotImplementedError

    def new_cache(self, shape):
        return None

    def fill_layer(self, f: np.ndarray, k: int, ncols: int, cache) -> None:
        """Write F(k, 0..ncols-1) in place from lower layers."""
        raise NotImplementedError

    def rhs(self, u: np.ndarray, deriv) -> np.ndarray:
        """Method-of-lines right-hand side; ``deriv(u, d)`` is d/dx^d."""
        raise NotImplementedError


class WaveSystem(PdeSystem):
    name = "wave"
    temporal_order = 2
    spatial_consumption = 2

    def __init__(self, length: float = 18.0):
        self.length = float(length)
        self.kappa = 2 * math.pi / self.length

    def reads(self, k, h):
        return [(k - 2, h + 2)]

    def analytic(self, x, t):
        return wave_analytic(x, t, self.length)

    def analytic_rate(self, x, t):
        return -self.kappa * np.cos(self.kappa * np.asarray(x)) * np.sin(self.kappa * np.asarray(t))

    def initial_towers(self, x, n_orders):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape + (2, n_orders))
        out[..., 0, :] = cosine_taylor(self.kappa, x, n_orders)
        return out

    def fill_layer(self, f, k, ncols, cache):
        h = np.arange(ncols)
        f[..., k, :ncols] = ((h + 2) * (h + 1) / (k * (k - 1))) * f[..., k - 2, 2 : ncols + 2]

    def rhs(self, u, deriv):
        # u[0] = f, u[1] = f_t
        return np.stack([u[1], deriv(u[0], 2)])


class MKdVSystem(PdeSystem):
    name = "mkdv"
    temporal_order = 1
    spatial_consumption = 3

    def __init__(self, length: float = 43.875, a: float | None = None):
        self.length = float(length)
        self.a = math.pi / self.length if a is None else float(a)

    def reads(self, k, h):
        # F(k-1, h+3) directly; G(k-1, h) convolves F(m, <= h+1) for m < k
        return [(k - 1, h + 3)] + [(m, h + 1) for m in range(k - 1)]

    def analytic(self, x, t):
        return mkdv_analytic(x, t, self.a)

    def initial_towers(self, x, n_orders):
        """Series of -2 sqrt2 a + 6 sqrt2 a / (2 + cos(2a(x+y))) in y."""
        a = self.a
        r2 = math.sqrt(2.0)
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape + (1, n_orders))
        h_max = n_orders - 1
        for idx in np.ndindex(x.shape):
            phase = Series2.from_x(_phase_row(2 * a, x[idx], h_max))
            _, cos_s = s2_sin_cos(phase)
            denom = s2_add(Series2.constant(2.0, 0, h_max), cos_s)
            frac = s2_div(Series2.constant(6 * r2 * a, 0, h_max), denom)
            out[idx + (0,)] = s2_add(frac, Series2.constant(-2 * r2 * a, 0, h_max)).coeffs[0]
        return out

    def new_cache(self, shape):
        return MKdVCache(shape)

    def fill_layer(self, f, k, ncols, cache):
        g = cache.g_row(f, k - 1, ncols)
        h = np.arange(ncols)
        f[..., k, :ncols] = -(g + ((h + 3) * (h + 2) * (h + 1)) * f[..., k - 1, 3 : ncols + 3]) / k

    def rhs(self, u, deriv):
        return -(u**2) * deriv(u, 1) - deriv(u, 3)


def _phase_row(slope: float, x0: float, h_max: int) -> np.ndarray:
    row = np.zeros(h_max + 1)
    row[0] = slope * x0
    if h_max >= 1:
        row[1] = slope
    return row


def initial_towers(system: PdeSystem, x, n_orders: int) -> np.ndarray:
    if n_orders < 1:
        raise ValueError("at least one spatial order must be stored")
    return system.initial_towers(x, n_orders)


def make_system(name: str, length: float, a: float | None = None) -> PdeSystem:
    if name == "wave":
        return WaveSystem(length)
    if name == "mkdv":
        return MKdVSystem(length, a)
    raise ValueError(f"unknown equation {name!r}")
