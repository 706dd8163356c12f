"""Truncated bivariate (t, x) power series in differential-transform form.

A :class:`Series2` stores the scaled Taylor coefficients

    F(k, h) = 1/(k! h!) * d^k/dt^k d^h/dx^h f  at the expansion point,

for ``0 <= k <= k_max`` and ``0 <= h <= h_max``.  Coefficients past either
bound are *unknown*, not zero, so every operation returns a table that is
exact up to the bounds it can actually justify:

* binary operations truncate to the smaller of the two tables,
* ``s2_shift_deriv`` shrinks the table by the differentiation order,
* the nonlinear functions keep the bounds of their argument.

The nonlinear functions use the standard self-referential recurrences
obtained by transforming the defining ODE of each function.  The entry
``W(0, 0)`` is the function applied to the constant term; for every other
entry the recurrence differentiates along time when ``k > 0`` and along
space otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EmptyResultError, ShapeError, ZeroLeadingCoefficientError

__all__ = [
    "Series2",
    "s2_add",
    "s2_scale",
    "s2_shift_deriv",
    "s2_mul",
    "s2_div",
    "s2_sqrt",
    "s2_exp",
    "s2_ln",
    "s2_pow",
    "s2_sin_cos",
    "cauchy_entry",
]


@dataclass(frozen=True, eq=False)
class Series2:
    """Immutable (k_max+1) x (h_max+1) table of DTM coefficients."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim != 2 or 0 in c.shape:
            raise ShapeError(f"coefficient table must be a non-empty 2-D array, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def k_max(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def h_max(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def shape(self) -> tuple[int, int]:
        return self.coeffs.shape

    @classmethod
    def zeros(cls, k_max: int, h_max: int) -> "Series2":
        return cls(np.zeros((k_max + 1, h_max + 1)))

    @classmethod
    def constant(cls, value: float, k_max: int = 0, h_max: int = 0) -> "Series2":
        c = np.zeros((k_max + 1, h_max + 1))
        c[0, 0] = value
        return cls(c)

    @classmethod
    def from_x(cls, coeffs) -> "Series2":
        """Series depending on x only (a single temporal row)."""
        return cls(np.atleast_1d(np.asarray(coeffs, dtype=float))[None, :])

    def __getitem__(self, idx):
        return self.coeffs[idx]

    def __repr__(self):
        return f"Series2(k_max={self.k_max}, h_max={self.h_max})"

    def allclose(self, other: "Series2", rtol=1e-12, atol=0.0) -> bool:
        return self.shape == other.shape and np.allclose(self.coeffs, other.coeffs, rtol=rtol, atol=atol)

    def evaluate(self, t: float, x: float) -> float:
        """Sum the truncated series at displacement (t, x)."""
        tp = t ** np.arange(self.k_max + 1)
        xp = x ** np.arange(self.h_max + 1)
        return float(tp @ self.coeffs @ xp)


def _common(a: Series2, b: Series2) -> tuple[np.ndarray, np.ndarray]:
    kk = min(a.k_max, b.k_max) + 1
    hh = min(a.h_max, b.h_max) + 1
    return a.coeffs[:kk, :hh], b.coeffs[:kk, :hh]


def s2_add(a: Series2, b: Series2) -> Series2:
    if a.shape != b.shape:
        raise ShapeError(f"cannot add tables of shape {a.shape} and {b.shape}")
    return Series2(a.coeffs + b.coeffs)


def s2_scale(a: Series2, c: float) -> Series2:
    return Series2(c * a.coeffs)


def s2_shift_deriv(a: Series2, r_t: int, r_x: int) -> Series2:
    """Coefficients of d^r_t/dt^r_t d^r_x/dx^r_x of the series."""
    if r_t < 0 or r_x < 0:
        raise ValueError("derivative orders must be non-negative")
    kk = a.k_max + 1 - r_t
    hh = a.h_max + 1 - r_x
    if kk <= 0 or hh <= 0:
        raise EmptyResultError(
            f"derivative order ({r_t}, {r_x}) exhausts table bounds ({a.k_max}, {a.h_max})"
        )
    k = np.arange(kk)
    h = np.arange(hh)
    fk = np.array([math.perm(int(i) + r_t, r_t) for i in k], dtype=float)
    fh = np.array([math.perm(int(i) + r_x, r_x) for i in h], dtype=float)
    return Series2(fk[:, None] * fh[None, :] * a.coeffs[r_t:, r_x:])


def cauchy_entry(y: np.ndarray, z: np.ndarray, k: int, h: int) -> float:
    """Single entry of the 2-D Cauchy product: sum_l Y(l) Z((k,h) - l)."""
    return float(np.sum(y[: k + 1, : h + 1] * z[k::-1, h::-1]))


def s2_mul(a: Series2, b: Series2) -> Series2:
    y, z = _common(a, b)
    kk, hh = y.shape
    out = np.zeros((kk, hh))
    for m in range(kk):
        for n in range(hh):
            # rows m of y times rows k-m of z, all spatial shifts at once
            out[m:, n:] += y[m, n] * z[: kk - m, : hh - n]
    return Series2(out)


def _axis_sum(w: np.ndarray, y: np.ndarray, k: int, h: int, *, skip_origin=False) -> float:
    """sum_l (k_a - l_a) W(l) Y(k - l) with a = t if k > 0 else x.

    The weight vanishes for l_a = k_a, so W(k, h) itself never enters.
    With ``skip_origin`` the l = 0 term is dropped.
    """
    wl = w[: k + 1, : h + 1]
    yr = y[k::-1, h::-1]
    if k > 0:
        fac = (k - np.arange(k + 1, dtype=float))[:, None]
    else:
        fac = (h - np.arange(h + 1, dtype=float))[None, :]
    terms = fac * wl * yr
    if skip_origin:
        terms[0, 0] = 0.0
    return float(np.sum(terms))


def _axis_index(k: int, h: int) -> int:
    return k if k > 0 else h


def _entries(shape):
    kk, hh = shape
    for k in range(kk):
        for h in range(hh):
            if k or h:
                yield k, h


def _check_finite(out: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(out)):
        raise DomainError(f"{what}: non-finite coefficient produced")
    return out


def s2_div(a: Series2, b: Series2) -> Series2:
    y, z = _common(a, b)
    z0 = z[0, 0]
    if z0 == 0.0:
        raise ZeroLeadingCoefficientError("divisor has zero constant term")
    w = np.zeros_like(y)
    w[0, 0] = y[0, 0] / z0
    for k, h in _entries(w.shape):
        acc = cauchy_entry(z, w, k, h)  # w[k,h] still 0 here
        w[k, h] = (y[k, h] - acc) / z0
    return Series2(_check_finite(w, "s2_div"))


def s2_sqrt(a: Series2) -> Series2:
    y = a.coeffs
    if not y[0, 0] > 0.0:
        raise DomainError(f"sqrt needs a positive constant term, got {y[0, 0]!r}")
    w = np.zeros_like(y)
    w0 = math.sqrt(y[0, 0])
    w[0, 0] = w0
    for k, h in _entries(w.shape):
        # terms l = 0 and l = (k,h) are both W(0)W(k); w[k,h] is still 0
        acc = cauchy_entry(w, w, k, h)
        w[k, h] = (y[k, h] - acc) / (2.0 * w0)
    return Series2(_check_finite(w, "s2_sqrt"))


def s2_exp(a: Series2) -> Series2:
    y = a.coeffs
    w = np.zeros_like(y)
    w[0, 0] = math.exp(y[0, 0])
    for k, h in _entries(w.shape):
        w[k, h] = _axis_sum(w, y, k, h) / _axis_index(k, h)
    return Series2(_check_finite(w, "s2_exp"))


def s2_ln(a: Series2) -> Series2:
    y = a.coeffs
    y0 = y[0, 0]
    if not y0 > 0.0:
        raise DomainError(f"ln needs a positive constant term, got {y0!r}")
    w = np.zeros_like(y)
    w[0, 0] = math.log(y0)
    for k, h in _entries(w.shape):
        acc = _axis_sum(y, w, k, h, skip_origin=True)
        w[k, h] = (y[k, h] - acc / _axis_index(k, h)) / y0
    return Series2(_check_finite(w, "s2_ln"))


def s2_pow(a: Series2, s: float) -> Series2:
    """Real power y**s on the principal real branch.

    Built from y * w' = s * w * y'.  A zero constant term is rejected even for
    integer ``s``; use :func:`s2_mul` for integer powers of such series.
    """
    y = a.coeffs
    y0 = y[0, 0]
    if not y0 > 0.0:
        raise DomainError(f"pow needs a positive constant term, got {y0!r}")
    w = np.zeros_like(y)
    w[0, 0] = y0**s
    for k, h in _entries(w.shape):
        ka = _axis_index(k, h)
        acc = s * _axis_sum(w, y, k, h) - _axis_sum(y, w, k, h, skip_origin=True)
        w[k, h] = acc / (ka * y0)
    return Series2(_check_finite(w, "s2_pow"))


def s2_sin_cos(a: Series2) -> tuple[Series2, Series2]:
    y = a.coeffs
    sn = np.zeros_like(y)
    cs = np.zeros_like(y)
    sn[0, 0] = math.sin(y[0, 0])
    cs[0, 0] = math.cos(y[0, 0])
    for k, h in _entries(y.shape):
        ka = _axis_index(k, h)
        sn[k, h] = _axis_sum(cs, y, k, h) / ka
        cs[k, h] = -_axis_sum(sn, y, k, h) / ka
    return Series2(_check_finite(sn, "s2_sin")), Series2(_check_finite(cs, "s2_cos"))
