"""Derivative-aware finite-difference weights in one spatial dimension.

Every neighbour ``j`` of a centre point stores local DTM coefficients
``C_j(s) = f^(s)(x_j) / s!`` for a contiguous band of orders
``s = b, ..., b + n - 1``.  A :class:`StencilWeightSet` maps those values
linearly onto the centre's coefficients ``F(h) = f^(h)(0) / h!`` for orders
above the band, i.e. a finite-difference stencil that can also consume
derivative data.

Two independent constructions are provided:

``build_weights``
    Hermite interpolation written as a truncated multipoint Taylor
    expansion.  With ``W(x) = prod_k (x - x_k)`` and Lagrange basis
    ``L_j``, the interpolant is
    ``sum_{n<N} sum_j L_j(x) W(x)^n a_{n,j}``, and each ``a_{n,j}`` is a
    linear combination of the stored coefficients whose factors are Taylor
    coefficients of ``1 / ((x - x_j) prod_{s != k} (x - x_s)^n)`` at ``x_k``.
    Those factors are generated from the logarithmic derivative of the
    product and the Leibniz rule.

``birkhoff_weights_oracle``
    Direct inversion of the dense confluent-Vandermonde system that
    matches one polynomial to all the given data.

Both run in exact rational arithmetic on the (exactly representable)
float offsets, so weights are correctly rounded and the two agree to the
last bit.  A band starting at ``b > 0`` is handled by interpolating
``g = f^(b)`` with Hermite data of orders ``0..n-1``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import CapacityError, DegenerateConfigurationError, GeometryError

__all__ = [
    "NeighborhoodGeometry",
    "StencilWeightSet",
    "build_weights",
    "birkhoff_weights_oracle",
    "apply_weights",
    "apply_weights_all",
    "weights_to_csv",
]


@dataclass(frozen=True)
class NeighborhoodGeometry:
    """Offsets of the neighbourhood points relative to the centre."""

    offsets: tuple[float, ...]
    dx: float = 1.0

    def __post_init__(self):
        offs = tuple(float(o) for o in self.offsets)
        object.__setattr__(self, "offsets", offs)
        if not self.dx > 0:
            raise GeometryError(f"grid spacing must be positive, got {self.dx!r}")
        if not all(math.isfinite(o) for o in offs):
            raise GeometryError("offsets must be finite")
        if len(set(offs)) != len(offs):
            raise GeometryError(f"duplicate offsets in {offs}")
        if any(b <= a for a, b in zip(offs, offs[1:])):
            raise GeometryError(f"offsets must be strictly increasing: {offs}")
        if offs.count(0.0) != 1:
            raise GeometryError("exactly one offset must be the centre (0)")

    @classmethod
    def uniform(cls, radius: int, dx: float = 1.0) -> "NeighborhoodGeometry":
        if radius < 0:
            raise GeometryError("radius must be non-negative")
        return cls(tuple(j * dx for j in range(-radius, radius + 1)), dx)

    @property
    def m(self) -> int:
        return len(self.offsets)

    @property
    def center(self) -> int:
        return self.offsets.index(0.0)

    def index_offsets(self) -> np.ndarray:
        """Integer grid-index offsets; only valid on a uniform grid."""
        steps = np.array(self.offsets) / self.dx
        idx = np.rint(steps).astype(int)
        if not np.allclose(steps, idx, rtol=0, atol=1e-12):
            raise GeometryError("offsets are not integer multiples of dx")
        return idx


@dataclass(frozen=True, eq=False)
class StencilWeightSet:
    """``weights[t, j, s]``: target ``target_orders[t]``, neighbour ``j``,
    source ``source_orders[s]``."""

    geometry: NeighborhoodGeometry
    source_orders: tuple[int, ...]
    target_orders: tuple[int, ...]
    weights: np.ndarray

    def __post_init__(self):
        self.weights.setflags(write=False)

    @property
    def base_order(self) -> int:
        return self.source_orders[0]

    @property
    def capacity(self) -> int:
        return _capacity(self.geometry.m, self.source_orders)

    def for_target(self, h: int) -> np.ndarray:
        return self.weights[self.target_orders.index(h)]

    def rebased(self, base: int) -> "StencilWeightSet":
        """The same stencil applied to the band starting at ``base``.

        Interpolating ``g = f^(b)`` does not depend on ``b``; only the
        factorial scalings between DTM coefficients of ``f`` and ``g`` do.
        """
        b0 = self.base_order
        if base == b0:
            return self
        shift = base - b0
        n = len(self.source_orders)
        src = tuple(range(base, base + n))
        tgt = tuple(h + shift for h in self.target_orders)
        w = np.empty_like(self.weights)
        for ti, h in enumerate(self.target_orders):
            p = h - b0
            for si in range(n):
                # dx**(s-h) is unchanged by a common shift of s and h
                f_old = _band_factor(b0, si, p)
                f_new = _band_factor(base, si, p)
                w[ti, :, si] = self.weights[ti, :, si] * (f_new / f_old)
        return StencilWeightSet(self.geometry, src, tgt, w)


def _capacity(m: int, source_orders: Sequence[int]) -> int:
    return source_orders[0] + m * len(source_orders) - 1


def _band_factor(base: int, delta: int, p: int) -> float:
    """(b+delta)!/delta! * p!/(b+p)! as an exact ratio."""
    return float(
        Fraction(math.perm(base + delta, base), 1) / Fraction(math.perm(base + p, base), 1)
    )


def _validate_orders(geom: NeighborhoodGeometry, source_orders, target_orders):
    src = tuple(int(s) for s in source_orders)
    tgt = tuple(int(h) for h in target_orders)
    if not src:
        raise ValueError("at least one source order is required")
    if src != tuple(range(src[0], src[0] + len(src))) or src[0] < 0:
        raise ValueError(f"source orders must be a contiguous ascending range, got {src}")
    if not tgt:
        raise ValueError("at least one target order is required")
    cap = _capacity(geom.m, src)
    for h in tgt:
        if h > cap:
            raise CapacityError(
                f"target order {h} exceeds capacity {cap} of {geom.m} points x {len(src)} orders"
            )
        if h < src[0]:
            raise CapacityError(f"target order {h} lies below the source band starting at {src[0]}")
    return src, tgt


def _normalized(geom: NeighborhoodGeometry) -> list[Fraction]:
    dx = Fraction(geom.dx)
    return [Fraction(o) / dx for o in geom.offsets]


def _to_absolute(rel, geom, src, tgt) -> np.ndarray:
    """Turn exact g-weights in dx units into float f-weights."""
    b = src[0]
    dx = Fraction(geom.dx)
    out = np.empty((len(tgt), geom.m, len(src)))
    for ti, h in enumerate(tgt):
        p = h - b
        for j in range(geom.m):
            for d, s in enumerate(src):
                scale = Fraction(math.perm(b + d, b)) / Fraction(math.perm(b + p, b))
                out[ti, j, d] = float(rel[p][j][d] * scale * dx ** (s - h))
    return out


# -- polynomial helpers on Fraction coefficient lists ---------------------


def _pmul(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] += ai * bj
    return out


def _pprod_roots(roots) -> list[Fraction]:
    p = [Fraction(1)]
    for r in roots:
        p = _pmul(p, [-r, Fraction(1)])
    return p


def _reciprocal_taylor(xs, j: int, k: int, n: int, order: int) -> list[Fraction]:
    """Taylor coefficients at x_k of 1/((x-x_j)^[k!=j] prod_{s!=k} (x-x_s)^n)
    up to ``order``, via u' = u * (d/dx ln u) and the Leibniz rule."""
    xk = xs[k]
    off = int(k != j)
    others = [xk - xs[s] for s in range(len(xs)) if s != k]
    u0 = Fraction(1)
    for d in others:
        u0 /= d**n
    if off:
        u0 /= xk - xs[j]
    # Taylor coefficients of the log-derivative: 1/(x - x_p) = sum_i (-1)^i y^i / d^(i+1)
    v = []
    for i in range(order):
        sign = -1 if i % 2 else 1
        acc = Fraction(0)
        if off:
            acc += Fraction(1) / (xk - xs[j]) ** (i + 1)
        if n:
            acc += n * sum(Fraction(1) / d ** (i + 1) for d in others)
        v.append(-sign * acc)
    u = [u0]
    for r in range(order):
        u.append(sum(v[i] * u[r - i] for i in range(r + 1)) / (r + 1))
    return u


@lru_cache(maxsize=256)
def _multipoint_rel(xs: tuple[Fraction, ...], n_orders: int):
    """Exact weights rel[p][k][delta] of Hermite interpolation in normalized
    units: g-coefficient p at 0 from G_k(delta) at every node."""
    m = len(xs)
    deg = m * n_orders - 1
    w_poly = _pprod_roots(xs)
    rel = [[[Fraction(0)] * n_orders for _ in range(m)] for _ in range(deg + 1)]
    w_pow = [Fraction(1)]
    for n in range(n_orders):
        for j in range(m):
            denom = Fraction(1)
            for k in range(m):
                if k != j:
                    denom *= xs[j] - xs[k]
            basis = _pmul(_pprod_roots(xs[k] for k in range(m) if k != j), w_pow)
            basis = [c / denom for c in basis]
            for k in range(m):
                n_eff = n - int(k != j)
                if n_eff < 0:
                    continue
                u = _reciprocal_taylor(xs, j, k, n, n_eff)
                for delta in range(n_eff + 1):
                    factor = u[n_eff - delta]
                    if not factor:
                        continue
                    for p, c in enumerate(basis):
                        if c:
                            rel[p][k][delta] += c * factor
        w_pow = _pmul(w_pow, w_poly)
    return rel


@lru_cache(maxsize=256)
def _build_cached(geom: NeighborhoodGeometry, src: tuple[int, ...], tgt: tuple[int, ...]):
    rel = _multipoint_rel(tuple(_normalized(geom)), len(src))
    return StencilWeightSet(geom, src, tgt, _to_absolute(rel, geom, src, tgt))


def build_weights(
    geom: NeighborhoodGeometry, source_orders: Sequence[int], target_orders: Sequence[int]
) -> StencilWeightSet:
    """Stencil weights from the multipoint Taylor expansion (memoized)."""
    src, tgt = _validate_orders(geom, source_orders, target_orders)
    return _build_cached(geom, src, tgt)


def birkhoff_weights_oracle(
    geom: NeighborhoodGeometry, source_orders: Sequence[int], target_orders: Sequence[int]
) -> StencilWeightSet:
    """Reference weights from an exact dense solve of the interpolation system.

    Unknowns are the monomial coefficients ``c_i`` (``i`` from the band base
    up to capacity); each datum ``C_j(s)`` contributes the row
    ``sum_i binom(i, s) x_j^(i-s) c_i``.  The target coefficient is ``c_h``.
    """
    from sympy import QQ
    from sympy.polys.matrices import DomainMatrix
    from sympy.polys.matrices.exceptions import DMNonInvertibleMatrixError

    src, tgt = _validate_orders(geom, source_orders, target_orders)
    xs = _normalized(geom)
    b = src[0]
    cols = range(b, _capacity(geom.m, src) + 1)
    rows = []
    for xj in xs:
        for s in src:
            xq = QQ(xj.numerator, xj.denominator)
            rows.append([QQ(math.comb(i, s)) * xq ** (i - s) if i >= s else QQ(0) for i in cols])
    mat = DomainMatrix(rows, (len(rows), len(rows)), QQ)
    try:
        inv = mat.inv().to_Matrix()
    except DMNonInvertibleMatrixError as exc:
        raise DegenerateConfigurationError("interpolation system is singular") from exc
    n = len(src)
    # rel weights are directly in f-coefficients here; only dx scaling remains
    dx = Fraction(geom.dx)
    out = np.empty((len(tgt), geom.m, n))
    for ti, h in enumerate(tgt):
        row = inv.row(h - b)
        for j in range(geom.m):
            for d, s in enumerate(src):
                val = Fraction(int(row[j * n + d].p), int(row[j * n + d].q))
                out[ti, j, d] = float(val * dx ** (s - h))
    return StencilWeightSet(geom, src, tgt, out)


def _gather(coeffs: np.ndarray, centers, idx_off: np.ndarray, k: int, src) -> np.ndarray:
    n_pts = coeffs.shape[0]
    idx = (np.asarray(centers)[..., None] + idx_off) % n_pts
    return coeffs[idx, k][..., list(src)]


def apply_weights(grid, center_index: int, ws: StencilWeightSet, k: int, base_order: int | None = None):
    """Reconstructed ``F(k, h)`` for every target order at one tower.

    ``grid.coeffs`` has shape (N, T, H_stored) and is read with periodic wrap.
    """
    if base_order is not None:
        ws = ws.rebased(base_order)
    idx_off = ws.geometry.index_offsets()
    vals = _gather(grid.coeffs, center_index, idx_off, k, ws.source_orders)
    return np.einsum("tjs,js->t", ws.weights, vals)


def apply_weights_all(coeffs: np.ndarray, ws: StencilWeightSet, centers=None) -> np.ndarray:
    """Vectorized reconstruction for many towers and every stored temporal order.

    Returns an array of shape (len(centers), T, n_targets).
    """
    n_pts = coeffs.shape[0]
    if centers is None:
        centers = np.arange(n_pts)
    idx_off = ws.geometry.index_offsets()
    idx = (np.asarray(centers)[:, None] + idx_off) % n_pts
    vals = coeffs[idx][..., list(ws.source_orders)]  # (P, m, T, n)
    return np.einsum("tjs,pjks->pkt", ws.weights, vals)


def weights_to_csv(ws: StencilWeightSet) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["target_order", "neighbor_offset", "source_order", "weight"])
    for ti, h in enumerate(ws.target_orders):
        for j, off in enumerate(ws.geometry.offsets):
            for si, s in enumerate(ws.source_orders):
                writer.writerow([h, repr(off), s, repr(float(ws.weights[ti, j, si]))])
    return buf.getvalue()
