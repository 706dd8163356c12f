"""Iterated multipoint DTM time stepping on a periodic 1-D grid.

Each grid point stores a tower ``F(k, h)`` for temporal orders
``k < T`` and spatial orders ``h < H_stored``.  One step, per stacking
level and per point:

1. *spatial extension*: the level's band of stored orders at the
   neighbouring points is fed through a stencil to rebuild higher spatial
   orders at the centre;
2. *temporal extension*: the PDE recurrence fills layers ``k >= T`` up to
   the dependency frontier;
3. *propagation*: every stored coefficient of the level is shifted to
   ``t + dt`` through the binomial Taylor shift
   ``F(k0, h) <- sum_k C(k, k0) F(k, h) dt^(k - k0)``.

With ``stacking="pairs"`` the stored orders are split into bands
``(0, 1), (2, 3), ...``; each band is reconstructed from its own stencil
and only the band's orders are propagated by it.  The extended series of a
band holds all stored orders below the band, so nonlinear recurrences see
lower-order data.  With ``stacking="none"`` a single stencil built from the
top two stored orders supplies everything above the stored range.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .equations import PdeSystem
from .errors import ConfigError
from .series import Series2
from .stencil import NeighborhoodGeometry, StencilWeightSet, apply_weights_all, build_weights

__all__ = [
    "Grid",
    "EvolverConfig",
    "StackLevel",
    "DiagnosticsRecord",
    "stack_levels",
    "dependency_widths",
    "extend_spatial",
    "extend_temporal",
    "propagate_point",
    "step",
    "constraint_violation",
    "neighbor_mismatches",
    "analytic_error",
    "mean_log_relative_error",
    "Evolver",
    "unstable_mode_demo",
    "worker_count",
]

REL_FLOOR = 1e-12
LOG_FLOOR = float(np.finfo(float).eps)


@dataclass
class Grid:
    """Periodic grid of towers; ``coeffs`` has shape (N, T, H_stored)."""

    coeffs: np.ndarray
    length: float
    t: float = 0.0

    @property
    def N(self) -> int:
        return self.coeffs.shape[0]

    @property
    def temporal_order(self) -> int:
        return self.coeffs.shape[1]

    @property
    def h_stored(self) -> int:
        return self.coeffs.shape[2]

    @property
    def dx(self) -> float:
        return self.length / self.N

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.N) * self.dx

    @classmethod
    def from_system(cls, system: PdeSystem, n_points: int, length: float, h_stored: int) -> "Grid":
        g = cls(np.zeros((n_points, system.temporal_order, h_stored)), length)
        g.coeffs = np.ascontiguousarray(system.initial_towers(g.x, h_stored))
        return g

    def copy(self) -> "Grid":
        return Grid(self.coeffs.copy(), self.length, self.t)


@dataclass(frozen=True)
class EvolverConfig:
    dt: float
    steps: int = 1
    radius: int = 1
    h_stored: int = 1
    stacking: str = "pairs"
    max_order: int | None = None
    scheme: str = "imdtm"

    def __post_init__(self):
        if self.stacking not in ("none", "pairs"):
            raise ConfigError(f"unknown stacking mode {self.stacking!r}", key="stacking")
        if self.radius < 1:
            raise ConfigError("radius must be at least 1", key="radius")
        if self.h_stored < 1:
            raise ConfigError("at least one order must be stored", key="H_stored")
        if self.steps < 0:
            raise ConfigError("steps must be non-negative", key="steps")
        n = self.band_width
        cap = (2 * self.radius + 1) * n - 1
        if self.max_order is not None and not n <= self.max_order <= cap:
            raise ConfigError(
                f"max_order must lie in [{n}, {cap}] for radius {self.radius} "
                f"and {n} orders per level",
                key="max_order",
            )

    @property
    def band_width(self) -> int:
        return min(2, self.h_stored)

    @property
    def relative_cap(self) -> int:
        if self.max_order is not None:
            return self.max_order
        return (2 * self.radius + 1) * self.band_width - 1


@dataclass(frozen=True)
class StackLevel:
    base: int  # first source order
    n_src: int  # number of source orders
    low: int  # orders < low come from storage
    cap: int  # highest spatial order in the extended series
    propagate: tuple[int, ...]  # stored orders advanced by this level


def stack_levels(config: EvolverConfig) -> list[StackLevel]:
    hs = config.h_stored
    rel = config.relative_cap
    m = 2 * config.radius + 1
    if config.stacking == "none":
        base = max(0, hs - 2)
        n = hs - base
        cap = min(base + rel, base + m * n - 1)
        return [StackLevel(base, n, hs, cap, tuple(range(hs)))]
    levels = []
    for base in range(0, hs, 2):
        n = min(2, hs - base)
        cap = min(base + rel, base + m * n - 1)
        levels.append(StackLevel(base, n, base + n, cap, tuple(range(base, base + n))))
    return levels


@lru_cache(maxsize=128)
def _level_weights(radius: int, dx: float, base: int, n_src: int, low: int, cap: int) -> StencilWeightSet | None:
    if cap < low:
        return None
    geom = NeighborhoodGeometry.uniform(radius, dx)
    return build_weights(geom, range(base, base + n_src), range(low, cap + 1))


def dependency_widths(system: PdeSystem, n_cols: int) -> list[int]:
    """Number of available spatial orders in every temporal layer.

    Layers below the temporal order hold ``n_cols`` entries; higher layers
    are filled while every coefficient their recurrence reads is available.
    The list ends at the last non-empty layer (the frontier).
    """
    widths = [n_cols] * system.temporal_order
    while True:
        k = len(widths)
        w = 0
        while w < n_cols and all(kk >= 0 and hh < widths[kk] for kk, hh in system.reads(k, w)):
            w += 1
        if w == 0:
            return widths
        widths.append(w)


def _shift_matrix(n_layers: int, temporal_order: int, dt: float) -> np.ndarray:
    """M[k0, k] = C(k, k0) dt^(k - k0) for k >= k0."""
    m = np.zeros((temporal_order, n_layers))
    for k0 in range(temporal_order):
        for k in range(k0, n_layers):
            m[k0, k] = math.comb(k, k0) * dt ** (k - k0)
    return m


def _extend_level(stored, centers, level, radius, dx, system):
    """Extended series (P, K, cap+1) for the towers at ``centers``."""
    n_pts, T, _ = stored.shape
    widths = dependency_widths(system, level.cap + 1)
    series = np.zeros((len(centers), len(widths), level.cap + 1))
    series[:, :T, : level.low] = stored[centers, :, : level.low]
    ws = _level_weights(radius, dx, level.base, level.n_src, level.low, level.cap)
    if ws is not None:
        series[:, :T, level.low :] = apply_weights_all(stored, ws, centers)
    cache = system.new_cache(series.shape)
    for k in range(T, len(widths)):
        system.fill_layer(series, k, widths[k], cache)
    return series


def _step_chunk(stored, out, centers, levels, config, dx, system):
    T = stored.shape[1]
    for level in levels:
        series = _extend_level(stored, centers, level, config.radius, dx, system)
        shift = _shift_matrix(series.shape[1], T, config.dt)
        cols = list(level.propagate)
        out[np.ix_(centers, range(T), cols)] = np.einsum("ak,pkh->pah", shift, series[:, :, cols])


def worker_count() -> int:
    raw = os.environ.get("IMDTM_THREADS", "1").strip() or "1"
    n = int(raw)
    if n <= 0:
        return os.cpu_count() or 1
    return n


def step(grid: Grid, system: PdeSystem, config: EvolverConfig, workers: int | None = None) -> Grid:
    """Advance every tower by ``config.dt``; returns a new grid.

    The input grid is only read, so point ranges can be updated
    concurrently into the output buffer.
    """
    if grid.h_stored != config.h_stored:
        raise ConfigError(f"grid stores {grid.h_stored} orders, config expects {config.h_stored}")
    if grid.N < 2 * config.radius + 1:
        raise ConfigError(f"N = {grid.N} is smaller than the stencil width", key="N")
    stored = grid.coeffs
    out = np.empty_like(stored)
    levels = stack_levels(config)
    workers = worker_count() if workers is None else workers
    if workers <= 1 or grid.N < 2 * workers:
        _step_chunk(stored, out, np.arange(grid.N), levels, config, grid.dx, system)
    else:
        chunks = np.array_split(np.arange(grid.N), workers)
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(lambda c: _step_chunk(stored, out, c, levels, config, grid.dx, system), chunks))
    return Grid(out, grid.length, grid.t + config.dt)


# -- per-point views of the pipeline -----------------------------------------


def extend_spatial(grid: Grid, i: int, level: StackLevel, radius: int) -> np.ndarray:
    """Tower ``i`` widened to ``level.cap``: rows k < T, columns 0..cap.

    Columns below ``level.low`` are the stored values, the rest come from
    the level's stencil.
    """
    stored = grid.coeffs
    out = np.zeros((grid.temporal_order, level.cap + 1))
    out[:, : level.low] = stored[i, :, : level.low]
    ws = _level_weights(radius, grid.dx, level.base, level.n_src, level.low, level.cap)
    if ws is not None:
        out[:, level.low :] = apply_weights_all(stored, ws, [i])[0]
    return out


def extend_temporal(system: PdeSystem, series, k_from: int | None = None) -> Series2:
    """Fill layers ``k >= k_from`` up to the dependency frontier.

    ``series`` supplies layers below ``k_from`` (default: the temporal
    order) over its full spatial width.
    """
    table = series.coeffs if isinstance(series, Series2) else np.asarray(series, dtype=float)
    k_from = system.temporal_order if k_from is None else k_from
    n_cols = table.shape[1]
    widths = [n_cols] * k_from
    # same frontier walk as dependency_widths, seeded with k_from layers
    while True:
        k = len(widths)
        w = 0
        while w < n_cols and all(kk >= 0 and hh < widths[kk] for kk, hh in system.reads(k, w)):
            w += 1
        if w == 0:
            break
        widths.append(w)
    out = np.zeros((len(widths), n_cols))
    out[:k_from] = table[:k_from]
    cache = system.new_cache(out.shape)
    for k in range(k_from, len(widths)):
        system.fill_layer(out, k, widths[k], cache)
    return Series2(out)


def propagate_point(series, dt: float, temporal_order: int, stored_orders) -> np.ndarray:
    """Taylor-shift the given spatial orders of every stored layer by ``dt``.

    Entries outside the frontier must be zero in ``series``.
    """
    table = series.coeffs if isinstance(series, Series2) else np.asarray(series, dtype=float)
    shift = _shift_matrix(table.shape[0], temporal_order, dt)
    return shift @ table[:, list(stored_orders)]


# -- diagnostics ----------------------------------------------------------------


@dataclass(frozen=True)
class DiagnosticsRecord:
    step: int
    t: float
    analytic_err: float
    constraint_err: float | None
    wall_ms: float = field(default=0.0, compare=False)


def _log_rel(diff, ref, scale):
    denom = np.maximum(np.abs(ref), REL_FLOOR * scale)
    denom = np.maximum(denom, np.finfo(float).tiny)
    rel = np.abs(diff) / denom
    return np.log10(np.maximum(rel, LOG_FLOOR))


def neighbor_mismatches(grid: Grid) -> np.ndarray:
    """Relative mismatch between each tower's series evaluated at its left and
    right neighbour and the neighbour's stored value.

    Shape (N, 2, T); index 0 is the left neighbour, 1 the right one.
    """
    c = grid.coeffs
    n_ord = c.shape[2]
    out = np.empty((grid.N, 2, grid.temporal_order))
    for side, sgn in enumerate((-1, 1)):
        powers = (sgn * grid.dx) ** np.arange(n_ord)
        predicted = c @ powers  # (N, T)
        stored = np.roll(c[:, :, 0], -sgn, axis=0)  # neighbour i + sgn
        scale = np.max(np.abs(c[:, :, 0]), axis=0)
        denom = np.maximum(np.abs(stored), REL_FLOOR * scale)
        denom = np.maximum(denom, np.finfo(float).tiny)
        out[:, side, :] = np.abs(predicted - stored) / denom
    return out


def constraint_violation(grid: Grid) -> float | None:
    """Mean log10 neighbour-to-neighbour self-consistency violation.

    ``None`` when only function values are stored.
    """
    if grid.h_stored < 2:
        return None
    rel = neighbor_mismatches(grid)
    return float(np.mean(np.log10(np.maximum(rel, LOG_FLOOR))))


def analytic_error(grid: Grid, system: PdeSystem, t: float | None = None) -> float:
    t = grid.t if t is None else t
    exact = system.analytic(grid.x, t)
    return mean_log_relative_error(grid.coeffs[:, 0, 0], exact)


def mean_log_relative_error(values, exact) -> float:
    """Mean over points of log10 relative error, denominators clamped at
    a small fraction of the largest exact magnitude."""
    scale = np.max(np.abs(exact))
    return float(np.mean(_log_rel(values - exact, exact, scale)))


# -- driver ------------------------------------------------------------------------


class Evolver:
    """Stateful stepping loop that records diagnostics and stops on divergence.

    A step diverges when it produces a non-finite coefficient or when the
    mean relative error against the analytic solution exceeds 100 %.
    """

    def __init__(self, grid: Grid, system: PdeSystem, config: EvolverConfig, workers: int | None = None):
        self.grid = grid
        self.system = system
        self.config = config
        self.workers = workers
        self.step_index = 0
        self.diverged_at: int | None = None

    def record(self, wall_ms: float = 0.0) -> DiagnosticsRecord:
        finite = np.all(np.isfinite(self.grid.coeffs))
        err = analytic_error(self.grid, self.system) if finite else math.inf
        cons = constraint_violation(self.grid) if finite else (math.inf if self.grid.h_stored >= 2 else None)
        return DiagnosticsRecord(self.step_index, self.grid.t, err, cons, wall_ms)

    def advance(self) -> DiagnosticsRecord:
        start = time.perf_counter()
        with np.errstate(over="ignore", invalid="ignore"):
            self.grid = step(self.grid, self.system, self.config, self.workers)
        wall = (time.perf_counter() - start) * 1e3
        # keep t exact for long runs instead of accumulating dt
        self.step_index += 1
        self.grid.t = self.step_index * self.config.dt
        rec = self.record(wall)
        if not (math.isfinite(rec.analytic_err) and rec.analytic_err <= 0.0):
            self.diverged_at = self.step_index
        return rec

    def run(self, steps: int | None = None, record_every: int = 1):
        """Yield the t=0 record and every ``record_every``-th step's record.

        The divergent step is always yielded, and ends the run.
        """
        steps = self.config.steps if steps is None else steps
        yield self.record()
        for _ in range(steps):
            rec = self.advance()
            if self.diverged_at is not None:
                yield rec
                return
            if self.step_index % record_every == 0 or self.step_index == steps:
                yield rec


def unstable_mode_demo(
    config: EvolverConfig, system: PdeSystem | None = None, n_points: int = 16, length: float = 18.0
) -> int | None:
    """Step at which the run loses all accuracy (or ``None`` if it never does).

    Intended for the all-orders-at-once configuration with many stored
    orders, which is unstable, and its pairwise-stacked twin.
    """
    from .equations import WaveSystem

    system = WaveSystem(length) if system is None else system
    grid = Grid.from_system(system, n_points, length, config.h_stored)
    ev = Evolver(grid, system, config)
    for _ in ev.run():
        pass
    return ev.diverged_at


def initial_grid_zero(n_points: int, temporal_order: int, h_stored: int, length: float) -> Grid:
    return Grid(np.zeros((n_points, temporal_order, h_stored)), length)
