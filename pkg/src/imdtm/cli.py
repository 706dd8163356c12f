"""Command-line driver: ``imdtm run`` and ``imdtm stencil dump``.

Run configurations are flat ``key = value`` files (``#`` starts a comment);
command-line flags with the same names override file values.  Diagnostics
go to a CSV with header ``step,t,analytic_err,constraint_err,wall_ms``.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import math
import sys
import time
from dataclasses import dataclass

import numpy as np

from .baseline import MolState, mol_analytic_error, rk4_step, stencil_radius
from .equations import make_system
from .errors import ConfigError, IMDTMError
from .evolver import EvolverConfig, Evolver, Grid
from .stencil import NeighborhoodGeometry, build_weights, weights_to_csv

__all__ = ["RunConfig", "parse_config", "serialize_config", "run", "main", "CSV_HEADER"]

CSV_HEADER = ("step", "t", "analytic_err", "constraint_err", "wall_ms")
EXIT_OK, EXIT_ERROR, EXIT_DIVERGED = 0, 1, 2


@dataclass(frozen=True)
class RunConfig:
    equation: str
    N: int
    L: float
    dt: float
    steps: int
    scheme: str = "imdtm"
    H_stored: int = 1
    radius: int = 1
    stacking: str = "pairs"
    max_order: int | None = None
    rk4_accuracy: int = 8
    a_param: float | None = None
    output_path: str = "-"
    record_every: int = 1

    def evolver_config(self) -> EvolverConfig:
        return EvolverConfig(
            dt=self.dt,
            steps=self.steps,
            radius=self.radius,
            h_stored=self.H_stored,
            stacking=self.stacking,
            max_order=self.max_order,
            scheme=self.scheme,
        )


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_REQUIRED = [name for name, f in _FIELDS.items() if f.default is dataclasses.MISSING]
_CHOICES = {
    "equation": ("wave", "mkdv"),
    "scheme": ("imdtm", "rk4"),
    "stacking": ("none", "pairs"),
    "rk4_accuracy": (2, 8),
}
_INT_KEYS = {"N", "steps", "H_stored", "radius", "max_order", "rk4_accuracy", "record_every"}
_FLOAT_KEYS = {"L", "dt", "a_param"}


def _convert(key: str, raw: str, line: int | None):
    raw = raw.strip()
    try:
        if key in _INT_KEYS:
            value = int(raw)
        elif key in _FLOAT_KEYS:
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError
        else:
            value = raw
    except ValueError:
        raise ConfigError(f"malformed value {raw!r}", key=key, line=line) from None
    if key in _CHOICES and value not in _CHOICES[key]:
        allowed = ", ".join(map(str, _CHOICES[key]))
        raise ConfigError(f"{value!r} is not one of {allowed}", key=key, line=line)
    return value


def _parse_lines(text: str) -> dict[str, tuple[str, int]]:
    entries = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError("unknown key", key=key, line=lineno)
        entries[key] = (value, lineno)
    return entries


def parse_config(text: str = "", overrides: dict[str, str] | None = None) -> RunConfig:
    """Parse a flat config; ``overrides`` (e.g. from CLI flags) win."""
    entries = _parse_lines(text)
    for key, value in (overrides or {}).items():
        if key not in _FIELDS:
            raise ConfigError("unknown key", key=key)
        entries[key] = (str(value), None)
    values = {key: _convert(key, raw, line) for key, (raw, line) in entries.items()}
    missing = [k for k in _REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")

    def line_of(key):
        return entries[key][1] if key in entries else None

    for key in ("N", "L", "dt", "radius", "H_stored", "record_every", "max_order", "a_param"):
        if key in values and not values[key] > 0:
            raise ConfigError("must be positive", key=key, line=line_of(key))
    if values["steps"] < 0:
        raise ConfigError("must be non-negative", key="steps", line=line_of("steps"))
    cfg = RunConfig(**values)
    if cfg.scheme == "imdtm":
        try:
            cfg.evolver_config()
        except ConfigError as exc:
            raise ConfigError(exc.message, key=exc.key, line=line_of(exc.key) if exc.key else None) from None
        if cfg.N < 2 * cfg.radius + 1:
            raise ConfigError(f"N must be at least {2 * cfg.radius + 1} for this radius", key="N", line=line_of("N"))
    else:
        width = 2 * stencil_radius(3 if cfg.equation == "mkdv" else 2, cfg.rk4_accuracy) + 1
        if cfg.N <= width:
            raise ConfigError(f"N must exceed the {width}-point difference stencil", key="N", line=line_of("N"))
    return cfg


def serialize_config(cfg: RunConfig) -> str:
    lines = []
    for name in _FIELDS:
        value = getattr(cfg, name)
        if value is None:
            continue
        lines.append(f"{name} = {value!r}" if isinstance(value, float) else f"{name} = {value}")
    return "\n".join(lines) + "\n"


def _fmt(value) -> str:
    if value is None:
        return ""
    return repr(float(value))


def _imdtm_records(cfg: RunConfig, system):
    grid = Grid.from_system(system, cfg.N, cfg.L, cfg.H_stored)
    ev = Evolver(grid, system, cfg.evolver_config())
    for rec in ev.run(record_every=cfg.record_every):
        yield rec.step, rec.t, rec.analytic_err, rec.constraint_err, rec.wall_ms
    return ev.diverged_at


def _rk4_records(cfg: RunConfig, system):
    state = MolState.from_system(system, cfg.N, cfg.L)
    yield 0, 0.0, mol_analytic_error(state, system), None, 0.0
    for n in range(1, cfg.steps + 1):
        start = time.perf_counter()
        with np.errstate(over="ignore", invalid="ignore"):
            state = rk4_step(state, system, cfg.dt, cfg.rk4_accuracy)
        state.t = n * cfg.dt
        wall = (time.perf_counter() - start) * 1e3
        finite = bool(np.all(np.isfinite(state.u)))
        err = mol_analytic_error(state, system) if finite else math.inf
        diverged = not (math.isfinite(err) and err <= 0.0)
        if diverged or n % cfg.record_every == 0 or n == cfg.steps:
            yield n, state.t, err, None, wall
        if diverged:
            return n
    return None


def run(cfg: RunConfig, out=None) -> int:
    """Execute a run, writing CSV rows to ``out`` or ``cfg.output_path``.

    Returns the process exit status.
    """
    close = False
    if out is None:
        if cfg.output_path == "-":
            out = sys.stdout
        else:
            try:
                out = open(cfg.output_path, "w", newline="")
            except OSError as exc:
                print(f"error: cannot write {cfg.output_path}: {exc.strerror}", file=sys.stderr)
                return EXIT_ERROR
            close = True
    try:
        system = make_system(cfg.equation, cfg.L, cfg.a_param)
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        records = _imdtm_records(cfg, system) if cfg.scheme == "imdtm" else _rk4_records(cfg, system)
        diverged_at = None
        while True:
            try:
                step, t, err, cons, wall = next(records)
            except StopIteration as stop:
                diverged_at = stop.value
                break
            writer.writerow([step, _fmt(t), _fmt(err), _fmt(cons), _fmt(wall)])
            out.flush()
    finally:
        if close:
            out.close()
    if diverged_at is not None:
        print(f"diverged at step {diverged_at}", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def _order_list(text: str) -> list[int]:
    """'0,1' or '2-6' or a mix such as '0,3-5'."""
    orders = []
    try:
        for part in text.split(","):
            lo, _, hi = part.strip().partition("-")
            orders.extend(range(int(lo), int(hi or lo) + 1))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad order list {text!r}") from None
    return orders


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="imdtm", description="Iterated multipoint DTM evolution.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="evolve a configured experiment and emit diagnostics CSV")
    run_p.add_argument("--config", help="flat key = value configuration file")
    for name in _FIELDS:
        run_p.add_argument(f"--{name}", dest=f"opt_{name}", metavar="VALUE", help=f"override '{name}'")

    st_p = sub.add_parser("stencil", help="stencil utilities")
    st_sub = st_p.add_subparsers(dest="stencil_command", required=True)
    dump = st_sub.add_parser("dump", help="print reconstruction weights as CSV")
    dump.add_argument("--radius", type=int, required=True)
    dump.add_argument("--source-orders", type=_order_list, required=True)
    dump.add_argument("--target-orders", type=_order_list, required=True)
    dump.add_argument("--dx", type=float, default=1.0)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "stencil":
            geom = NeighborhoodGeometry.uniform(args.radius, args.dx)
            ws = build_weights(geom, args.source_orders, args.target_orders)
            sys.stdout.write(weights_to_csv(ws))
            return EXIT_OK
        text = ""
        if args.config:
            try:
                with open(args.config) as fh:
                    text = fh.read()
            except OSError as exc:
                print(f"error: cannot read {args.config}: {exc.strerror}", file=sys.stderr)
                return EXIT_ERROR
        overrides = {
            name: getattr(args, f"opt_{name}") for name in _FIELDS if getattr(args, f"opt_{name}") is not None
        }
        cfg = parse_config(text, overrides)
    except (IMDTMError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
