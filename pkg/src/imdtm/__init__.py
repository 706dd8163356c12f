"""Iterated multipoint differential-transform evolution of 1+1-D PDEs."""

from .baseline import MolState, fd_spatial_deriv, rk4_step
from .equations import MKdVSystem, PdeSystem, WaveSystem, make_system
from .evolver import DiagnosticsRecord, Evolver, EvolverConfig, Grid, step
from .series import Series2
from .stencil import NeighborhoodGeometry, StencilWeightSet, birkhoff_weights_oracle, build_weights

__version__ = "0.1.0"

__all__ = [
    "Series2",
    "NeighborhoodGeometry",
    "StencilWeightSet",
    "build_weights",
    "birkhoff_weights_oracle",
    "PdeSystem",
    "WaveSystem",
    "MKdVSystem",
    "make_system",
    "Grid",
    "EvolverConfig",
    "Evolver",
    "DiagnosticsRecord",
    "step",
    "MolState",
    "fd_spatial_deriv",
    "rk4_step",
]
