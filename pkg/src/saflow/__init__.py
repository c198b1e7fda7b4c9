"""Geometric Schrodinger-Airy flows of closed loops into Kahler targets."""

from ._accel import NUMBA_ENABLED, backend_name
from .manifold import (
    FlatTorus2,
    HolomorphicSpaceForm,
    PoincareDisk,
    Sphere2,
    StereographicSphere,
    TangentVector,
    make_geometry,
)
from .loopfield import GridSpec, LoopField, LoopMap
from .flow import FlowParams, StepperConfig, evolve, flow_rhs, stability_dt, step
from .invariants import EnergyReport, energy_report
from .scalarpde import ComplexLoop, ScalarParams, evolve_scalar
from .hasimoto import FrameField, extract_q, hasimoto_series, parallel_frame
from .filament import FilamentCurve, evolve_filament, frenet, reconstruct, tangent_field
from .initial import make_initial_data
from .config import RunConfig, parse_config

__version__ = "0.1.0"

__all__ = [
    "NUMBA_ENABLED",
    "backend_name",
    "ComplexLoop",
    "FilamentCurve",
    "FrameField",
    "RunConfig",
    "evolve_filament",
    "extract_q",
    "frenet",
    "hasimoto_series",
    "make_initial_data",
    "parallel_frame",
    "parse_config",
    "reconstruct",
    "tangent_field",
    "EnergyReport",
    "FlatTorus2",
    "FlowParams",
    "GridSpec",
    "HolomorphicSpaceForm",
    "LoopField",
    "LoopMap",
    "PoincareDisk",
    "ScalarParams",
    "Sphere2",
    "StepperConfig",
    "StereographicSphere",
    "TangentVector",
    "energy_report",
    "evolve",
    "evolve_scalar",
    "flow_rhs",
    "make_geometry",
    "stability_dt",
    "step",
]
