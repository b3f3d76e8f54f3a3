"""Exact wave-front tracking for LWR traffic with a controlled moving bottleneck."""

from __future__ import annotations

from .flux_model import BottleneckGeometry, DomainError, FluxModel, cubic, greenshields, make_flux
from .mesh import Grids, build_grids, quantize_control, quantize_initial
from .reference_fv import fv_run, l1_compare
from .riemann import RiemannSolution, classical_riemann, constrained_riemann
from .scenario_io import Scenario, parse_scenario, random_scenario
from .signals import ControlSignal, PiecewiseConstant, Profile
from .tracker import SimState, init, run, validate_solution

__all__ = [
    "BottleneckGeometry",
    "ControlSignal",
    "DomainError",
    "FluxModel",
    "Grids",
    "PiecewiseConstant",
    "Profile",
    "RiemannSolution",
    "Scenario",
    "SimState",
    "build_grids",
    "classical_riemann",
    "constrained_riemann",
    "cubic",
    "fv_run",
    "greenshields",
    "init",
    "l1_compare",
    "make_flux",
    "parse_scenario",
    "quantize_control",
    "quantize_initial",
    "random_scenario",
    "run",
    "validate_solution",
]
