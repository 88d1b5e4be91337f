"""Transient solver for isothermal gas flow on pipe networks."""

from .grid import Layout, PipeGrid, discretize
from .kernels import backend_name
from .simulate import SolverConfig, cfl_dt, integrate, make_layout, simulate, step
from .state import BoundarySet, InstabilityError, PipeField, SystemState
from .steady import SteadyStateError, solve_network_flows, steady_state_init

__all__ = [
    "Layout", "PipeGrid", "discretize", "backend_name", "SolverConfig", "cfl_dt",
    "integrate", "make_layout", "simulate", "step", "BoundarySet", "InstabilityError",
    "PipeField", "SystemState", "SteadyStateError", "solve_network_flows",
    "steady_state_init",
]
