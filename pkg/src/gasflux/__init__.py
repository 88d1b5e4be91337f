"""gasflux: transient natural-gas network simulation under stochastic demand."""

from .core import (BAR, DomainError, GasfluxError, GasProperties, Network, Node, Pipe,
                   ValidationError, density_from_pressure, israel_network, load_network,
                   pressure_from_density, sound_speed)
from .solver import (BoundarySet, InstabilityError, SolverConfig, SystemState, simulate,
                     steady_state_init)
from .trajectory import Trajectory

__version__ = "0.1.0"

__all__ = [
    "BAR", "DomainError", "GasfluxError", "GasProperties", "Network", "Node", "Pipe",
    "ValidationError", "density_from_pressure", "israel_network", "load_network",
    "pressure_from_density", "sound_speed", "BoundarySet", "InstabilityError",
    "SolverConfig", "SystemState", "simulate", "steady_state_init", "Trajectory",
]
