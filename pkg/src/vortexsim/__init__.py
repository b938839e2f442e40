"""Point-vortex dynamics on the 2-torus with damping, Poisson vortex injection,
and a Monte Carlo harness verifying the statistical laws of the system."""

from .state import EventStream, LawParams, VortexEnsemble, VortexEvent
from .kernels import KernelConfig

__all__ = [
    "EventStream",
    "LawParams",
    "VortexEnsemble",
    "VortexEvent",
    "KernelConfig",
]

__version__ = "0.1.0"
