"""Out-of-time-ordered correlations of Markovian open systems by quantum regression."""
from .emitter import EmitterParams
from .interferometer import InterferometerParams, g2, g2_difference, g2_scan
from .operators import build_liouvillian, evolve, expectation, steady_state
from .qrt import Engine, Event, NoiseModel, correlation, two_time

__all__ = [
    "EmitterParams",
    "Engine",
    "Event",
    "InterferometerParams",
    "NoiseModel",
    "build_liouvillian",
    "correlation",
    "evolve",
    "expectation",
    "g2",
    "g2_difference",
    "g2_scan",
    "steady_state",
    "two_time",
]
