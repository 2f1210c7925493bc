"""Antenna-configuration selection for reconfigurable-antenna MIMO links."""
from .channel import Configuration, FullChannel, SystemDims, capacity_objective, sample_channel, snr_objective
from .results import SolverResult

__all__ = [
    "Configuration",
    "FullChannel",
    "SystemDims",
    "SolverResult",
    "capacity_objective",
    "sample_channel",
    "snr_objective",
]
__version__ = "0.1.0"
