"""Discrete-event simulator."""

from .engine import RNG_ID, Engine, EngineRunSpec, SpecError, Tally, run
from .units import (BeamSplitterUnit, Fate, Message, Path, absorber_process,
                    analyzer_process, bs_process, passive_process, scatter_filter)

__all__ = [
    "RNG_ID", "Engine", "EngineRunSpec", "SpecError", "Tally", "run",
    "BeamSplitterUnit", "Fate", "Message", "Path", "absorber_process",
    "analyzer_process", "bs_process", "passive_process", "scatter_filter",
]
