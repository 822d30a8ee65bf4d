"""Traveling vortex-sheet pairs for the SQG equation by spectral Newton continuation."""

from __future__ import annotations

from .trig import EvenSeries, Grid, OddSeries, analyze, differentiate, synth, weighted_norm
from .contour import ResidualPair, SheetState, eval_F, eval_G, eval_velocity
from .solver import ContinuationRecord, SolverConfig, closure_W, continuation, newton_solve

__all__ = [
    "EvenSeries",
    "OddSeries",
    "Grid",
    "synth",
    "analyze",
    "differentiate",
    "weighted_norm",
    "SheetState",
    "ResidualPair",
    "eval_F",
    "eval_G",
    "eval_velocity",
    "SolverConfig",
    "ContinuationRecord",
    "closure_W",
    "newton_solve",
    "continuation",
]
