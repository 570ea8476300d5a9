"""Variational solver for a coupled Hardy-Sobolev elliptic system on radial functions."""

from .closedform import (
    HypothesisViolation,
    InvalidParameter,
    ProblemParams,
    best_constant,
    critical_exponent,
    critical_level,
    hardy_constant,
)
from .grid import RadialField, StatePair, build_grid
from .harness import classify_regime, nu_sweep, run_config
from .solvers import SolverConfig, ground_state, mountain_pass, semitrivial

__all__ = [
    "HypothesisViolation",
    "InvalidParameter",
    "ProblemParams",
    "best_constant",
    "critical_exponent",
    "critical_level",
    "hardy_constant",
    "RadialField",
    "StatePair",
    "build_grid",
    "classify_regime",
    "nu_sweep",
    "run_config",
    "SolverConfig",
    "ground_state",
    "mountain_pass",
    "semitrivial",
]
