"""Analytic noise theory and Monte-Carlo cross-checks for phase-locked sub-Poissonian lasers."""

from .model import LaserParams, OperatingPoint, solve_steady_state, validate_regime

__version__ = "0.1.0"

__all__ = ["LaserParams", "OperatingPoint", "solve_steady_state", "validate_regime"]
