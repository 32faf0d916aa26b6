"""Numerical verification of multilinear Muckenhoupt weight classes on dyadic grids."""
from .checks import Check, check_eq, check_le
from .exponents import ExponentConfig, ExponentError, extrapolation_path, natural_exponents
from .grid import DyadicGrid, GridFunction, Policy
from .weights import VectorWeight, Weight, ml_constant, scalar_constant
from .verify import SuiteConfig, VerificationReport, run_suite

__version__ = "0.1.0"

__all__ = [
    "Check",
    "check_eq",
    "check_le",
    "ExponentConfig",
    "ExponentError",
    "extrapolation_path",
    "natural_exponents",
    "DyadicGrid",
    "GridFunction",
    "Policy",
    "VectorWeight",
    "Weight",
    "ml_constant",
    "scalar_constant",
    "SuiteConfig",
    "VerificationReport",
    "run_suite",
]
