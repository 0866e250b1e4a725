"""Validated numerics for the bowl soliton curvature function and its barriers."""

from bowlcert.interval import DivisionByIntervalContainingZero, Interval, exp_iv

__version__ = "0.1.0"

__all__ = ["DivisionByIntervalContainingZero", "Interval", "exp_iv", "__version__"]
