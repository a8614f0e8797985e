"""Numerical laboratory for double ergodic averages along fractional
power orbit sequences over concrete measure preserving systems."""

__version__ = "0.1.0"
