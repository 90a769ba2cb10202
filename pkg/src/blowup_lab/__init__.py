"""Numerical laboratory for controlled finite-time blow-up."""

__version__ = "0.1.0"
