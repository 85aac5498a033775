"""Steady-state four-wave-mixing frequency conversion in a diamond-configuration atomic vapour."""

__version__ = "0.1.0"
