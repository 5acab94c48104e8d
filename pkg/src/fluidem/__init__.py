"""Numerical laboratory for acoustic phase vortices as an electromagnetic analogue."""

__version__ = "0.1.0"
