"""Numerical laboratory for the Dirac operator of generalized Taub-NUT metrics."""

__version__ = "0.1.0"
