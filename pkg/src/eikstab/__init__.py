"""Quantitative stability checks for zero-dissipation states of
line-energy models on planar domains."""

__version__ = "0.1.0"
