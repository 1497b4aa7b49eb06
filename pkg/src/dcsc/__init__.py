"""Sparse interior-point analysis of DC security-constraint formulations."""

__version__ = "0.1.0"
