"""Numerical experiments with unsharp (non-ideal) eigenvalues in hidden-value models."""

__version__ = "0.1.0"
