"""Conditional bivariate copula modeling and tests for the simplifying assumption."""

from .copulas import CLAYTON, ClaytonCopula

__all__ = ["CLAYTON", "ClaytonCopula"]

__version__ = "0.1.0"
