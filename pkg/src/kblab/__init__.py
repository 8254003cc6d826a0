"""Numerical laboratory for Kakeya-Brascamp-Lieb inequalities."""

__version__ = "0.1.0"
