"""Dirichlet eigenvalue stability lab for nested grid domains."""

__version__ = "0.1.0"
