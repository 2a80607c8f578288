"""Numerical laboratory for completely positive semigroups and their dilations."""

__version__ = "0.1.0"
