"""Evolvability model: a steady-state GA whose genome gates its own mutability."""

__version__ = "0.1.0"
