"""Koppelman integral operators on du Val surface singularities, numerically."""

__version__ = "0.1.0"
