"""Numerical laboratory for intrinsic square functions on weighted Morrey spaces."""

__version__ = "0.1.0"
