"""Busy period and busy cycle distributions of the M/D/inf queue."""

__version__ = "0.1.0"
