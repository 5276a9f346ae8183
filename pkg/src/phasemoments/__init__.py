"""Exponential moments of canonical phase from simulated homodyne data."""

__version__ = "0.1.0"
