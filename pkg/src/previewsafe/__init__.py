"""Robust controlled invariant sets for linear systems with disturbance preview."""

__version__ = "0.1.0"
