"""Dual-process planning controller for agents evading moving hazards."""

__version__ = "0.1.0"
