"""Soliton dispersion, velocity and propagation in resonant two-level media."""

__version__ = "0.1.0"
