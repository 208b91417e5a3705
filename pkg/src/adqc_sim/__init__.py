"""Simulation tools for analog-digital dynamics on annealing hardware."""

__version__ = "0.1.0"
