"""Stochastic simulation of the Brane Calculus on a copy-on-write stochastic machine."""

__version__ = "0.1.0"
