"""Bi-fidelity stochastic collocation for multiscale kinetic equations."""

__version__ = "0.1.0"
