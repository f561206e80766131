"""Finite-time Lyapunov exponents and Lyapunov dimensions of benchmark flows and maps."""

__version__ = "0.1.0"
