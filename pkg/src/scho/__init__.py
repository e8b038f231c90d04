"""Stokes / Cahn-Hilliard-Oono simulation and optimal control on a MAC grid."""

__version__ = "0.1.0"
