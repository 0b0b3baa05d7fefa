"""Exact computations around quasimaps to moduli of sheaves on a surface."""

__version__ = "0.1.0"
