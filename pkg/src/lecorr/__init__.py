"""Correspondence engine for normal lattice-expansion logics."""

__version__ = "0.1.0"
