"""Orbital-rotated Fermi-Hubbard benchmark instances and ground-state solvers."""

__version__ = "0.1.0"
