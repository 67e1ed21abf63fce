"""Fermi-Hubbard VQE optimizer workbench."""

__version__ = "0.1.0"
