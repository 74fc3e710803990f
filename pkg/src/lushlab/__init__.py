"""Computational tools for lush spaces, numerical index and L/M-structure."""

__version__ = "0.1.0"
