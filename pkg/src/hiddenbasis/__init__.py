"""Exact simulation of quantum computation in a hidden basis."""

__version__ = "0.1.0"
