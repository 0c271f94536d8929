"""Finite-dimensional workbench for Fell bundles over inverse semigroups."""

__version__ = "0.1.0"
