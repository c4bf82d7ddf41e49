"""Overlattices of the loop lattice via coverings of graphs of groups."""

__version__ = "0.1.0"
