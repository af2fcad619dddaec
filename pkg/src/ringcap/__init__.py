"""Capacity, level-set profiles and inequality checks for planar convex rings."""

__version__ = "0.1.0"
