"""Temporal logic tree compiler with level-set and hybrid-zonotope backends."""
