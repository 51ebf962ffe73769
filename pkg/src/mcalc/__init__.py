"""Coordinate-free matrix calculus: symbolic Frechet derivatives, operator-calculus expansion, numerical oracles."""

__version__ = "0.1.0"
