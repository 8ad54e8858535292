"""Exact computations with Jacobi diagrams, equivariant linking matrices
and the rational Aarhus integral."""

__version__ = "0.1.0"
