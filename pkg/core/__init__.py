"""Concentration inequalities for polynomials of Ising models: models, norms, bounds and a validation harness."""

__version__ = "1.0.0"
