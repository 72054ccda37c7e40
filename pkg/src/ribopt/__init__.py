"""Eigenvalue optimization toolkit for membranes stiffened by length-budgeted
Dirichlet segment networks."""

__version__ = "0.1.0"
