"""Spectral laboratory for stochastically forced incompressible flow on the
periodic box: intermittent building blocks, one convex-integration iteration
with a certified stress ledger, and a Galerkin significance bench for
uniqueness experiments."""

__version__ = "0.1.0"
