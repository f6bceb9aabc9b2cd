"""Gauss-Codazzi solver via the Chaplygin-gas formulation, with surface reconstruction.

Submodules are imported on demand (``from gcflow import solver``) so that the
command-line entry point can size the numba thread pool before numba loads.
"""
__version__ = "0.1.0"
