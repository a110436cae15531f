"""Numerical laboratory for the scaled Navier-Stokes-Poisson system."""

__version__ = "0.1.0"
