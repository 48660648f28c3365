"""Pseudo-spectral mild solutions of incompressible Navier-Stokes on periodic boxes."""
