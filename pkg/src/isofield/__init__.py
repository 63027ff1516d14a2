"""Isotropic random fields with values in E^3 and S^2(E^3)."""
__version__ = "0.1.0"
