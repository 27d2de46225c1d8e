"""Spin-1 condensate quench simulator: amplifier spectrum, seeded mean-field
dynamics and the correlation / growth analysis of transverse magnetization."""

__version__ = "0.1.0"
