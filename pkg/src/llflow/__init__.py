"""Geometric flows between hyperbolic planes: maps, gauges, diagnostics."""

from . import backend, fields, flows, gauge, geometry, harmonic, kernels

__version__ = "0.1.0"

__all__ = ["backend", "fields", "flows", "gauge", "geometry", "harmonic",
           "kernels", "__version__"]
