"""Spectral solver and verification toolkit for damped wave equations
with damping that grows at infinity.

The packages computes the point spectrum of the first-order generator via
algebraic characteristic equations fed by anharmonic-oscillator eigenvalues,
verifies it against a direct grid discretization of the quadratic pencil
T(lambda) = -Laplace + q + 2*lambda*a + lambda^2, demonstrates the real
essential spectrum through WKB singular sequences, and exports plot-ready
spectra.
"""

__version__ = "0.1.0"

from . import convergence, dispersion, oscillator, pencil, quasimodes  # noqa: F401,E402
