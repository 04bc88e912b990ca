"""Numerical verification of metric non-embeddability bounds.

Submodules cover Fourier analysis on the cube, finite metrics and the exact
c1 linear program, cube quotients, optimal transport, the edit metric, L1
certificates, flat tori, metric length and noise sensitivity.
"""

__version__ = "0.1.0"
