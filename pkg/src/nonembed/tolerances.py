"""Numerical tolerances shared by every module.

Identities (Parseval, round trips, spectral formulas) are held to
``IDENTITY_TOL``; inequalities get ``INEQUALITY_SLACK`` on the larger side.
"""

IDENTITY_TOL = 1e-10
INEQUALITY_SLACK = 1e-8
SPECTRAL_RESIDUAL_TOL = 1e-9
MEASURE_SUM_TOL = 1e-12

# dense cube tables
MAX_DENSE_DIM = 24
MAX_EXACT_INTEGRAL_DIM = 20
