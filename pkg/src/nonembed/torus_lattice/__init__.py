"""Flat tori R^n / L: lattice geometry and the inequalities checked on them."""

from .lattice import *  # noqa: F401,F403
from .torus import *  # noqa: F401,F403
