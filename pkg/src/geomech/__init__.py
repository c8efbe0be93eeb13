"""Geometric mechanics toolkit: Hamiltonian, magnetic and constrained flows,
Jacobi-metric geodesics, contact-type tests and Reeb reparametrizations."""

from . import contact, maupertuis, mechanics, models, numkit
from .errors import *  # noqa: F401,F403
from .trajectory import PhaseState, Trajectory

__version__ = "0.1.0"

__all__ = ["PhaseState", "Trajectory", "numkit", "mechanics", "maupertuis", "contact", "models"]
