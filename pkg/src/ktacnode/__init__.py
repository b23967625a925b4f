"""Numerical laboratory for nonintersecting Brownian bridges on the circle.

Exact finite-n winding distributions and kernels come from discrete
Gaussian orthogonal polynomials with a complex weight; the large-n side is
built from Hastings-McLeod Painleve-II functions and their Backlund ladder.
"""

__version__ = "0.1.0"

from .precision import PrecisionContext  # noqa: F401
from .errors import (  # noqa: F401
    KTacnodeError,
    DomainError,
    NonexistenceError,
    AccuracyError,
    RegimeError,
    SolverError,
)
