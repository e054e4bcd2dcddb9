"""Sampling discretization of integral norms on finite-dimensional function spaces.

Modules: ``spaces`` (frequency sets, point sets, function systems),
``numkernel`` (linear algebra and LP kernels), ``exact`` (exact cubature
and weighted discretization), ``greedy``, ``sampling`` (randomized
constructions), ``certify``, ``hypercross``, ``universal``, ``extremal``
and the ``cli`` front end.
"""
from .config import DEFAULT_TOL, Tolerances, child_seed
from .errors import (Infeasible, InvalidArgument, NormgridError, NumericalFailure,
                     PreconditionViolation, SpanDeficiency)

__version__ = "0.1.0"

__all__ = ["DEFAULT_TOL", "Tolerances", "child_seed", "Infeasible", "InvalidArgument",
           "NormgridError", "NumericalFailure", "PreconditionViolation", "SpanDeficiency",
           "__version__"]
