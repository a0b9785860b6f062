"""Certified device-independent QKD keyrates.

Single-round conditional-entropy lower bounds via a two-qubit reduction,
finite-size key lengths for four protocol variants, advantage-distillation
rate bounds, non-signalling polytope linear programs, and export of
noncommutative-polynomial SDP relaxations.
"""

from diqkd.errors import ComputeError, DomainError, ValidationError

__version__ = "0.1.0"

__all__ = ["ComputeError", "DomainError", "ValidationError", "__version__"]
