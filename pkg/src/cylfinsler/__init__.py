"""Finsler metrics with cylindrical symmetry: fundamental tensor, spray,
Douglas curvature and projective-flatness checks for F = |ybar| phi(x0, r, s, z)."""
from .expr import parse, ParseError, DomainError, UnboundVariableError, UnknownFunctionError
from .coords import ConfigPoint, TangentVector, ReducedPoint, reduce, symmetry_check
from .core import PhiModel, metric_tensor, validity_scan, GridSpec
from .spray import spray_coefficients, spray_oracle_pq, spray_fields, spray_divergence

__version__ = "0.1.0"

__all__ = [
    "parse", "ParseError", "DomainError", "UnboundVariableError", "UnknownFunctionError",
    "ConfigPoint", "TangentVector", "ReducedPoint", "reduce", "symmetry_check",
    "PhiModel", "metric_tensor", "validity_scan", "GridSpec",
    "spray_coefficients", "spray_oracle_pq", "spray_fields", "spray_divergence",
]
