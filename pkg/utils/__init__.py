"""
Utilities package for the BRL Market Engine
"""

from .errors import (
    MarketError,
    DomainError,
    ArgumentError,
    PriceBoxError,
    SolverError,
    OracleError,
    InsufficientDataError,
    PropertyViolation
)
from .helpers import canonical_json, content_hash, render_float

__all__ = [
    "MarketError",
    "DomainError",
    "ArgumentError",
    "PriceBoxError",
    "SolverError",
    "OracleError",
    "InsufficientDataError",
    "PropertyViolation",
    "canonical_json",
    "content_hash",
    "render_float"
]
