"""
Services package for the BRL Market Engine
"""

from .market_service import market_service
from .best_response_service import best_response_service
from .belief_service import (
    belief_service,
    FixedProfileSource,
    SequenceProfileSource,
    RandomProfileSource
)
from .analysis_service import analysis_service
from .dynamics_service import dynamics_service
from .generator_service import generator_service

__all__ = [
    "market_service",
    "best_response_service",
    "belief_service",
    "FixedProfileSource",
    "SequenceProfileSource",
    "RandomProfileSource",
    "analysis_service",
    "dynamics_service",
    "generator_service"
]
