"""
Models package for the BRL Market Engine
"""

from .schemas import (
    DynamicsMode,
    ScheduleKind,
    EquilibriumMethod,
    DecayUnit,
    Market,
    PriceVector,
    Allocation,
    BestResponseResult,
    StayPut,
    Respond,
    LevelModel,
    MentalModel,
    BeliefProfile,
    ScheduleSpec,
    TrajectoryPoint,
    Trajectory,
    EquilibriumResult,
    ContractionEstimate,
    DecayFit,
    AnalysisReport
)
from .experiment import (
    MarketGeneratorSpec,
    MarketSource,
    LevelBeliefSpec,
    ProfileBeliefSpec,
    TreeBeliefSpec,
    RandomBeliefSpec,
    SequenceBeliefSpec,
    BeliefSpec,
    DynamicsSpec,
    ContractionSpec,
    ToleranceSpec,
    ExperimentConfig
)

__all__ = [
    "DynamicsMode",
    "ScheduleKind",
    "EquilibriumMethod",
    "DecayUnit",
    "Market",
    "PriceVector",
    "Allocation",
    "BestResponseResult",
    "StayPut",
    "Respond",
    "LevelModel",
    "MentalModel",
    "BeliefProfile",
    "ScheduleSpec",
    "TrajectoryPoint",
    "Trajectory",
    "EquilibriumResult",
    "ContractionEstimate",
    "DecayFit",
    "AnalysisReport",
    "MarketGeneratorSpec",
    "MarketSource",
    "LevelBeliefSpec",
    "ProfileBeliefSpec",
    "TreeBeliefSpec",
    "RandomBeliefSpec",
    "SequenceBeliefSpec",
    "BeliefSpec",
    "DynamicsSpec",
    "ContractionSpec",
    "ToleranceSpec",
    "ExperimentConfig"
]
