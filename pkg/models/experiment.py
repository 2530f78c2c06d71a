"""
Experiment Config Models
One JSON document per command invocation; every seed is explicit
"""

from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from models.schemas import DynamicsMode, MentalModel, ScheduleSpec, check_rho


class MarketGeneratorSpec(BaseModel):
    """Seeded random market; budgets and coefficients are log-uniform"""
    model_config = ConfigDict(extra="forbid")

    num_goods: int = Field(..., gt=0)
    num_buyers: int = Field(..., gt=0)
    rho: float
    sparsity: float = Field(0.0, ge=0.0, lt=1.0, description="Probability a coefficient is zero")
    budget_range: Tuple[float, float] = (0.5, 2.0)
    coefficient_range: Tuple[float, float] = (0.1, 10.0)
    seed: int

    @field_validator("rho")
    @classmethod
    def _rho_in_wgs_range(cls, value: float) -> float:
        return check_rho(value)

    @field_validator("budget_range", "coefficient_range")
    @classmethod
    def _positive_range(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        low, high = value
        if not 0.0 < low <= high:
            raise ValueError(f"range must satisfy 0 < low <= high, got {value}")
        return value


class MarketSource(BaseModel):
    """Either a market file or a generator spec"""
    model_config = ConfigDict(extra="forbid")

    path: Optional[str] = None
    generate: Optional[MarketGeneratorSpec] = None

    @model_validator(mode="after")
    def _exactly_one(self) -> "MarketSource":
        if (self.path is None) == (self.generate is None):
            raise ValueError("market needs exactly one of 'path' or 'generate'")
        return self


# ============================================================================
# Belief Specs
# ============================================================================

class LevelBeliefSpec(BaseModel):
    """Every seller plays the uniform level-k model"""
    model_config = ConfigDict(extra="forbid")

    kind: Literal["level"] = "level"
    level: int = Field(..., ge=1)


class ProfileBeliefSpec(BaseModel):
    """Inline trees: sellers[j] is seller j's own model (respond node or level shorthand)"""
    model_config = ConfigDict(extra="forbid")

    kind: Literal["profile"] = "profile"
    sellers: Dict[int, MentalModel]


class TreeBeliefSpec(BaseModel):
    """Profile trees loaded from a JSON file, relative to the config file"""
    model_config = ConfigDict(extra="forbid")

    kind: Literal["tree"] = "tree"
    path: str


class RandomBeliefSpec(BaseModel):
    """Fresh random trees at every step, seeded by (seed, step)"""
    model_config = ConfigDict(extra="forbid")

    kind: Literal["random"] = "random"
    max_depth: int = Field(..., ge=1)
    seed: int
    stop_probability: float = Field(0.5, ge=0.0, lt=1.0)


class SequenceBeliefSpec(BaseModel):
    """Cycle through the listed specs, one per step"""
    model_config = ConfigDict(extra="forbid")

    kind: Literal["sequence"] = "sequence"
    items: List["BeliefSpec"] = Field(..., min_length=1)


BeliefSpec = Annotated[
    Union[LevelBeliefSpec, ProfileBeliefSpec, TreeBeliefSpec, RandomBeliefSpec, SequenceBeliefSpec],
    Field(discriminator="kind"),
]

SequenceBeliefSpec.model_rebuild()


# ============================================================================
# Command Sections
# ============================================================================

class DynamicsSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mode: DynamicsMode = DynamicsMode.SYNC
    steps: Optional[int] = Field(None, ge=0)
    epochs: Optional[int] = Field(None, ge=0)

    @model_validator(mode="after")
    def _steps_or_epochs(self) -> "DynamicsSpec":
        if self.steps is not None and self.epochs is not None:
            raise ValueError("give either 'steps' or 'epochs', not both")
        if self.steps is None and self.epochs is None:
            self.steps = 100
        return self


class ContractionSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    pairs: int = Field(500, ge=1)
    seed: int = 0
    beliefs: List[BeliefSpec] = Field(default_factory=list)
    include_identity: bool = True
    slack: float = Field(0.02, ge=0.0)


class ToleranceSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    equilibrium: float = Field(1e-10, gt=0.0)
    residual: float = Field(1e-8, gt=0.0)
    oracle_agreement: float = Field(1e-6, gt=0.0)
    tatonnement_step: float = Field(0.1, gt=0.0)
    tatonnement_tol: float = Field(1e-10, gt=0.0)


class OutputSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    path: Optional[str] = None


class ExperimentConfig(BaseModel):
    """Top-level experiment document"""
    model_config = ConfigDict(extra="forbid")

    market: MarketSource
    p0: Optional[List[float]] = Field(None, description="Initial prices; default is the box corner p_max")
    dynamics: DynamicsSpec = Field(default_factory=DynamicsSpec)
    schedule: ScheduleSpec = Field(default_factory=ScheduleSpec)
    beliefs: BeliefSpec = Field(default_factory=lambda: LevelBeliefSpec(level=1))
    contraction: ContractionSpec = Field(default_factory=ContractionSpec)
    tolerances: ToleranceSpec = Field(default_factory=ToleranceSpec)
    output: OutputSpec = Field(default_factory=OutputSpec)

    def seeds(self) -> Dict[str, int]:
        """Every seed the config carries, for output headers"""
        found: Dict[str, int] = {}
        if self.market.generate is not None:
            found["market"] = self.market.generate.seed
        found["schedule"] = self.schedule.seed
        found["contraction"] = self.contraction.seed
        _collect_belief_seeds(self.beliefs, "beliefs", found)
        for index, spec in enumerate(self.contraction.beliefs):
            _collect_belief_seeds(spec, f"contraction.beliefs.{index}", found)
        return found


def _collect_belief_seeds(spec: BeliefSpec, prefix: str, found: Dict[str, int]) -> None:
    if isinstance(spec, RandomBeliefSpec):
        found[prefix] = spec.seed
    elif isinstance(spec, SequenceBeliefSpec):
        for index, item in enumerate(spec.items):
            _collect_belief_seeds(item, f"{prefix}.{index}", found)
