"""
Pydantic Models for the BRL Market Engine
Defines the market instance, price state, belief trees, trajectories and
analysis results shared by every service
"""

import math
from enum import Enum
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Discriminator,
    Field,
    PrivateAttr,
    Tag,
    field_validator,
    model_validator,
)

from utils.helpers import content_hash


WGS_MESSAGE = (
    "rho must lie strictly inside (0, 1): only the weak-gross-substitutes "
    "regime is supported (complementary goods, rho < 0, are out of scope)"
)


# ============================================================================
# Enums
# ============================================================================

class DynamicsMode(str, Enum):
    """How sellers are activated over time"""
    SYNC = "sync"
    ASYNC = "async"


class ScheduleKind(str, Enum):
    """Built-in activation schedules"""
    FULL = "full"
    ROUND_ROBIN = "round_robin"
    RANDOM = "random"


class EquilibriumMethod(str, Enum):
    """Which oracle produced an equilibrium"""
    FIXED_POINT = "fixed-point"
    TATONNEMENT = "tatonnement"


class DecayUnit(str, Enum):
    """Time axis used when fitting a decay rate"""
    STEPS = "steps"
    EPOCHS = "epochs"


def check_rho(value: float) -> float:
    """Shared rho validation for markets and generator specs"""
    if not math.isfinite(value) or not 0.0 < value < 1.0:
        raise ValueError(f"{WGS_MESSAGE}; got rho={value}")
    return value


# ============================================================================
# Market Model
# ============================================================================

class Market(BaseModel):
    """
    A CES Fisher market in the WGS regime

    Each good is owned by one seller and has unit supply. Coefficient rows are
    buyers, columns are goods. The numpy views are built once at construction.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    num_goods: int = Field(..., gt=0, description="Number of goods (one per seller)")
    num_buyers: int = Field(..., gt=0, description="Number of buyers")
    rho: float = Field(..., description="CES substitution parameter in (0, 1)")
    budgets: Tuple[float, ...] = Field(..., description="Buyer budgets b_i > 0")
    coefficients: Tuple[Tuple[float, ...], ...] = Field(
        ..., description="Preference weights c_ij >= 0, row = buyer"
    )

    _budget_array: np.ndarray = PrivateAttr()
    _coefficient_array: np.ndarray = PrivateAttr()
    _log_coefficients: np.ndarray = PrivateAttr()
    _cache: Dict[str, Any] = PrivateAttr(default_factory=dict)

    @field_validator("rho")
    @classmethod
    def _rho_in_wgs_range(cls, value: float) -> float:
        return check_rho(value)

    @model_validator(mode="after")
    def _check_shape_and_support(self) -> "Market":
        if len(self.budgets) != self.num_buyers:
            raise ValueError(
                f"budgets has {len(self.budgets)} entries, expected num_buyers={self.num_buyers}"
            )
        if len(self.coefficients) != self.num_buyers:
            raise ValueError(
                f"coefficients has {len(self.coefficients)} rows, expected num_buyers={self.num_buyers}"
            )
        for i, row in enumerate(self.coefficients):
            if len(row) != self.num_goods:
                raise ValueError(
                    f"coefficient row {i} has {len(row)} entries, expected num_goods={self.num_goods}"
                )

        b = np.asarray(self.budgets, dtype=float)
        c = np.asarray(self.coefficients, dtype=float)
        if not np.all(np.isfinite(b)) or np.any(b <= 0):
            raise ValueError("every budget must be finite and strictly positive")
        if not np.all(np.isfinite(c)) or np.any(c < 0):
            raise ValueError("coefficients must be finite and non-negative")

        positive = c > 0
        idle_goods = np.flatnonzero(~positive.any(axis=0))
        if idle_goods.size:
            raise ValueError(f"goods {idle_goods.tolist()} have no buyer with a positive coefficient")
        idle_buyers = np.flatnonzero(~positive.any(axis=1))
        if idle_buyers.size:
            raise ValueError(f"buyers {idle_buyers.tolist()} have no good with a positive coefficient")
        return self

    def model_post_init(self, __context: Any) -> None:
        b = np.asarray(self.budgets, dtype=float)
        c = np.asarray(self.coefficients, dtype=float)
        log_c = np.full(c.shape, -np.inf)
        np.log(c, out=log_c, where=c > 0)
        for array in (b, c, log_c):
            array.setflags(write=False)
        self._budget_array = b
        self._coefficient_array = c
        self._log_coefficients = log_c

    @classmethod
    def from_arrays(cls, budgets: Any, coefficients: Any, rho: float) -> "Market":
        """Build a market from array-likes, inferring the dimensions"""
        c = np.atleast_2d(np.asarray(coefficients, dtype=float))
        return cls(
            num_goods=c.shape[1],
            num_buyers=c.shape[0],
            rho=float(rho),
            budgets=tuple(float(v) for v in np.atleast_1d(budgets)),
            coefficients=tuple(tuple(float(v) for v in row) for row in c),
        )

    @property
    def epsilon(self) -> float:
        """epsilon = rho / (1 - rho)"""
        return self.rho / (1.0 - self.rho)

    @property
    def total_budget(self) -> float:
        return float(np.sum(self._budget_array))

    @property
    def budget_array(self) -> np.ndarray:
        return self._budget_array

    @property
    def coefficient_array(self) -> np.ndarray:
        return self._coefficient_array

    @property
    def log_coefficients(self) -> np.ndarray:
        """log c_ij, with -inf where c_ij = 0"""
        return self._log_coefficients

    @property
    def positive_mask(self) -> np.ndarray:
        return self._coefficient_array > 0

    @property
    def cache(self) -> Dict[str, Any]:
        """Per-instance memo for derived quantities (price box)"""
        return self._cache

    def content_hash(self) -> str:
        return content_hash(self.model_dump(mode="json"))

    # private numpy views and the memo must not take part in comparisons
    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, Market):
            return NotImplemented
        return self.model_dump() == other.model_dump()

    def __hash__(self) -> int:
        return hash(self.content_hash())


# ============================================================================
# Price State & Allocations
# ============================================================================

class PriceVector(BaseModel):
    """Strictly positive per-good prices"""
    model_config = ConfigDict(frozen=True)

    prices: Tuple[float, ...] = Field(..., min_length=1)

    @field_validator("prices")
    @classmethod
    def _strictly_positive(cls, value: Tuple[float, ...]) -> Tuple[float, ...]:
        for j, price in enumerate(value):
            if not math.isfinite(price) or price <= 0:
                raise ValueError(f"price {j} must be finite and strictly positive, got {price}")
        return value

    @classmethod
    def from_array(cls, values: Any) -> "PriceVector":
        return cls(prices=tuple(float(v) for v in np.asarray(values, dtype=float).ravel()))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.prices, dtype=float)

    def __len__(self) -> int:
        return len(self.prices)

    def __getitem__(self, j: int) -> float:
        return self.prices[j]


class Allocation(BaseModel):
    """Buyer-by-good quantity matrix x_ij"""
    model_config = ConfigDict(frozen=True)

    quantities: Tuple[Tuple[float, ...], ...]

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.quantities, dtype=float)


class BestResponseResult(BaseModel):
    """Market-clearing price of one seller given the others' prices"""
    model_config = ConfigDict(frozen=True)

    good: int = Field(..., ge=0)
    price: float = Field(..., gt=0)
    residual: float = Field(..., description="|g(price, p)| at the returned price")
    iterations: int = Field(..., ge=0)


# ============================================================================
# Mental Models
# ============================================================================

class StayPut(BaseModel):
    """Level-0 model: the modelled seller keeps its current price"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["stay"] = "stay"


class LevelModel(BaseModel):
    """Shorthand node expanding to the uniform level-k model of its seller"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["level"] = "level"
    level: int = Field(..., ge=0)


class Respond(BaseModel):
    """
    The owner best-responds to the prices produced by its children

    children maps every other seller to the model believed for it; the owner
    itself never appears among its children.
    """
    model_config = ConfigDict(frozen=True)

    kind: Literal["respond"] = "respond"
    owner: int = Field(..., ge=0)
    children: Dict[int, "MentalModel"] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _owner_not_a_child(self) -> "Respond":
        if self.owner in self.children:
            raise ValueError(f"seller {self.owner} cannot hold a model of itself")
        return self


def _model_kind(value: Any) -> Optional[str]:
    if isinstance(value, dict):
        if "kind" in value:
            return value["kind"]
        return "level" if "level" in value else None
    return getattr(value, "kind", None)


MentalModel = Annotated[
    Union[
        Annotated[StayPut, Tag("stay")],
        Annotated[Respond, Tag("respond")],
        Annotated[LevelModel, Tag("level")],
    ],
    Discriminator(_model_kind),
]

Respond.model_rebuild()


class BeliefProfile(BaseModel):
    """
    Per-seller beliefs: assignments[j][k] is the model seller j holds of seller k

    Profiles need not be consistent across sellers or across steps.
    """
    model_config = ConfigDict(frozen=True)

    assignments: Dict[int, Dict[int, MentalModel]]

    @model_validator(mode="after")
    def _no_self_models(self) -> "BeliefProfile":
        for seller, children in self.assignments.items():
            if seller in children:
                raise ValueError(f"seller {seller} cannot hold a model of itself")
        return self


# ============================================================================
# Dynamics
# ============================================================================

class ScheduleSpec(BaseModel):
    """Which sellers update at each step"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: ScheduleKind = ScheduleKind.FULL
    window: Optional[int] = Field(None, ge=1, description="Fairness window W")
    seed: int = Field(0, description="Seed for random schedules")
    inclusion_probability: float = Field(0.5, gt=0.0, le=1.0)


class TrajectoryPoint(BaseModel):
    """One recorded price vector"""
    model_config = ConfigDict(frozen=True)

    step: int = Field(..., ge=0)
    epoch: int = Field(..., ge=0)
    prices: Tuple[float, ...]
    active: Tuple[int, ...] = Field(default_factory=tuple)
    distance: Optional[float] = None
    residual: Optional[float] = None


class Trajectory(BaseModel):
    """
    Ordered record p^0, p^1, ..., p^T of a run

    epoch_ends holds the point indices at which an epoch completed (every
    seller had updated at least once since the previous boundary).
    """
    mode: DynamicsMode
    points: List[TrajectoryPoint]
    epoch_ends: List[int] = Field(default_factory=list)

    @property
    def final_prices(self) -> PriceVector:
        return PriceVector(prices=self.points[-1].prices)

    @property
    def price_matrix(self) -> np.ndarray:
        return np.asarray([point.prices for point in self.points], dtype=float)

    def __len__(self) -> int:
        return len(self.points)


# ============================================================================
# Analysis Results
# ============================================================================

class EquilibriumResult(BaseModel):
    """Equilibrium prices with their clearing certificate"""
    model_config = ConfigDict(frozen=True)

    prices: PriceVector
    clearing_residual: float = Field(..., ge=0.0)
    iterations: int = Field(..., ge=0)
    method: EquilibriumMethod


class ContractionEstimate(BaseModel):
    """Sampled lower estimate of a map's Thompson contraction constant"""
    model_config = ConfigDict(frozen=True)

    label: str = "update"
    ratio_max: float = Field(..., ge=0.0)
    sample_count: int = Field(..., ge=0)
    seed: int
    ratios: Tuple[float, ...] = Field(default_factory=tuple)


class DecayFit(BaseModel):
    """Least-squares slope of log-distance to equilibrium"""
    model_config = ConfigDict(frozen=True)

    label: str = "run"
    rate: float
    residual: float = Field(..., ge=0.0)
    unit: DecayUnit = DecayUnit.STEPS
    points: int = Field(..., ge=0)


class AnalysisReport(BaseModel):
    """Structured report written by the equilibrium and contraction commands"""
    header: Dict[str, Any] = Field(default_factory=dict)
    market_hash: str
    method: str
    equilibrium: Optional[EquilibriumResult] = None
    oracle: Optional[EquilibriumResult] = None
    oracle_distance: Optional[float] = None
    contraction: List[ContractionEstimate] = Field(default_factory=list)
    decay: List[DecayFit] = Field(default_factory=list)
