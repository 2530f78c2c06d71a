"""
Belief Service - Mental Models and Best-Response-with-Lookahead Updates

A seller j holds a model of every other seller k: either "stay put" (level 0)
or "k best-responds to the prices produced by k's own models of the others".
Seller j then best-responds to the believed price vector pi(p). Level-k
beliefs are the uniform special case; arbitrary trees, mixed depths and
per-step changes are all allowed.

EVALUATION:
- A tree is evaluated bottom-up against the current prices p
- Within one call, a (node, seller) pair is solved once; level-k builders
  share subtrees, so uniform level-k costs O(n * k) solves instead of n^k
"""

import logging
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Protocol, Sequence, Tuple

import numpy as np

from config import settings
from models.schemas import (
    BeliefProfile,
    LevelModel,
    Market,
    MentalModel,
    PriceVector,
    Respond,
    StayPut,
)
from services.best_response_service import best_response_service
from services.market_service import PriceLike, market_service
from utils.errors import ArgumentError, DomainError

# Configure logger for this module
logger = logging.getLogger(__name__)

STAY_PUT = StayPut()


# ============================================================================
# Level-k construction
# ============================================================================

@lru_cache(maxsize=4096)
def level_k_model(seller: int, k: int, n: int) -> MentalModel:
    """Uniform level-k model of `seller`; subtrees are shared objects"""
    if k == 0:
        return STAY_PUT
    return Respond(
        owner=seller,
        children={other: level_k_model(other, k - 1, n) for other in range(n) if other != seller},
    )


class _TreeEvaluator:
    """Memoised evaluation of mental models against one price vector"""

    def __init__(self, market: Market, p: np.ndarray):
        self.market = market
        self.p = p
        self.n = market.num_goods
        self._memo: Dict[Tuple[int, int], float] = {}
        self._alive: List[MentalModel] = []

    def value(self, model: MentalModel, seller: int) -> float:
        if isinstance(model, StayPut):
            return float(self.p[seller])
        if isinstance(model, LevelModel):
            return self.value(level_k_model(seller, model.level, self.n), seller)

        key = (id(model), seller)
        cached = self._memo.get(key)
        if cached is not None:
            return cached

        if model.owner != seller:
            raise DomainError(f"model for seller {seller} is owned by seller {model.owner}")
        believed = self.believed_prices(model.children, seller)
        price = best_response_service.solve(self.market, believed, seller).price

        self._memo[key] = price
        self._alive.append(model)
        return price

    def believed_prices(self, children: Dict[int, MentalModel], seller: int) -> np.ndarray:
        """pi with pi_k from children[k] and pi_seller = p_seller (never read by the solve)"""
        expected = self.n - 1
        if len(children) != expected or seller in children \
                or any(not 0 <= other < self.n for other in children):
            raise DomainError(
                f"models held by seller {seller} must cover exactly the other {expected} sellers, "
                f"got {sorted(children)}"
            )
        believed = self.p.copy()
        for other, child in children.items():
            believed[other] = self.value(child, other)
        return believed


# ============================================================================
# Profile sources
# ============================================================================

class ProfileSource(Protocol):
    """Supplies the belief profile used at a given step"""

    def profile_for(self, step: int, p: np.ndarray) -> BeliefProfile:
        ...


class FixedProfileSource:
    """The same profile at every step"""

    def __init__(self, profile: BeliefProfile):
        self.profile = profile

    def profile_for(self, step: int, p: np.ndarray) -> BeliefProfile:
        return self.profile


class SequenceProfileSource:
    """Cycles through child sources, one per step"""

    def __init__(self, sources: Sequence[ProfileSource]):
        if not sources:
            raise ArgumentError("a profile sequence needs at least one entry")
        self.sources = list(sources)

    def profile_for(self, step: int, p: np.ndarray) -> BeliefProfile:
        return self.sources[step % len(self.sources)].profile_for(step, p)


class RandomProfileSource:
    """Fresh random trees each step, reproducible from (seed, step)"""

    def __init__(self, n: int, max_depth: int, seed: int, stop_probability: float = 0.5):
        if max_depth < 1:
            raise ArgumentError(f"max_depth must be at least 1, got {max_depth}")
        self.n = n
        self.max_depth = max_depth
        self.seed = seed
        self.stop_probability = stop_probability

    def profile_for(self, step: int, p: np.ndarray) -> BeliefProfile:
        rng = np.random.default_rng([self.seed, step])
        return belief_service.random_profile(self.n, self.max_depth, rng, self.stop_probability)


# ============================================================================
# Service
# ============================================================================

class BeliefService:
    """
    Mental-model construction, validation and BRL price updates
    """

    def level_k_children(self, j: int, k: int, n: int) -> Dict[int, MentalModel]:
        """
        Models seller j holds of every other seller under uniform level-k beliefs

        Raises:
            ArgumentError: If k < 1 or n < 1 (level 0 only appears as a child)
            IndexError: If j is not a seller
        """
        if k < 1:
            raise ArgumentError(f"a seller's own update has level >= 1, got k={k}")
        if n < 1:
            raise ArgumentError(f"market needs at least one seller, got n={n}")
        if not 0 <= j < n:
            raise IndexError(f"seller index {j} out of range for {n} sellers")
        return dict(level_k_model(j, k, n).children)

    def uniform_level_profile(self, n: int, k: int) -> BeliefProfile:
        """Every seller plays level k"""
        return BeliefProfile(assignments={j: self.level_k_children(j, k, n) for j in range(n)})

    def model_level(self, model: MentalModel) -> int:
        """0 for stay-put, 1 + max over children for respond nodes"""
        memo: Dict[int, int] = {}

        def level(node: MentalModel) -> int:
            if isinstance(node, StayPut):
                return 0
            if isinstance(node, LevelModel):
                return node.level
            if id(node) not in memo:
                memo[id(node)] = 1 + max((level(child) for child in node.children.values()), default=0)
            return memo[id(node)]

        return level(model)

    def profile_level(self, profile: BeliefProfile) -> int:
        """Highest update level across sellers"""
        return max(
            (1 + max((self.model_level(m) for m in children.values()), default=0)
             for children in profile.assignments.values()),
            default=0,
        )

    def validate_profile(self, profile: BeliefProfile, n: int, max_depth: Optional[int] = None) -> None:
        """
        Check coverage of every seller and the depth cap

        Raises:
            DomainError: If a seller is missing or holds models of the wrong sellers
            ArgumentError: If some update is deeper than max_depth
        """
        max_depth = settings.MAX_BELIEF_DEPTH if max_depth is None else max_depth
        missing = set(range(n)) - set(profile.assignments)
        extra = set(profile.assignments) - set(range(n))
        if missing or extra:
            raise DomainError(f"profile must assign models for sellers 0..{n - 1}; missing={sorted(missing)} extra={sorted(extra)}")

        checked: set = set()

        def check(node: MentalModel, seller: int) -> None:
            if not isinstance(node, Respond) or (id(node), seller) in checked:
                return
            if node.owner != seller:
                raise DomainError(f"model for seller {seller} is owned by seller {node.owner}")
            others = set(range(n)) - {seller}
            if set(node.children) != others:
                raise DomainError(f"respond node of seller {seller} must cover {sorted(others)}")
            checked.add((id(node), seller))
            for other, child in node.children.items():
                check(child, other)

        for seller, children in profile.assignments.items():
            others = set(range(n)) - {seller}
            if set(children) != others:
                raise DomainError(f"seller {seller} must hold models of exactly {sorted(others)}, got {sorted(children)}")
            for other, child in children.items():
                check(child, other)

        depth = self.profile_level(profile)
        if depth > max_depth:
            raise ArgumentError(f"belief depth {depth} exceeds the configured cap {max_depth}")

    def profile_from_models(self, models: Dict[int, MentalModel], n: int) -> BeliefProfile:
        """
        Build a profile from each seller's own model

        Args:
            models: seller -> respond node owned by that seller, or level shorthand (level >= 1)
            n: Number of sellers
        """
        assignments: Dict[int, Dict[int, MentalModel]] = {}
        for seller in range(n):
            if seller not in models:
                raise DomainError(f"no model given for seller {seller}")
            model = models[seller]
            if isinstance(model, LevelModel):
                assignments[seller] = self.level_k_children(seller, model.level, n)
            elif isinstance(model, Respond):
                if model.owner != seller:
                    raise DomainError(f"model listed for seller {seller} is owned by seller {model.owner}")
                assignments[seller] = dict(model.children)
            else:
                raise DomainError(f"seller {seller} must best-respond to something; stay-put is only a child model")
        profile = BeliefProfile(assignments=assignments)
        self.validate_profile(profile, n)
        return profile

    def random_model(
        self,
        seller: int,
        depth: int,
        n: int,
        rng: np.random.Generator,
        stop_probability: float = 0.5,
    ) -> MentalModel:
        """Random tree for `seller` of level at most depth"""
        if depth == 0 or rng.random() < stop_probability:
            return STAY_PUT
        return Respond(
            owner=seller,
            children={
                other: self.random_model(other, depth - 1, n, rng, stop_probability)
                for other in range(n) if other != seller
            },
        )

    def random_profile(
        self,
        n: int,
        max_depth: int,
        rng: np.random.Generator,
        stop_probability: float = 0.5,
    ) -> BeliefProfile:
        """Random profile whose updates have level between 1 and max_depth"""
        return BeliefProfile(assignments={
            seller: {
                other: self.random_model(other, max_depth - 1, n, rng, stop_probability)
                for other in range(n) if other != seller
            }
            for seller in range(n)
        })

    # ------------------------------------------------------------------
    # Evaluation
    # ------------------------------------------------------------------

    def evaluate_model(
        self,
        market: Market,
        model: MentalModel,
        p: PriceLike,
        seller: Optional[int] = None,
    ) -> float:
        """
        Price the model predicts for its seller at current prices p

        Args:
            market: Market instance
            model: Stay-put, respond or level node
            p: Current prices
            seller: Seller the model describes; defaults to the owner of a respond node

        Returns:
            p_seller for stay-put; otherwise the seller's best response to the
            prices generated by the children
        """
        if seller is None:
            if not isinstance(model, Respond):
                raise ArgumentError("a stay-put or level model needs an explicit seller")
            seller = model.owner
        market_service.check_good(market, seller)
        prices = market_service.prices(market, p)
        return _TreeEvaluator(market, prices).value(model, seller)

    def believed_prices(self, market: Market, profile: BeliefProfile, p: PriceLike, j: int) -> PriceVector:
        """pi^iota(p) as seen by seller j"""
        prices = market_service.prices(market, p)
        evaluator = _TreeEvaluator(market, prices)
        return PriceVector.from_array(evaluator.believed_prices(profile.assignments[j], j))

    def update_array(
        self,
        market: Market,
        profile: BeliefProfile,
        p: np.ndarray,
        sellers: Optional[Iterable[int]] = None,
    ) -> np.ndarray:
        """BRL update of the given sellers for validated prices; others copied"""
        evaluator = _TreeEvaluator(market, p)
        updated = p.copy()
        for j in range(market.num_goods) if sellers is None else sellers:
            if j not in profile.assignments:
                raise DomainError(f"profile has no beliefs for seller {j}")
            believed = evaluator.believed_prices(profile.assignments[j], j)
            updated[j] = best_response_service.solve(market, believed, j).price
        return updated

    def brl_update(
        self,
        market: Market,
        profile: BeliefProfile,
        p: PriceLike,
        sellers: Optional[Iterable[int]] = None,
    ) -> PriceVector:
        """
        F^iota(p): each seller best-responds to the prices its beliefs predict

        With an all-stay-put profile this is exactly best_response_all.
        """
        prices = market_service.prices(market, p)
        return PriceVector.from_array(self.update_array(market, profile, prices, sellers))


# Global service instance
belief_service = BeliefService()
