"""
Market Service - CES Demand, Spending and Utility

Evaluates buyer behaviour in a CES Fisher market at given prices.

NUMERICS:
- Every power (c_ik / p_k)^eps is handled as eps * (log c_ik - log p_k)
- Normalising sums go through scipy's log-sum-exp, so large eps (rho close
  to 1) cannot overflow
- Zero coefficients are carried as log c = -inf and drop out exactly
"""

import logging
from typing import Any, Optional, Tuple, Union

import numpy as np
from scipy.special import expit, logsumexp

from config import settings
from models.schemas import Allocation, Market, PriceVector
from utils.errors import DomainError

# Configure logger for this module
logger = logging.getLogger(__name__)

PriceLike = Union[PriceVector, np.ndarray, Tuple[float, ...], list]


class MarketService:
    """
    Pure demand-side computations for a Market

    All methods are side-effect free apart from memoising the price box on
    the (immutable) market instance.
    """

    # ------------------------------------------------------------------
    # Input handling
    # ------------------------------------------------------------------

    def prices(self, market: Market, p: PriceLike, ignore: int = None) -> np.ndarray:
        """
        Validate a price input and return it as a float array

        Args:
            market: Market the prices belong to
            p: PriceVector or array-like of length num_goods
            ignore: Index whose entry is not read (replaced by 1.0)

        Returns:
            Fresh float array

        Raises:
            DomainError: On wrong length, non-finite or non-positive entries
        """
        array = p.array if isinstance(p, PriceVector) else np.array(p, dtype=float).ravel()
        if array.shape != (market.num_goods,):
            raise DomainError(
                f"price vector has {array.size} entries, market has {market.num_goods} goods"
            )
        if ignore is not None:
            array = array.copy()
            array[ignore] = 1.0
        if not np.all(np.isfinite(array)) or np.any(array <= 0):
            raise DomainError(f"prices must be finite and strictly positive, got {array.tolist()}")
        return array

    def check_good(self, market: Market, j: int) -> int:
        if not 0 <= j < market.num_goods:
            raise IndexError(f"good index {j} out of range for {market.num_goods} goods")
        return j

    def check_buyer(self, market: Market, i: int) -> int:
        if not 0 <= i < market.num_buyers:
            raise IndexError(f"buyer index {i} out of range for {market.num_buyers} buyers")
        return i

    # ------------------------------------------------------------------
    # Demand
    # ------------------------------------------------------------------

    def log_terms(self, market: Market, p: np.ndarray) -> np.ndarray:
        """eps * (log c_ik - log p_k); -inf where c_ik = 0"""
        return market.epsilon * (market.log_coefficients - np.log(p)[np.newaxis, :])

    def demand_matrix(self, market: Market, p: np.ndarray) -> np.ndarray:
        """x_ij(p) for already validated prices"""
        terms = self.log_terms(market, p)
        shares = np.exp(terms - logsumexp(terms, axis=1, keepdims=True))
        return market.budget_array[:, np.newaxis] * shares / p[np.newaxis, :]

    def demand(self, market: Market, p: PriceLike) -> Allocation:
        """
        Utility-maximising CES allocation at prices p

        x_ij = (b_i / p_j) * (c_ij / p_j)^eps / sum_k (c_ik / p_k)^eps

        Raises:
            DomainError: If any price is not strictly positive
        """
        x = self.demand_matrix(market, self.prices(market, p))
        return Allocation(quantities=tuple(tuple(row) for row in x.tolist()))

    def good_demand(self, market: Market, p: PriceLike, j: int) -> float:
        """Total demand sum_i x_ij(p) for good j"""
        self.check_good(market, j)
        x = self.demand_matrix(market, self.prices(market, p))
        return float(sum(x[:, j].tolist()))

    def excess_demand(self, market: Market, p: PriceLike) -> np.ndarray:
        """z_j = sum_i x_ij(p) - 1 (unit supply per good)"""
        x = self.demand_matrix(market, self.prices(market, p))
        return x.sum(axis=0) - 1.0

    def clearing_residual(self, market: Market, p: PriceLike) -> float:
        """max_j |sum_i x_ij(p) - 1|"""
        return float(np.max(np.abs(self.excess_demand(market, p))))

    # ------------------------------------------------------------------
    # Spending on one good
    # ------------------------------------------------------------------

    def spending_terms(self, market: Market, p: np.ndarray, j: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        Split the spending formula for good j into per-buyer pieces

        Returns:
            (own, others): own_i = eps * log c_ij, others_i = log sum_{k != j} (c_ik / p_k)^eps.
            Buyer i spends b_i * expit(own_i - eps * log(alpha) - others_i) on j.
        """
        terms = self.log_terms(market, p)
        if market.num_goods == 1:
            others = np.full(market.num_buyers, -np.inf)
        else:
            # buyers interested only in j get -inf
            with np.errstate(divide="ignore"):
                others = logsumexp(np.delete(terms, j, axis=1), axis=1)
        own = market.epsilon * market.log_coefficients[:, j]
        return own, others

    def spending_at(self, market: Market, own: np.ndarray, others: np.ndarray, alpha: float) -> float:
        """Total spending on the good described by (own, others) at its price alpha"""
        with np.errstate(invalid="ignore"):
            logits = own - market.epsilon * np.log(alpha) - others
        logits = np.where(np.isneginf(own), -np.inf, logits)
        return float(np.sum(market.budget_array * expit(logits)))

    def good_spending(self, market: Market, p_other: PriceLike, j: int, alpha: float) -> float:
        """
        Total buyer spending on good j when it is priced at alpha

        Entry j of p_other is ignored. Strictly decreasing in alpha whenever
        some interested buyer also values another good; never above sum_i b_i.

        Raises:
            DomainError: If alpha <= 0 or another price is not strictly positive
        """
        self.check_good(market, j)
        if not np.isfinite(alpha) or alpha <= 0:
            raise DomainError(f"alpha must be finite and strictly positive, got {alpha}")
        p = self.prices(market, p_other, ignore=j)
        own, others = self.spending_terms(market, p, j)
        return self.spending_at(market, own, others, float(alpha))

    # ------------------------------------------------------------------
    # Utility & profit
    # ------------------------------------------------------------------

    def utility(self, market: Market, x: Union[Allocation, Any], i: int) -> float:
        """CES utility (sum_j (c_ij x_ij)^rho)^(1/rho) of buyer i; zero terms excluded"""
        self.check_buyer(market, i)
        quantities = x.array if isinstance(x, Allocation) else np.asarray(x, dtype=float)
        if np.any(quantities < 0):
            raise DomainError("allocation quantities must be non-negative")
        weighted = market.coefficient_array[i] * quantities[i]
        weighted = weighted[weighted > 0]
        if weighted.size == 0:
            return 0.0
        return float(np.exp(logsumexp(market.rho * np.log(weighted)) / market.rho))

    def profit(self, market: Market, p: PriceLike, j: int) -> float:
        """Seller j's revenue min{sum_i x_ij(p), 1} * p_j"""
        prices = self.prices(market, p)
        return min(self.good_demand(market, prices, j), 1.0) * float(prices[j])

    # ------------------------------------------------------------------
    # Invariant price box
    # ------------------------------------------------------------------

    def price_bounds(self, market: Market) -> Tuple[float, float]:
        """
        Box [p_min, p_max] that best response maps into itself

        p_max = sum_i b_i. With C_ij = b_i c_ij^eps / sum_k c_ik^eps, any buyer
        alone demands more than one unit of good j below C_ij while the other
        prices are at least p_min, so p_min = min_j max_i C_ij (capped by p_max).
        """
        cached = market.cache.get("price_bounds")
        if cached is not None:
            return cached

        p_max = market.total_budget
        weights = market.epsilon * market.log_coefficients
        log_c = (
            np.log(market.budget_array)[:, np.newaxis]
            + weights
            - logsumexp(weights, axis=1, keepdims=True)
        )
        per_good = np.exp(log_c).max(axis=0)
        p_min = min(float(per_good.min()), p_max)

        bounds = (p_min, p_max)
        market.cache["price_bounds"] = bounds
        logger.debug(f"Price box for market {market.content_hash()[:12]}: [{p_min:.6g}, {p_max:.6g}]")
        return bounds

    def in_box(self, market: Market, p: PriceLike, rtol: Optional[float] = None) -> bool:
        """Whether every price lies in [p_min, p_max] up to a relative tolerance (default INVARIANT_RTOL)"""
        rtol = settings.INVARIANT_RTOL if rtol is None else rtol
        prices = self.prices(market, p)
        p_min, p_max = self.price_bounds(market)
        return bool(np.all(prices >= p_min * (1 - rtol)) and np.all(prices <= p_max * (1 + rtol)))


# Global service instance
market_service = MarketService()
