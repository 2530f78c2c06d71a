"""
Best Response Service - Market-Clearing Seller Prices

A seller best-responds by choosing the price at which its good exactly
clears, which maximises its profit when goods are weak gross substitutes.
That price is the unique root in alpha of

    g(alpha, p) = alpha - (total spending on good j at price alpha)

g is strictly increasing in alpha, so the root is found by bracketed
bisection between the bottom of the price box and p_max = sum_i b_i.
"""

import logging
from typing import Callable, Iterable, Optional

import numpy as np
from scipy.optimize import bisect

from config import settings
from models.schemas import BestResponseResult, Market, PriceVector
from services.market_service import PriceLike, market_service
from utils.errors import SolverError

# Configure logger for this module
logger = logging.getLogger(__name__)


class BestResponseService:
    """
    Exact best responses for CES-WGS sellers

    The array-level methods (solve, respond_array) skip input validation and
    are what the belief and dynamics services call in their inner loops.
    """

    def clearing_gap(self, market: Market, p: PriceLike, j: int, alpha: float) -> float:
        """
        g(alpha, p) = alpha - good_spending(market, p, j, alpha)

        Zero exactly at alpha = F_j(p); increasing in alpha, decreasing in p_k (k != j).
        """
        return float(alpha) - market_service.good_spending(market, p, j, alpha)

    def gap_function(self, market: Market, p: np.ndarray, j: int) -> Callable[[float], float]:
        """g(., p) for good j with the other goods' terms precomputed"""
        own, others = market_service.spending_terms(market, p, j)

        def gap(alpha: float) -> float:
            return alpha - market_service.spending_at(market, own, others, alpha)

        return gap

    def solve(self, market: Market, p: np.ndarray, j: int) -> BestResponseResult:
        """
        Root of g(., p) for validated prices p

        The bracket starts at [p_min, p_max]. g(p_max) >= 0 always holds;
        when p lies below the box g(p_min) may be positive, and the lower end
        is halved until the sign changes.

        Raises:
            SolverError: If bracketing or bisection exceeds the iteration cap
        """
        p_min, p_max = market_service.price_bounds(market)
        gap = self.gap_function(market, p, j)
        gtol = settings.BISECTION_GTOL * market.total_budget

        high, g_high = p_max, gap(p_max)
        if g_high <= gtol:
            return BestResponseResult(good=j, price=high, residual=abs(g_high), iterations=0)

        low, g_low = p_min, gap(p_min)
        expansions = 0
        while g_low > gtol:
            expansions += 1
            if expansions > settings.BISECTION_MAX_ITER:
                logger.error(f"Could not bracket best response for good {j} at p={p.tolist()}")
                raise SolverError(f"failed to bracket the best response of good {j}")
            low /= 2.0
            g_low = gap(low)
        if g_low >= -gtol:
            return BestResponseResult(good=j, price=low, residual=abs(g_low), iterations=expansions)

        root, info = bisect(
            gap,
            low,
            high,
            xtol=settings.BISECTION_XTOL * p_max,
            maxiter=settings.BISECTION_MAX_ITER,
            full_output=True,
            disp=False,
        )
        if not info.converged:
            logger.error(f"Bisection for good {j} stopped after {info.iterations} iterations: {info.flag}")
            raise SolverError(f"best response for good {j} did not converge: {info.flag}")

        return BestResponseResult(
            good=j,
            price=float(root),
            residual=abs(gap(root)),
            iterations=int(info.iterations) + expansions,
        )

    def best_response(self, market: Market, p: PriceLike, j: int) -> BestResponseResult:
        """
        Profit-maximising (market-clearing) price of seller j against p

        Args:
            market: Market instance
            p: Current prices; entry j is not read
            j: Good index

        Returns:
            BestResponseResult with the price, final |g| and iteration count
        """
        market_service.check_good(market, j)
        prices = market_service.prices(market, p, ignore=j)
        return self.solve(market, prices, j)

    def respond_array(
        self,
        market: Market,
        p: np.ndarray,
        sellers: Optional[Iterable[int]] = None,
    ) -> np.ndarray:
        """Simultaneous best responses of the given sellers; others copied from p"""
        updated = p.copy()
        for j in range(market.num_goods) if sellers is None else sellers:
            updated[j] = self.solve(market, p, j).price
        return updated

    def best_response_all(self, market: Market, p: PriceLike) -> PriceVector:
        """
        Every seller best-responds to the same input vector p

        Coordinates never read each other's new prices.
        """
        prices = market_service.prices(market, p)
        return PriceVector.from_array(self.respond_array(market, prices))


# Global service instance
best_response_service = BestResponseService()
