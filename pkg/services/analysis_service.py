"""
Analysis Service - Metrics, Equilibrium Oracles and Convergence Rates

Provides the instruments used to check the dynamics:
1. Thompson metric d(p, q) = max_j |log(p_j / q_j)| and its norm comparison
2. Equilibrium by best-response fixed-point iteration (primary oracle)
3. Equilibrium by damped multiplicative tatonnement (independent cross-check)
4. Sampled contraction constants of price-update maps
5. Least-squares decay rates of distance-to-equilibrium series
"""

import logging
import math
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from config import settings
from models.schemas import (
    AnalysisReport,
    ContractionEstimate,
    DecayFit,
    DecayUnit,
    EquilibriumMethod,
    EquilibriumResult,
    Market,
    PriceVector,
    Trajectory,
)
from services.best_response_service import best_response_service
from services.market_service import PriceLike, market_service
from utils.errors import DomainError, InsufficientDataError, OracleError, SolverError

# Configure logger for this module
logger = logging.getLogger(__name__)

PriceMap = Callable[[PriceVector], PriceLike]


def _positive_array(p: PriceLike) -> np.ndarray:
    array = p.array if isinstance(p, PriceVector) else np.asarray(p, dtype=float).ravel()
    if array.size == 0 or not np.all(np.isfinite(array)) or np.any(array <= 0):
        raise DomainError("Thompson metric is defined on strictly positive vectors only")
    return array


class AnalysisService:
    """
    Measurement tools; nothing here feeds back into the dynamics
    """

    # ------------------------------------------------------------------
    # Metrics
    # ------------------------------------------------------------------

    def thompson(self, p: PriceLike, q: PriceLike) -> float:
        """
        Thompson distance max_j |log p_j - log q_j|

        Raises:
            DomainError: If an entry is not strictly positive or lengths differ
        """
        a, b = _positive_array(p), _positive_array(q)
        if a.shape != b.shape:
            raise DomainError(f"vectors have different lengths: {a.size} and {b.size}")
        return float(np.max(np.abs(np.log(a) - np.log(b))))

    def metric_bounds_check(self, p: PriceLike, q: PriceLike, p_min: float, p_max: float) -> bool:
        """
        Whether ||p-q||_inf <= (p_max^2/p_min) d(p,q) and ||p-q||_2 <= sqrt(n) (p_max^2/p_min) d(p,q)

        Used as a test oracle; a False here means a bug, not bad luck.
        """
        a, b = _positive_array(p), _positive_array(q)
        d = self.thompson(a, b)
        scale = p_max ** 2 / p_min
        slack = 1e-12 * max(1.0, scale * d)
        sup_ok = float(np.max(np.abs(a - b))) <= scale * d + slack
        l2_ok = float(np.linalg.norm(a - b)) <= math.sqrt(a.size) * scale * d + slack
        return sup_ok and l2_ok

    def norm_bounds(
        self,
        p0: PriceLike,
        p_star: PriceLike,
        xi: float,
        steps: int,
        p_min: float,
        p_max: float,
    ) -> Tuple[float, float]:
        """
        Envelopes on ||p^T - p*||_inf and ||p^T - p*||_2 after T contracting steps

        (p_max^2 / p_min) * d(p0, p*) * xi^T, and sqrt(n) times that.
        """
        sup_bound = p_max ** 2 / p_min * self.thompson(p0, p_star) * xi ** steps
        return sup_bound, math.sqrt(_positive_array(p0).size) * sup_bound

    # ------------------------------------------------------------------
    # Equilibrium oracles
    # ------------------------------------------------------------------

    def box_midpoint(self, market: Market) -> np.ndarray:
        p_min, p_max = market_service.price_bounds(market)
        return np.full(market.num_goods, 0.5 * (p_min + p_max))

    def solve_equilibrium(
        self,
        market: Market,
        tol: Optional[float] = None,
        max_iter: Optional[int] = None,
    ) -> EquilibriumResult:
        """
        Equilibrium as the fixed point of synchronous best response

        Iterates from the box midpoint until successive iterates are within
        tol in Thompson distance; best response is a contraction there, so
        the iteration converges geometrically.

        Raises:
            SolverError: If the iteration cap is exceeded
        """
        tol = settings.EQUILIBRIUM_TOL if tol is None else tol
        max_iter = settings.EQUILIBRIUM_MAX_ITER if max_iter is None else max_iter
        if tol <= 0:
            raise DomainError(f"tolerance must be positive, got {tol}")

        p = self.box_midpoint(market)
        for iteration in range(1, max_iter + 1):
            q = best_response_service.respond_array(market, p)
            step = self.thompson(p, q)
            p = q
            if step <= tol:
                residual = market_service.clearing_residual(market, p)
                logger.info(
                    f"Fixed-point equilibrium after {iteration} iterations, residual {residual:.3e}"
                )
                return EquilibriumResult(
                    prices=PriceVector.from_array(p),
                    clearing_residual=residual,
                    iterations=iteration,
                    method=EquilibriumMethod.FIXED_POINT,
                )

        logger.error(f"Fixed-point iteration hit the cap of {max_iter} iterations")
        raise SolverError(f"best-response iteration did not converge within {max_iter} iterations")

    def tatonnement_oracle(
        self,
        market: Market,
        step: Optional[float] = None,
        tol: Optional[float] = None,
        max_iter: Optional[int] = None,
    ) -> EquilibriumResult:
        """
        Equilibrium by multiplicative tatonnement p_j <- p_j (1 + step * z_j)

        z_j is the excess demand of good j; prices are clamped to the box.

        Raises:
            OracleError: On divergence or when the iteration cap is exceeded
        """
        step = settings.TATONNEMENT_STEP if step is None else step
        tol = settings.TATONNEMENT_TOL if tol is None else tol
        max_iter = settings.TATONNEMENT_MAX_ITER if max_iter is None else max_iter
        p_min, p_max = market_service.price_bounds(market)

        p = self.box_midpoint(market)
        for iteration in range(max_iter + 1):
            excess = market_service.demand_matrix(market, p).sum(axis=0) - 1.0
            worst = float(np.max(np.abs(excess)))
            if not math.isfinite(worst):
                raise OracleError("tatonnement produced non-finite excess demand")
            if worst <= tol:
                logger.info(f"Tatonnement converged after {iteration} iterations, residual {worst:.3e}")
                return EquilibriumResult(
                    prices=PriceVector.from_array(p),
                    clearing_residual=worst,
                    iterations=iteration,
                    method=EquilibriumMethod.TATONNEMENT,
                )
            p = np.clip(p * (1.0 + step * excess), p_min, p_max)

        logger.error(f"Tatonnement with step {step} did not converge in {max_iter} iterations")
        raise OracleError(
            f"tatonnement did not reach residual {tol} within {max_iter} iterations (step {step}); "
            "the oracle is mis-tuned for this market"
        )

    # ------------------------------------------------------------------
    # Contraction estimates
    # ------------------------------------------------------------------

    def sample_pairs(self, market: Market, count: int, seed: int) -> List[Tuple[np.ndarray, np.ndarray]]:
        """Price pairs drawn uniformly in log-price coordinates inside the box"""
        p_min, p_max = market_service.price_bounds(market)
        rng = np.random.default_rng(seed)
        low, high = math.log(p_min), math.log(p_max)
        draws = rng.uniform(low, high, size=(count, 2, market.num_goods))
        return [(np.exp(pair[0]), np.exp(pair[1])) for pair in draws]

    def estimate_contraction(
        self,
        market: Market,
        update: PriceMap,
        pairs: int,
        seed: int,
        label: str = "update",
    ) -> ContractionEstimate:
        """
        Largest observed d(F(p), F(q)) / d(p, q) over sampled box pairs

        Pairs closer than the noise floor are skipped. For best_response_all
        this is a lower estimate of its contraction constant.

        Raises:
            InsufficientDataError: If no sampled pair is above the noise floor
        """
        if pairs < 1:
            raise DomainError(f"need at least one pair, got {pairs}")
        ratios: List[float] = []
        for p, q in self.sample_pairs(market, pairs, seed):
            d = self.thompson(p, q)
            if d <= settings.NOISE_FLOOR:
                continue
            fp = update(PriceVector.from_array(p))
            fq = update(PriceVector.from_array(q))
            ratios.append(self.thompson(fp, fq) / d)
        if not ratios:
            raise InsufficientDataError("no sampled pair is separated by more than the noise floor")

        estimate = ContractionEstimate(
            label=label,
            ratio_max=max(ratios),
            sample_count=len(ratios),
            seed=seed,
            ratios=tuple(ratios),
        )
        logger.info(f"Contraction estimate for {label}: {estimate.ratio_max:.6f} over {len(ratios)} pairs")
        return estimate

    # ------------------------------------------------------------------
    # Convergence rates
    # ------------------------------------------------------------------

    def distances(self, trajectory: Trajectory, p_star: PriceLike) -> np.ndarray:
        """d(p^t, p*) for every recorded point"""
        star = _positive_array(p_star)
        return np.asarray([self.thompson(point.prices, star) for point in trajectory.points])

    def step_ratios(self, distances: Sequence[float], floor: Optional[float] = None) -> List[float]:
        """d_{t+1} / d_t for every t with d_t above the noise floor"""
        floor = settings.NOISE_FLOOR if floor is None else floor
        return [
            later / earlier
            for earlier, later in zip(distances[:-1], distances[1:])
            if earlier > floor
        ]

    def epoch_series(self, trajectory: Trajectory, p_star: PriceLike) -> Tuple[np.ndarray, np.ndarray]:
        """(epoch index, distance) at the start and after each completed epoch"""
        d = self.distances(trajectory, p_star)
        indices = [0] + list(trajectory.epoch_ends)
        return np.arange(len(indices), dtype=float), d[indices]

    def epoch_ratios(
        self, trajectory: Trajectory, p_star: PriceLike, floor: Optional[float] = None
    ) -> List[float]:
        """Distance ratio across each completed epoch, skipping starts at or below the floor"""
        _, d = self.epoch_series(trajectory, p_star)
        return self.step_ratios(d, floor=floor)

    def fit_decay_series(
        self,
        times: Sequence[float],
        distances: Sequence[float],
        unit: DecayUnit = DecayUnit.STEPS,
        label: str = "run",
    ) -> DecayFit:
        """
        Slope of log d against time, ignoring points at or below the noise floor

        Raises:
            InsufficientDataError: With fewer than three usable points
        """
        t = np.asarray(times, dtype=float)
        d = np.asarray(distances, dtype=float)
        usable = d > settings.NOISE_FLOOR
        if np.count_nonzero(usable) < 3:
            raise InsufficientDataError(
                f"only {int(np.count_nonzero(usable))} points above the noise floor; need 3"
            )
        x, y = t[usable], np.log(d[usable])
        fit = stats.linregress(x, y)
        residual = float(np.sqrt(np.mean((y - (fit.intercept + fit.slope * x)) ** 2)))
        return DecayFit(label=label, rate=float(fit.slope), residual=residual, unit=unit, points=int(x.size))

    def fit_decay(
        self,
        trajectory: Trajectory,
        p_star: PriceLike,
        unit: DecayUnit = DecayUnit.STEPS,
        label: str = "run",
    ) -> DecayFit:
        """
        Geometric decay rate of a trajectory towards p*

        A negative rate certifies linear convergence in the chosen unit.
        """
        if unit == DecayUnit.EPOCHS:
            times, d = self.epoch_series(trajectory, p_star)
        else:
            d = self.distances(trajectory, p_star)
            times = np.asarray([point.step for point in trajectory.points], dtype=float)
        return self.fit_decay_series(times, d, unit=unit, label=label)

    # ------------------------------------------------------------------
    # Reports
    # ------------------------------------------------------------------

    def build_report(
        self,
        market: Market,
        method: str,
        header: Optional[Dict[str, Any]] = None,
        equilibrium: Optional[EquilibriumResult] = None,
        oracle: Optional[EquilibriumResult] = None,
        contraction: Sequence[ContractionEstimate] = (),
        decay: Sequence[DecayFit] = (),
    ) -> AnalysisReport:
        """Collect results into one report; oracle distance is filled in when both oracles ran"""
        distance = None
        if equilibrium is not None and oracle is not None:
            distance = self.thompson(equilibrium.prices, oracle.prices)
        return AnalysisReport(
            header=dict(header or {}),
            market_hash=market.content_hash(),
            method=method,
            equilibrium=equilibrium,
            oracle=oracle,
            oracle_distance=distance,
            contraction=list(contraction),
            decay=list(decay),
        )


# Global service instance
analysis_service = AnalysisService()
