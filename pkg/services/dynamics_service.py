"""
Dynamics Service - Synchronous and Asynchronous BRL Price Processes

Runs p^{t+1} = F^t(p^t), where F^t is the BRL update for the belief profile
drawn at step t, restricted to the sellers the schedule activates at step t.
Inactive sellers keep their price bit-for-bit.

An epoch ends at the step by which every seller has updated at least once
since the previous boundary; the next epoch starts on the following step.
"""

import csv
import itertools
import logging
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Union

import numpy as np

from config import settings
from models.schemas import (
    DynamicsMode,
    Market,
    PriceVector,
    ScheduleKind,
    ScheduleSpec,
    Trajectory,
    TrajectoryPoint,
)
from services.analysis_service import analysis_service
from services.belief_service import ProfileSource, belief_service
from services.market_service import PriceLike, market_service
from utils.errors import ArgumentError, PriceBoxError, SolverError
from utils.helpers import render_float

# Configure logger for this module
logger = logging.getLogger(__name__)


class DynamicsService:
    """
    Steppers, schedules, the run loop and trajectory export
    """

    # ------------------------------------------------------------------
    # Schedules
    # ------------------------------------------------------------------

    def fairness_window(self, spec: ScheduleSpec, n: int) -> int:
        """Window W in which every seller is guaranteed to appear"""
        if spec.kind == ScheduleKind.FULL:
            return 1
        if spec.window is not None:
            window = spec.window
        elif settings.DEFAULT_FAIRNESS_WINDOW is not None:
            window = settings.DEFAULT_FAIRNESS_WINDOW
        else:
            window = n if spec.kind == ScheduleKind.ROUND_ROBIN else 2 * n
        if spec.kind == ScheduleKind.ROUND_ROBIN and window < n:
            raise ArgumentError(f"round-robin over {n} sellers needs a window of at least {n}, got {window}")
        return window

    def iter_active_sets(self, spec: ScheduleSpec, n: int) -> Iterator[FrozenSet[int]]:
        """
        Endless sequence of non-empty active sets S_0, S_1, ...

        Random schedules include each seller with the configured probability,
        resample empty draws and force in any seller that would otherwise sit
        out a whole window.
        """
        window = self.fairness_window(spec, n)
        if spec.kind == ScheduleKind.FULL:
            return itertools.repeat(frozenset(range(n)))
        if spec.kind == ScheduleKind.ROUND_ROBIN:
            return (frozenset({step % n}) for step in itertools.count())
        return self._random_sets(spec, n, window)

    def _random_sets(self, spec: ScheduleSpec, n: int, window: int) -> Iterator[FrozenSet[int]]:
        rng = np.random.default_rng(spec.seed)
        last_seen = np.full(n, -1)
        step = 0
        while True:
            chosen = rng.random(n) < spec.inclusion_probability
            while not chosen.any():
                chosen = rng.random(n) < spec.inclusion_probability
            chosen |= (step - last_seen) >= window
            last_seen[chosen] = step
            yield frozenset(int(j) for j in np.flatnonzero(chosen))
            step += 1

    # ------------------------------------------------------------------
    # Steppers
    # ------------------------------------------------------------------

    def _update(
        self,
        market: Market,
        source: ProfileSource,
        p: np.ndarray,
        step: int,
        sellers: Optional[Iterable[int]],
    ) -> np.ndarray:
        profile = source.profile_for(step, p)
        belief_service.validate_profile(profile, market.num_goods)
        return belief_service.update_array(market, profile, p, sellers)

    def step_sync(self, market: Market, source: ProfileSource, p: PriceLike, step: int = 0) -> PriceVector:
        """Every seller applies its BRL update to p"""
        prices = market_service.prices(market, p)
        return PriceVector.from_array(self._update(market, source, prices, step, None))

    def step_async(
        self,
        market: Market,
        source: ProfileSource,
        p: PriceLike,
        active: Iterable[int],
        step: int = 0,
    ) -> PriceVector:
        """
        Sellers in `active` apply their BRL update to p; the rest keep their prices

        Raises:
            ArgumentError: If the active set is empty
            IndexError: If it names a non-existent seller
        """
        sellers = sorted(set(active))
        if not sellers:
            raise ArgumentError("the active set must contain at least one seller")
        for j in sellers:
            market_service.check_good(market, j)
        prices = market_service.prices(market, p)
        return PriceVector.from_array(self._update(market, source, prices, step, sellers))

    # ------------------------------------------------------------------
    # Run loop
    # ------------------------------------------------------------------

    def check_initial_prices(self, market: Market, p0: PriceLike) -> np.ndarray:
        """
        Raises:
            PriceBoxError: If p0 is outside [p_min, p_max]^n (never clamped)
        """
        prices = market_service.prices(market, p0)
        if not market_service.in_box(market, prices):
            p_min, p_max = market_service.price_bounds(market)
            raise PriceBoxError(
                f"initial prices {prices.tolist()} lie outside the price box [{p_min}, {p_max}]"
            )
        return prices

    def run(
        self,
        market: Market,
        mode: DynamicsMode,
        schedule: ScheduleSpec,
        source: ProfileSource,
        p0: PriceLike,
        steps: Optional[int] = None,
        epochs: Optional[int] = None,
        reference: Optional[PriceLike] = None,
    ) -> Trajectory:
        """
        Simulate the price process from p0

        Args:
            market: Market instance
            mode: sync (everyone every step) or async (schedule decides)
            schedule: Activation schedule, ignored in sync mode
            source: Belief profile source queried once per step
            p0: Initial prices inside the box
            steps: Number of steps T (trajectory has T+1 points)
            epochs: Alternatively, stop once this many epochs completed
            reference: Equilibrium for diagnostics; attached after the run

        Returns:
            Trajectory with epoch boundaries

        Raises:
            PriceBoxError: If p0 is outside the box
            ArgumentError: On invalid step counts
            SolverError: If the epoch target is not reached within MAX_EPOCH_STEPS
        """
        if (steps is None) == (epochs is None):
            raise ArgumentError("give exactly one of steps or epochs")
        if (steps is not None and steps < 0) or (epochs is not None and epochs < 0):
            raise ArgumentError("step and epoch counts must be non-negative")

        n = market.num_goods
        prices = self.check_initial_prices(market, p0)
        if mode == DynamicsMode.SYNC:
            if schedule.kind != ScheduleKind.FULL:
                logger.warning(f"Synchronous run ignores the {schedule.kind.value} schedule")
            schedule = ScheduleSpec(kind=ScheduleKind.FULL)
        active_sets = self.iter_active_sets(schedule, n)

        points: List[TrajectoryPoint] = [
            TrajectoryPoint(step=0, epoch=0, prices=tuple(prices.tolist()))
        ]
        epoch_ends: List[int] = []
        pending = set(range(n))
        epoch = 0
        step = 0

        def finished() -> bool:
            if steps is not None:
                return step >= steps
            return len(epoch_ends) >= epochs

        while not finished():
            if steps is None and step >= settings.MAX_EPOCH_STEPS:
                raise SolverError(f"only {len(epoch_ends)} of {epochs} epochs completed in {step} steps")
            active = next(active_sets)
            sellers = sorted(active)
            prices = self._update(market, source, prices, step, sellers)
            step += 1
            points.append(TrajectoryPoint(
                step=step,
                epoch=epoch,
                prices=tuple(prices.tolist()),
                active=tuple(sellers),
            ))
            pending -= active
            if not pending:
                epoch_ends.append(step)
                epoch += 1
                pending = set(range(n))
            logger.debug(f"step {step}: active={sellers} prices={prices.tolist()}")

        trajectory = Trajectory(mode=mode, points=points, epoch_ends=epoch_ends)
        logger.info(f"Run finished: {step} steps, {len(epoch_ends)} epochs ({mode.value})")
        if reference is not None:
            trajectory = self.annotate(market, trajectory, reference)
        return trajectory

    def annotate(self, market: Market, trajectory: Trajectory, reference: PriceLike) -> Trajectory:
        """Attach d(p^t, p*) and the clearing residual to every point"""
        points = [
            point.model_copy(update={
                "distance": analysis_service.thompson(point.prices, reference),
                "residual": market_service.clearing_residual(market, point.prices),
            })
            for point in trajectory.points
        ]
        return trajectory.model_copy(update={"points": points})

    # ------------------------------------------------------------------
    # Export
    # ------------------------------------------------------------------

    def trajectory_rows(self, trajectory: Trajectory, n: int) -> List[List[str]]:
        """Header plus one row per step: step, epoch, active bitmask, prices, distance, residual"""
        header = ["step", "epoch", "active_mask"] + [f"p_{j + 1}" for j in range(n)] + ["distance", "residual"]
        rows = [header]
        for point in trajectory.points:
            mask = sum(1 << j for j in point.active)
            rows.append(
                [str(point.step), str(point.epoch), str(mask)]
                + [render_float(v) for v in point.prices]
                + ["" if point.distance is None else render_float(point.distance)]
                + ["" if point.residual is None else render_float(point.residual)]
            )
        return rows

    def write_trajectory_csv(
        self,
        trajectory: Trajectory,
        path: Union[str, Path],
        header: Optional[Dict[str, str]] = None,
    ) -> Path:
        """Write the trajectory as CSV, preceded by '# key=value' header lines"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        n = len(trajectory.points[0].prices)
        with path.open("w", newline="", encoding="utf-8") as handle:
            for key, value in sorted((header or {}).items()):
                handle.write(f"# {key}={value}\n")
            csv.writer(handle, lineterminator="\n").writerows(self.trajectory_rows(trajectory, n))
        logger.info(f"Trajectory written to {path} ({len(trajectory.points)} rows)")
        return path


# Global service instance
dynamics_service = DynamicsService()
