"""
Simulate Command - run BRL dynamics and export the trajectory

Writes the trajectory CSV and a sibling <name>.fit.json with the fitted
decay rate (per step in sync mode, per epoch in async mode).
"""

import logging
from pathlib import Path
from typing import Any, Dict, Optional

from commands.common import (
    initial_prices,
    load_config,
    output_header,
    output_path,
    profile_source,
    resolve_market,
    write_json,
)
from models.schemas import DecayUnit, DynamicsMode, Trajectory
from services import analysis_service, dynamics_service
from utils.errors import InsufficientDataError

# Configure logger for this module
logger = logging.getLogger(__name__)


def cmd_simulate(config_file: str, output: Optional[str] = None) -> Trajectory:
    """
    Run the configured dynamics from p0

    Raises:
        PriceBoxError: If p0 lies outside the price box
    """
    config, base_dir = load_config(config_file)
    market = resolve_market(config, base_dir)
    p0 = initial_prices(config, market)
    dynamics_service.check_initial_prices(market, p0)

    equilibrium = analysis_service.solve_equilibrium(market, tol=config.tolerances.equilibrium)
    source = profile_source(config.beliefs, market.num_goods, base_dir)
    trajectory = dynamics_service.run(
        market,
        config.dynamics.mode,
        config.schedule,
        source,
        p0,
        steps=config.dynamics.steps,
        epochs=config.dynamics.epochs,
        reference=equilibrium.prices,
    )

    header = output_header(config, "simulate", market)
    path = output_path(config, base_dir, output, f"{Path(config_file).stem}.trajectory.csv")
    dynamics_service.write_trajectory_csv(trajectory, path, header)

    unit = DecayUnit.EPOCHS if config.dynamics.mode == DynamicsMode.ASYNC else DecayUnit.STEPS
    summary: Dict[str, Any] = {
        "header": header,
        "equilibrium": list(equilibrium.prices.prices),
        "steps": len(trajectory) - 1,
        "epochs": len(trajectory.epoch_ends),
        "final_distance": trajectory.points[-1].distance,
        "decay": None,
    }
    try:
        fit = analysis_service.fit_decay(trajectory, equilibrium.prices, unit=unit, label="simulate")
        summary["decay"] = fit.model_dump(mode="json")
        logger.info(f"Decay rate {fit.rate:.6f} per {unit.value} (fit residual {fit.residual:.3e})")
    except InsufficientDataError as exc:
        logger.warning(f"No decay fit: {exc}")
    write_json(path.with_name(f"{path.stem}.fit.json"), summary)
    return trajectory
