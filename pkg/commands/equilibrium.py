"""
Equilibrium Command - fixed-point equilibrium with a tatonnement cross-check

Writes an analysis report, then fails with PropertyViolation if the clearing
residual is above tolerance or the two oracles disagree.
"""

import logging
from pathlib import Path
from typing import Optional

from commands.common import load_config, output_header, output_path, resolve_market, write_json
from models.schemas import AnalysisReport
from services import analysis_service
from utils.errors import PropertyViolation

# Configure logger for this module
logger = logging.getLogger(__name__)


def cmd_equilibrium(config_file: str, output: Optional[str] = None) -> AnalysisReport:
    """
    Solve for p*, cross-check it and write the report

    Raises:
        PropertyViolation: Residual above tolerance or oracle disagreement (report still written)
    """
    config, base_dir = load_config(config_file)
    tolerances = config.tolerances
    market = resolve_market(config, base_dir)

    equilibrium = analysis_service.solve_equilibrium(market, tol=tolerances.equilibrium)
    oracle = analysis_service.tatonnement_oracle(
        market, step=tolerances.tatonnement_step, tol=tolerances.tatonnement_tol
    )
    report = analysis_service.build_report(
        market,
        "fixed-point+tatonnement",
        header=output_header(config, "equilibrium", market),
        equilibrium=equilibrium,
        oracle=oracle,
    )
    distance = report.oracle_distance
    path = output_path(config, base_dir, output, f"{Path(config_file).stem}.equilibrium.json")
    write_json(path, report.model_dump(mode="json"))

    if equilibrium.clearing_residual > tolerances.residual:
        raise PropertyViolation(
            f"clearing residual {equilibrium.clearing_residual:.3e} exceeds {tolerances.residual:.3e}"
        )
    if distance > tolerances.oracle_agreement:
        raise PropertyViolation(
            f"oracles disagree: Thompson distance {distance:.3e} > {tolerances.oracle_agreement:.3e}"
        )
    logger.info(f"Equilibrium {list(equilibrium.prices.prices)} certified (oracle distance {distance:.3e})")
    return report
