"""
Contraction Command - sampled contraction constants of the update maps

Estimates, on one shared set of box pairs: the identity map (control, ratio
exactly 1), synchronous best response, and BRL updates for each belief spec
listed under contraction.beliefs.
"""

import logging
from pathlib import Path
from typing import Optional

from commands.common import (
    describe_beliefs,
    load_config,
    output_header,
    output_path,
    profile_source,
    resolve_market,
    write_json,
)
from models.schemas import AnalysisReport, PriceVector
from services import analysis_service, belief_service, best_response_service
from utils.errors import PropertyViolation

# Configure logger for this module
logger = logging.getLogger(__name__)


def cmd_contraction(config_file: str, output: Optional[str] = None) -> AnalysisReport:
    """
    Estimate and check contraction ratios

    Raises:
        PropertyViolation: If best response is not contracting, or a BRL ratio
            exceeds the best-response ratio by more than the configured slack
    """
    config, base_dir = load_config(config_file)
    spec = config.contraction
    market = resolve_market(config, base_dir)

    estimates = []
    if spec.include_identity:
        estimates.append(analysis_service.estimate_contraction(
            market, lambda p: p, spec.pairs, spec.seed, label="identity"
        ))
    best = analysis_service.estimate_contraction(
        market,
        lambda p: best_response_service.best_response_all(market, p),
        spec.pairs,
        spec.seed,
        label="best-response",
    )
    estimates.append(best)

    brl_estimates = []
    for beliefs in spec.beliefs:
        source = profile_source(beliefs, market.num_goods, base_dir)

        def update(p: PriceVector, source=source) -> PriceVector:
            return belief_service.brl_update(market, source.profile_for(0, p.array), p)

        brl_estimates.append(analysis_service.estimate_contraction(
            market, update, spec.pairs, spec.seed, label=describe_beliefs(beliefs)
        ))
    estimates.extend(brl_estimates)

    report = analysis_service.build_report(
        market,
        "sampled-contraction",
        header=output_header(config, "contraction", market),
        contraction=estimates,
    )
    path = output_path(config, base_dir, output, f"{Path(config_file).stem}.contraction.json")
    write_json(path, report.model_dump(mode="json"))

    if best.ratio_max >= 1.0:
        raise PropertyViolation(f"best response is not contracting: ratio {best.ratio_max}")
    for estimate in brl_estimates:
        if estimate.ratio_max > best.ratio_max + spec.slack:
            raise PropertyViolation(
                f"{estimate.label} ratio {estimate.ratio_max:.6f} exceeds best response "
                f"{best.ratio_max:.6f} + slack {spec.slack}"
            )
    return report
