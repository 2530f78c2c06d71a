"""
Shared plumbing for the command handlers: config loading, market and
belief-source resolution, output headers and paths
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from models.experiment import (
    BeliefSpec,
    ExperimentConfig,
    LevelBeliefSpec,
    ProfileBeliefSpec,
    RandomBeliefSpec,
    SequenceBeliefSpec,
    TreeBeliefSpec,
)
from models.schemas import Market
from services import (
    FixedProfileSource,
    RandomProfileSource,
    SequenceProfileSource,
    belief_service,
    generator_service,
    market_service,
)
from services.belief_service import ProfileSource
from utils.helpers import canonical_json, content_hash

# Configure logger for this module
logger = logging.getLogger(__name__)


def load_config(path: str) -> Tuple[ExperimentConfig, Path]:
    """
    Parse an experiment config file

    Returns:
        (config, directory the config lives in, for relative paths)

    Raises:
        pydantic.ValidationError: With field paths, or line/column for malformed JSON
    """
    config_path = Path(path)
    text = config_path.read_text(encoding="utf-8")
    config = ExperimentConfig.model_validate_json(text)
    logger.info(f"Loaded config {config_path} (hash {config_hash(config)[:12]})")
    return config, config_path.resolve().parent


def config_hash(config: ExperimentConfig) -> str:
    return content_hash(config.model_dump(mode="json"))


def output_header(config: ExperimentConfig, command: str, market: Optional[Market] = None) -> Dict[str, str]:
    """Header embedded in every output file"""
    header = {
        "command": command,
        "config_hash": config_hash(config),
        "seeds": canonical_json(config.seeds()),
    }
    if market is not None:
        header["market_hash"] = market.content_hash()
    return header


def resolve_path(base_dir: Path, path: str) -> Path:
    candidate = Path(path)
    return candidate if candidate.is_absolute() else base_dir / candidate


def output_path(config: ExperimentConfig, base_dir: Path, override: Optional[str], default_name: str) -> Path:
    """-o flag, then output.path from the config, then a default next to the config"""
    if override:
        return Path(override)
    if config.output.path:
        return resolve_path(base_dir, config.output.path)
    return base_dir / default_name


def resolve_market(config: ExperimentConfig, base_dir: Path) -> Market:
    if config.market.generate is not None:
        return generator_service.generate_market(config.market.generate)
    return generator_service.load_market(resolve_path(base_dir, config.market.path))


def initial_prices(config: ExperimentConfig, market: Market) -> np.ndarray:
    """p0 from the config, or the upper box corner"""
    if config.p0 is not None:
        return np.asarray(config.p0, dtype=float)
    _, p_max = market_service.price_bounds(market)
    return np.full(market.num_goods, p_max)


def profile_source(spec: BeliefSpec, n: int, base_dir: Path) -> ProfileSource:
    """Turn a belief spec into a per-step profile source"""
    if isinstance(spec, LevelBeliefSpec):
        return FixedProfileSource(belief_service.uniform_level_profile(n, spec.level))
    if isinstance(spec, ProfileBeliefSpec):
        return FixedProfileSource(belief_service.profile_from_models(spec.sellers, n))
    if isinstance(spec, TreeBeliefSpec):
        models = generator_service.load_profile_models(resolve_path(base_dir, spec.path))
        return FixedProfileSource(belief_service.profile_from_models(models, n))
    if isinstance(spec, RandomBeliefSpec):
        return RandomProfileSource(n, spec.max_depth, spec.seed, spec.stop_probability)
    if isinstance(spec, SequenceBeliefSpec):
        return SequenceProfileSource([profile_source(item, n, base_dir) for item in spec.items])
    raise TypeError(f"unknown belief spec {spec!r}")


def describe_beliefs(spec: BeliefSpec) -> str:
    """Short label for reports"""
    if isinstance(spec, LevelBeliefSpec):
        return f"level-{spec.level}"
    if isinstance(spec, ProfileBeliefSpec):
        return "profile"
    if isinstance(spec, TreeBeliefSpec):
        return f"tree:{spec.path}"
    if isinstance(spec, RandomBeliefSpec):
        return f"random(depth<={spec.max_depth},seed={spec.seed})"
    return "sequence[" + ",".join(describe_beliefs(item) for item in spec.items) + "]"


def write_json(path: Path, payload: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info(f"Wrote {path}")
    return path
