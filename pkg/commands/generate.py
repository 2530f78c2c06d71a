"""
Generate Command - write a seeded random market file
"""

import logging
from pathlib import Path
from typing import Optional

from commands.common import load_config, output_header, output_path
from models.schemas import Market
from services import generator_service
from utils.errors import ArgumentError

# Configure logger for this module
logger = logging.getLogger(__name__)


def cmd_generate(config_file: str, output: Optional[str] = None) -> Market:
    """
    Generate the market described by market.generate and save it

    Raises:
        ArgumentError: If the config points at a market file instead of a generator spec
    """
    config, base_dir = load_config(config_file)
    if config.market.generate is None:
        raise ArgumentError("generate needs a 'market.generate' section")
    market = generator_service.generate_market(config.market.generate)
    path = output_path(config, base_dir, output, f"{Path(config_file).stem}.market.json")
    generator_service.save_market(market, path, output_header(config, "generate", market))
    return market
