"""
Generator Service - Seeded Markets and Market / Belief Files

Markets are stored as JSON with the Market fields at the top level plus an
optional "header" object (config hash, seeds). Python's json module writes
floats with repr, so files round-trip exactly at double precision.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
from pydantic import TypeAdapter

from models.experiment import MarketGeneratorSpec
from models.schemas import Market, MentalModel
from utils.errors import DomainError

# Configure logger for this module
logger = logging.getLogger(__name__)

_PROFILE_ADAPTER = TypeAdapter(Dict[int, MentalModel])


class GeneratorService:
    """
    Random market generation and file I/O
    """

    max_attempts = 1000

    def generate_market(self, spec: MarketGeneratorSpec) -> Market:
        """
        Seeded market with log-uniform budgets and coefficients

        Coefficients are zeroed with probability `sparsity`; rows (buyers) and
        columns (goods) left without any positive weight are redrawn until
        every Market invariant holds.

        Raises:
            DomainError: If no valid coefficient matrix is found (sparsity too high)
        """
        rng = np.random.default_rng(spec.seed)
        m, n = spec.num_buyers, spec.num_goods

        def log_uniform(bounds, size):
            low, high = np.log(bounds[0]), np.log(bounds[1])
            return np.exp(rng.uniform(low, high, size=size))

        def draw(size):
            values = log_uniform(spec.coefficient_range, size)
            return np.where(rng.random(size) < spec.sparsity, 0.0, values)

        budgets = log_uniform(spec.budget_range, m)
        coefficients = draw((m, n))
        for attempt in range(self.max_attempts):
            idle_rows = np.flatnonzero(~(coefficients > 0).any(axis=1))
            for i in idle_rows:
                coefficients[i] = draw(n)
            idle_cols = np.flatnonzero(~(coefficients > 0).any(axis=0))
            for j in idle_cols:
                coefficients[:, j] = draw(m)
            if not idle_rows.size and not idle_cols.size:
                break
        else:
            raise DomainError(
                f"could not draw a valid {m}x{n} market with sparsity {spec.sparsity} "
                f"in {self.max_attempts} attempts"
            )

        market = Market.from_arrays(budgets, coefficients, spec.rho)
        logger.info(f"Generated market n={n} m={m} rho={spec.rho} seed={spec.seed} hash={market.content_hash()[:12]}")
        return market

    def market_document(self, market: Market, header: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        document = market.model_dump(mode="json")
        if header:
            document = {"header": header, **document}
        return document

    def save_market(
        self,
        market: Market,
        path: Union[str, Path],
        header: Optional[Dict[str, Any]] = None,
    ) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.market_document(market, header), indent=2) + "\n", encoding="utf-8")
        logger.info(f"Market written to {path}")
        return path

    def load_market(self, path: Union[str, Path]) -> Market:
        """
        Read a market file; the optional header is ignored

        Raises:
            pydantic.ValidationError: On malformed or invalid content
        """
        document = json.loads(Path(path).read_text(encoding="utf-8"))
        if isinstance(document, dict):
            document.pop("header", None)
        return Market.model_validate(document)

    def load_profile_models(self, path: Union[str, Path]) -> Dict[int, MentalModel]:
        """
        Read a belief file: {"sellers": {j: model}} or the bare {j: model} mapping
        """
        document = json.loads(Path(path).read_text(encoding="utf-8"))
        if isinstance(document, dict) and "sellers" in document:
            document = document["sellers"]
        return _PROFILE_ADAPTER.validate_python(document)


# Global service instance
generator_service = GeneratorService()
