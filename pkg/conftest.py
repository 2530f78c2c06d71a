"""
Shared pytest fixtures: small hand-checkable markets and seeded random ones
"""

import numpy as np
import pytest

from models.experiment import MarketGeneratorSpec
from models.schemas import Market
from services import generator_service


def make_random_market(seed: int, n: int = 3, m: int = 4, rho: float = 0.5, sparsity: float = 0.2) -> Market:
    spec = MarketGeneratorSpec(num_goods=n, num_buyers=m, rho=rho, sparsity=sparsity, seed=seed)
    return generator_service.generate_market(spec)


def make_symmetric_market(n: int, m: int, budget: float = 1.0, rho: float = 0.5) -> Market:
    return Market.from_arrays([budget] * m, np.ones((m, n)), rho)


@pytest.fixture
def two_good_market() -> Market:
    """m=1, n=2, b=1, c=(1,1), rho=1/2 (eps=1); equilibrium (0.5, 0.5)"""
    return Market.from_arrays([1.0], [[1.0, 1.0]], 0.5)


@pytest.fixture
def single_good_market() -> Market:
    return Market.from_arrays([4.0], [[1.0]], 0.5)


@pytest.fixture
def three_good_market() -> Market:
    """Symmetric 3x3 market, unit budgets; equilibrium all ones"""
    return make_symmetric_market(3, 3)


@pytest.fixture
def random_market() -> Market:
    return make_random_market(seed=11)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(2024)
