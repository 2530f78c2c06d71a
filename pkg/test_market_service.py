"""Tests for CES demand, spending, utility and the price box."""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from config import settings
from conftest import make_random_market
from models.schemas import Market, PriceVector
from services import best_response_service, market_service
from utils.errors import DomainError


# ============================================================================
# Market construction
# ============================================================================

def test_market_derived_fields(two_good_market):
    assert two_good_market.epsilon == pytest.approx(1.0)
    assert two_good_market.total_budget == 1.0
    assert two_good_market.num_goods == 2
    assert two_good_market.num_buyers == 1


@pytest.mark.parametrize("rho", [1.2, -0.5, 0.0, 1.0, float("nan")])
def test_market_rejects_rho_outside_wgs_range(rho):
    with pytest.raises(ValidationError, match="weak-gross-substitutes"):
        Market.from_arrays([1.0], [[1.0, 1.0]], rho)


def test_market_rejects_good_without_buyers():
    with pytest.raises(ValidationError, match="no buyer"):
        Market.from_arrays([1.0, 1.0], [[1.0, 0.0], [2.0, 0.0]], 0.5)


def test_market_rejects_buyer_without_goods():
    with pytest.raises(ValidationError, match="no good"):
        Market.from_arrays([1.0, 1.0], [[1.0, 1.0], [0.0, 0.0]], 0.5)


def test_market_rejects_non_positive_budget():
    with pytest.raises(ValidationError):
        Market.from_arrays([0.0], [[1.0, 1.0]], 0.5)


def test_market_rejects_shape_mismatch():
    with pytest.raises(ValidationError):
        Market(num_goods=3, num_buyers=1, rho=0.5, budgets=(1.0,), coefficients=((1.0, 1.0),))


def test_price_vector_rejects_non_positive_entries():
    with pytest.raises(ValidationError):
        PriceVector(prices=(1.0, 0.0))


# ============================================================================
# Demand
# ============================================================================

def test_demand_symmetric_split(two_good_market):
    x = market_service.demand(two_good_market, [1.0, 1.0])
    assert x.quantities[0] == pytest.approx((0.5, 0.5))


def test_demand_single_good_takes_whole_budget():
    market = Market.from_arrays([3.0], [[5.0]], 0.3)
    x = market_service.demand(market, [2.0])
    assert x.quantities[0][0] == pytest.approx(1.5)


def test_demand_two_goods_unequal_prices(two_good_market):
    x = market_service.demand(two_good_market, [1.0, 2.0])
    assert x.quantities[0] == pytest.approx((2 / 3, 1 / 6), rel=1e-12)
    assert 2 / 3 * 1.0 + 1 / 6 * 2.0 == pytest.approx(1.0)


def test_demand_rejects_non_positive_price(two_good_market):
    with pytest.raises(DomainError):
        market_service.demand(two_good_market, [1.0, -1.0])
    with pytest.raises(DomainError):
        market_service.demand(two_good_market, [1.0])


def test_demand_respects_zero_coefficients():
    market = Market.from_arrays([1.0, 2.0], [[2.0, 0.0, 1.0], [0.0, 1.0, 3.0]], 0.6)
    x = market_service.demand(market, [0.7, 1.3, 2.1]).array
    assert x[0, 1] == 0.0
    assert x[1, 0] == 0.0


def test_budget_exhaustion_on_random_markets():
    rng = np.random.default_rng(1)
    for case in range(200):
        market = make_random_market(seed=case, n=int(rng.integers(1, 7)), m=int(rng.integers(1, 7)),
                                    rho=float(rng.uniform(0.05, 0.95)), sparsity=0.3)
        p = np.exp(rng.uniform(-3, 3, size=market.num_goods))
        x = market_service.demand(market, p).array
        spent = x @ p
        np.testing.assert_allclose(spent, market.budget_array, rtol=settings.INVARIANT_RTOL)


def test_demand_survives_rho_close_to_one():
    market = Market.from_arrays([1.0, 1.0], [[50.0, 1.0], [1.0, 80.0]], 0.995)
    x = market_service.demand(market, [3.0, 0.2]).array
    assert np.all(np.isfinite(x))
    np.testing.assert_allclose(x @ np.array([3.0, 0.2]), [1.0, 1.0], rtol=1e-10)


# ============================================================================
# Good demand
# ============================================================================

def test_good_demand_at_clearing_price(two_good_market):
    assert market_service.good_demand(two_good_market, [0.5, 0.5], 0) == pytest.approx(1.0)


def test_good_demand_single_good():
    market = Market.from_arrays([3.0], [[5.0]], 0.5)
    assert market_service.good_demand(market, [3.0], 0) == pytest.approx(1.0)


def test_good_demand_matches_demand_column(random_market):
    p = [0.8, 1.7, 2.5]
    x = market_service.demand(random_market, p)
    for j in range(random_market.num_goods):
        assert market_service.good_demand(random_market, p, j) == sum(row[j] for row in x.quantities)


def test_good_demand_index_error(two_good_market):
    with pytest.raises(IndexError):
        market_service.good_demand(two_good_market, [1.0, 1.0], 2)


def test_good_demand_decreases_in_own_price(random_market):
    base = np.array([1.0, 1.5, 2.0])
    for j in range(random_market.num_goods):
        values = []
        for own in np.linspace(0.5, 5.0, 20):
            p = base.copy()
            p[j] = own
            values.append(market_service.good_demand(random_market, p, j))
        assert all(a > b for a, b in zip(values, values[1:]))


# ============================================================================
# Spending
# ============================================================================

def test_good_spending_single_good_is_budget():
    market = Market.from_arrays([4.0], [[1.0]], 0.5)
    for alpha in (0.1, 1.0, 17.0):
        assert market_service.good_spending(market, [1.0], 0, alpha) == pytest.approx(4.0)


def test_good_spending_symmetric_split(two_good_market):
    assert market_service.good_spending(two_good_market, [123.0, 1.0], 0, 1.0) == pytest.approx(0.5)


def test_good_spending_ignores_own_entry(two_good_market):
    assert market_service.good_spending(two_good_market, [-5.0, 1.0], 0, 1.0) == pytest.approx(0.5)


def test_good_spending_rejects_bad_alpha(two_good_market):
    with pytest.raises(DomainError):
        market_service.good_spending(two_good_market, [1.0, 1.0], 0, 0.0)
    with pytest.raises(DomainError):
        market_service.good_spending(two_good_market, [1.0, 1.0], 0, -2.0)


def test_good_spending_strictly_decreasing_on_grid():
    rng = np.random.default_rng(7)
    for seed in range(100):
        market = make_random_market(seed=seed, n=int(rng.integers(2, 6)), m=int(rng.integers(1, 6)),
                                    rho=float(rng.uniform(0.2, 0.6)), sparsity=0.0)
        p_min, p_max = market_service.price_bounds(market)
        p_other = np.exp(rng.uniform(math.log(p_min), math.log(p_max), size=market.num_goods))
        j = int(rng.integers(market.num_goods))
        grid = np.geomspace(p_min, p_max, 50)
        spending = [market_service.good_spending(market, p_other, j, a) for a in grid]
        assert all(a > b for a, b in zip(spending, spending[1:])), f"seed {seed}"
        assert max(spending) <= market.total_budget * (1 + 1e-12)


def test_good_spending_with_single_minded_buyer():
    market = Market.from_arrays([2.0, 3.0], [[1.0, 0.0], [1.0, 2.0]], 0.5)
    # buyer 0 only values good 0; buyer 1 values both
    low = market_service.good_spending(market, [1.0, 1.0], 0, 0.5)
    high = market_service.good_spending(market, [1.0, 1.0], 0, 5.0)
    assert low > high > 2.0


# ============================================================================
# Utility
# ============================================================================

def test_utility_direct_substitution(two_good_market):
    assert market_service.utility(two_good_market, [[1.0, 1.0]], 0) == pytest.approx(4.0)


def test_utility_of_nothing_is_zero(two_good_market):
    assert market_service.utility(two_good_market, [[0.0, 0.0]], 0) == 0.0


def test_utility_skips_zero_coefficient_terms():
    market = Market.from_arrays([1.0, 1.0], [[2.0, 0.0], [1.0, 1.0]], 0.5)
    assert market_service.utility(market, [[3.0, 7.0], [0.0, 0.0]], 0) == pytest.approx(6.0)


def test_utility_index_error(two_good_market):
    with pytest.raises(IndexError):
        market_service.utility(two_good_market, [[1.0, 1.0]], 1)


def test_demand_maximises_utility_on_budget_line(two_good_market):
    p = np.array([1.0, 2.0])
    best = market_service.utility(two_good_market, market_service.demand(two_good_market, p), 0)
    for share in np.linspace(0.01, 0.99, 25):
        x = [[share / p[0], (1 - share) / p[1]]]
        assert market_service.utility(two_good_market, x, 0) <= best + 1e-12


# ============================================================================
# Price box & profit
# ============================================================================

def test_price_bounds_single_good():
    market = Market.from_arrays([3.0], [[1.0]], 0.5)
    assert market_service.price_bounds(market)[1] == pytest.approx(3.0)


def test_price_bounds_p_max_is_total_budget():
    market = Market.from_arrays([1.0, 2.0], [[1.0, 1.0], [2.0, 1.0]], 0.4)
    assert market_service.price_bounds(market)[1] == pytest.approx(3.0)


def test_price_bounds_symmetric(two_good_market):
    p_min, p_max = market_service.price_bounds(two_good_market)
    assert p_min == pytest.approx(0.5)
    assert p_max == pytest.approx(1.0)


def test_price_box_is_invariant_under_best_response():
    for seed in range(10):
        market = make_random_market(seed=seed, n=3, m=4)
        p_min, p_max = market_service.price_bounds(market)
        assert 0 < p_min <= p_max
        corners = [np.full(3, p_min), np.full(3, p_max), np.array([p_min, p_max, p_min])]
        for p in corners:
            image = best_response_service.best_response_all(market, p).array
            assert np.all(image >= p_min * (1 - 1e-12))
            assert np.all(image <= p_max * (1 + 1e-12))
            assert market_service.in_box(market, image)


def test_in_box_uses_invariant_tolerance(monkeypatch, two_good_market):
    nudged = [0.5 * (1 - 1e-9), 1.0]
    assert not market_service.in_box(two_good_market, nudged)
    monkeypatch.setattr(settings, "INVARIANT_RTOL", 1e-8)
    assert market_service.in_box(two_good_market, nudged)
    assert not market_service.in_box(two_good_market, nudged, rtol=0.0)
    assert not market_service.in_box(two_good_market, [1.0 + 1e-6, 1.0])


def test_profit_is_maximised_at_clearing_price(random_market):
    p = np.array([1.0, 1.2, 0.9])
    for j in range(random_market.num_goods):
        clearing = best_response_service.best_response(random_market, p, j).price
        at_clearing = market_service.profit(random_market, np.where(np.arange(3) == j, clearing, p), j)
        for price in np.geomspace(clearing / 4, clearing * 4, 41):
            trial = p.copy()
            trial[j] = price
            assert market_service.profit(random_market, trial, j) <= at_clearing * (1 + 1e-9)


def test_clearing_residual_zero_at_symmetric_equilibrium(two_good_market):
    assert market_service.clearing_residual(two_good_market, [0.5, 0.5]) == pytest.approx(0.0, abs=1e-14)
