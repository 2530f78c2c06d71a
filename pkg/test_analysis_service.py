"""Tests for the Thompson metric, equilibrium oracles, contraction and decay estimates"""

import math

import numpy as np
import pytest

from conftest import make_random_market, make_symmetric_market
from models.schemas import DecayUnit, DynamicsMode, ScheduleSpec, Trajectory, TrajectoryPoint
from services import (
    FixedProfileSource,
    analysis_service,
    belief_service,
    best_response_service,
    dynamics_service,
    market_service,
)
from utils.errors import DomainError, InsufficientDataError, OracleError, SolverError


# ============================================================================
# Metric
# ============================================================================

def test_thompson_examples():
    assert analysis_service.thompson([1.0, 1.0], [2.0, 1.0]) == pytest.approx(math.log(2))
    assert analysis_service.thompson([1.0, 4.0], [1.0, 4.0]) == 0.0
    assert analysis_service.thompson([3.0, 1.0], [1.0, 2.0]) == pytest.approx(math.log(3))


def test_thompson_rejects_invalid_vectors():
    with pytest.raises(DomainError):
        analysis_service.thompson([1.0, 0.0], [1.0, 1.0])
    with pytest.raises(DomainError):
        analysis_service.thompson([1.0, -2.0], [1.0, 1.0])
    with pytest.raises(DomainError):
        analysis_service.thompson([1.0], [1.0, 1.0])


def test_thompson_metric_axioms(rng):
    for _ in range(1000):
        p, q, r = np.exp(rng.normal(size=(3, 4)))
        d_pq = analysis_service.thompson(p, q)
        assert d_pq >= 0.0
        assert d_pq == analysis_service.thompson(q, p)
        assert d_pq <= analysis_service.thompson(p, r) + analysis_service.thompson(r, q) + 1e-12
        assert analysis_service.thompson(3.7 * p, 3.7 * q) == pytest.approx(d_pq, abs=1e-12)


def test_norm_comparison_holds_in_box(random_market):
    p_min, p_max = market_service.price_bounds(random_market)
    for p, q in analysis_service.sample_pairs(random_market, 500, seed=5):
        assert analysis_service.metric_bounds_check(p, q, p_min, p_max)


def test_norm_bounds_shrink_geometrically():
    sup_0, l2_0 = analysis_service.norm_bounds([2.0, 1.0], [1.0, 1.0], 0.5, 0, 1.0, 2.0)
    assert sup_0 == pytest.approx(4.0 * math.log(2))
    assert l2_0 == pytest.approx(math.sqrt(2) * sup_0)
    sup_3, _ = analysis_service.norm_bounds([2.0, 1.0], [1.0, 1.0], 0.5, 3, 1.0, 2.0)
    assert sup_3 == pytest.approx(sup_0 / 8)


# ============================================================================
# Equilibrium
# ============================================================================

@pytest.mark.parametrize("n,m,budget", [(2, 1, 1.0), (3, 3, 1.0), (4, 6, 2.0)])
def test_symmetric_equilibrium(n, m, budget):
    market = make_symmetric_market(n, m, budget=budget)
    result = analysis_service.solve_equilibrium(market)
    np.testing.assert_allclose(result.prices.array, m * budget / n, rtol=1e-9)
    assert result.clearing_residual <= 1e-8


@pytest.mark.parametrize("seed", range(50))
def test_equilibrium_clears_and_oracles_agree(seed):
    market = make_random_market(seed=seed, n=3, m=4)
    fixed_point = analysis_service.solve_equilibrium(market)
    oracle = analysis_service.tatonnement_oracle(market)
    assert fixed_point.clearing_residual <= 1e-8
    assert market_service.in_box(market, fixed_point.prices)
    assert analysis_service.thompson(fixed_point.prices, oracle.prices) <= 1e-6


def test_equilibrium_is_a_best_response_fixed_point(random_market):
    p_star = analysis_service.solve_equilibrium(random_market).prices
    image = best_response_service.best_response_all(random_market, p_star)
    assert analysis_service.thompson(image, p_star) <= 1e-9


def test_solver_caps_raise(random_market):
    with pytest.raises(SolverError):
        analysis_service.solve_equilibrium(random_market, max_iter=1)
    with pytest.raises(OracleError):
        analysis_service.tatonnement_oracle(random_market, max_iter=3)


# ============================================================================
# Contraction
# ============================================================================

def test_sample_pairs_lie_in_box_and_repeat(random_market):
    first = analysis_service.sample_pairs(random_market, 20, seed=3)
    second = analysis_service.sample_pairs(random_market, 20, seed=3)
    for (p, q), (p2, q2) in zip(first, second):
        np.testing.assert_array_equal(p, p2)
        np.testing.assert_array_equal(q, q2)
        assert market_service.in_box(random_market, p)
        assert market_service.in_box(random_market, q)


def test_identity_ratio_is_one(random_market):
    estimate = analysis_service.estimate_contraction(random_market, lambda p: p, pairs=50, seed=0, label="identity")
    assert estimate.ratio_max == pytest.approx(1.0, abs=1e-12)
    assert estimate.sample_count == 50


def test_best_response_is_a_contraction():
    for seed in range(5):
        market = make_random_market(seed=seed, n=3, m=3)
        estimate = analysis_service.estimate_contraction(
            market, lambda p, m=market: best_response_service.best_response_all(m, p), pairs=200, seed=seed,
        )
        assert estimate.ratio_max < 1.0


def test_lookahead_contracts_no_worse_than_best_response(random_market):
    br = analysis_service.estimate_contraction(
        random_market, lambda p: best_response_service.best_response_all(random_market, p), pairs=100, seed=4,
    )
    for k in (2, 3):
        profile = belief_service.uniform_level_profile(3, k)
        brl = analysis_service.estimate_contraction(
            random_market, lambda p: belief_service.brl_update(random_market, profile, p), pairs=100, seed=4,
        )
        assert brl.ratio_max <= br.ratio_max + 0.02


def test_contraction_needs_separated_pairs(single_good_market):
    with pytest.raises(InsufficientDataError):
        analysis_service.estimate_contraction(single_good_market, lambda p: p, pairs=10, seed=0)
    with pytest.raises(DomainError):
        analysis_service.estimate_contraction(single_good_market, lambda p: p, pairs=0, seed=0)


# ============================================================================
# Decay fits
# ============================================================================

def _trajectory(rows, epoch_ends=()):
    return Trajectory(
        mode=DynamicsMode.ASYNC,
        points=[TrajectoryPoint(step=t, epoch=0, prices=tuple(row)) for t, row in enumerate(rows)],
        epoch_ends=list(epoch_ends),
    )


def test_fit_decay_recovers_geometric_rate():
    times = np.arange(10)
    fit = analysis_service.fit_decay_series(times, 0.5 ** times)
    assert fit.rate == pytest.approx(math.log(0.5))
    assert fit.residual == pytest.approx(0.0, abs=1e-12)
    assert fit.points == 10


def test_fit_decay_drops_noise_floor_points():
    fit = analysis_service.fit_decay_series(range(6), [1.0, 0.1, 0.01, 0.001, 0.0, 1e-12])
    assert fit.points == 4
    with pytest.raises(InsufficientDataError):
        analysis_service.fit_decay_series(range(4), [1.0, 0.1, 0.0, 0.0])


def test_step_ratios_skip_converged_points():
    assert analysis_service.step_ratios([1.0, 0.5, 0.0, 0.0]) == [0.5, 0.0]


def test_epoch_series_uses_boundaries():
    rows = [[math.e ** 4], [math.e ** 3], [math.e ** 2], [math.e], [1.0]]
    trajectory = _trajectory(rows, epoch_ends=[2, 4])
    times, d = analysis_service.epoch_series(trajectory, [1.0])
    assert times.tolist() == [0.0, 1.0, 2.0]
    np.testing.assert_allclose(d, [4.0, 2.0, 0.0], atol=1e-12)
    assert analysis_service.epoch_ratios(trajectory, [1.0]) == pytest.approx([0.5, 0.0])
    assert analysis_service.epoch_ratios(trajectory, [1.0], floor=3.0) == pytest.approx([0.5])


def test_lookahead_decay_rate_not_slower_than_best_response(random_market):
    p_star = analysis_service.solve_equilibrium(random_market).prices
    p0 = np.full(3, market_service.price_bounds(random_market)[1])
    br = analysis_service.estimate_contraction(
        random_market, lambda p: best_response_service.best_response_all(random_market, p), pairs=100, seed=0,
    )
    profile = belief_service.uniform_level_profile(3, 3)
    trajectory = dynamics_service.run(
        random_market, DynamicsMode.SYNC, ScheduleSpec(), FixedProfileSource(profile), p0, steps=12,
    )
    fit = analysis_service.fit_decay(trajectory, p_star, unit=DecayUnit.STEPS, label="level-3")
    assert fit.rate < 0
    assert fit.rate <= math.log(br.ratio_max) + 0.1


def test_trajectory_stays_under_norm_envelope(random_market):
    p_min, p_max = market_service.price_bounds(random_market)
    p_star = analysis_service.solve_equilibrium(random_market).prices
    p0 = np.array([p_min, p_max, p_max])
    trajectory = dynamics_service.run(
        random_market, DynamicsMode.SYNC, ScheduleSpec(),
        FixedProfileSource(belief_service.uniform_level_profile(3, 1)), p0, steps=15,
    )
    xi = max(analysis_service.step_ratios(analysis_service.distances(trajectory, p_star), floor=1e-6))
    slack = 2e-6 * p_max
    assert xi < 1.0
    for t, row in enumerate(trajectory.price_matrix):
        sup_bound, l2_bound = analysis_service.norm_bounds(p0, p_star, xi, t, p_min, p_max)
        gap = row - p_star.array
        assert np.max(np.abs(gap)) <= sup_bound + slack
        assert np.linalg.norm(gap) <= l2_bound + 2 * slack


def test_build_report_fills_oracle_distance(two_good_market):
    fixed_point = analysis_service.solve_equilibrium(two_good_market)
    oracle = analysis_service.tatonnement_oracle(two_good_market)
    report = analysis_service.build_report(
        two_good_market, "fixed-point+tatonnement", header={"command": "test"},
        equilibrium=fixed_point, oracle=oracle,
    )
    assert report.market_hash == two_good_market.content_hash()
    assert report.oracle_distance == analysis_service.thompson(fixed_point.prices, oracle.prices)
    assert report.oracle_distance <= 1e-6
    assert analysis_service.build_report(two_good_market, "none").oracle_distance is None
