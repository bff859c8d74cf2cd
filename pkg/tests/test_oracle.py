import numpy as np
import pytest

from conftest import BASELINE, RANDOM_SEED
from poitariff.core_model import VenueChoice, stage3_fractions, validate_params
from poitariff.oracle import (
    OracleConfig,
    oracle_app,
    oracle_app_search,
    oracle_stage3,
    oracle_venue,
    oracle_venue_search,
    random_params,
)
from poitariff.tariff_optimizer import app_revenue, optimal_two_part
from poitariff.venue_response import Tariff, max_lump_sum, price_breakpoints, venue_best_response

CFG = OracleConfig()


def test_config_validation():
    with pytest.raises(ValueError):
        OracleConfig(cost_bins=1)
    with pytest.raises(ValueError):
        OracleConfig(fixed_point_tol=0.0)
    assert OracleConfig.from_grid(50).investment_steps == 500


def test_no_poi_population():
    assert oracle_stage3(VenueChoice(0, 3.0), BASELINE, CFG) == pytest.approx((0.2 * 3 / 24, 0.0))


def test_baseline_interaction_share():
    x, y = oracle_stage3(VenueChoice(1, 0.0), BASELINE, CFG)
    closed = stage3_fractions(VenueChoice(1, 0.0), BASELINE)
    assert y == pytest.approx(0.1183, abs=1e-4)
    assert (x, y) == pytest.approx((closed.x_bar, closed.y_bar), abs=1e-6)


def test_congestion_vanishes_with_huge_investment():
    p = BASELINE
    _, y = oracle_stage3(VenueChoice(1, 1e6), p, CFG)
    shift = (p.V * p.c_max + p.eta * p.U * p.N * p.theta) / (p.c_max - p.N * p.theta)
    assert y == pytest.approx((p.eta * p.U + shift) / p.c_max, abs=1e-6)


def test_rationed_case_share():
    p = BASELINE.replace(I0=0.02)
    x, y = oracle_stage3(VenueChoice(1, 0.01), p, CFG)
    total = 0.03
    assert y == pytest.approx(p.V * total / ((p.delta - p.theta * total) * p.N), abs=1e-9)
    assert x == pytest.approx(p.eta * p.U / p.c_max, abs=1e-9)


def test_venue_declines_an_excessive_fee():
    t = Tariff(max_lump_sum(0.0, BASELINE) + 1.0, 0.0)
    assert oracle_venue(t, BASELINE, CFG) == VenueChoice(0, 0.0)


def test_venue_investment_near_closed_form():
    t = optimal_two_part(BASELINE)
    # At the fee limit the grid cannot beat the plain payoff; shave one cent.
    t = Tariff(t.l - 0.01, t.p)
    s = oracle_venue_search(t, BASELINE, CFG)
    assert s.choice.r == 1
    assert abs(s.choice.I - venue_best_response(t, BASELINE).I) <= s.step


def test_venue_stops_investing_beyond_breakpoint():
    price = price_breakpoints(BASELINE).p3 + 0.02
    t = Tariff(min(max_lump_sum(price, BASELINE), 0.0) - 0.1, price)
    assert oracle_venue(t, BASELINE, CFG) == VenueChoice(1, 0.0)


def test_app_grid_optimum_brackets_closed_form():
    s = oracle_app_search(BASELINE, CFG)
    best = app_revenue(optimal_two_part(BASELINE), BASELINE)
    assert s.revenue <= best + 1e-9
    assert s.revenue >= best - s.slack


def test_without_ad_revenue_grid_charge_is_near_zero():
    p = BASELINE.replace(phi=0.0)
    s = oracle_app_search(p, CFG)
    assert abs(s.tariff.p) <= s.price_step


def test_grid_optimum_beats_single_instrument_restrictions():
    p = BASELINE
    t, best = oracle_app(p, OracleConfig(tariff_points=60, investment_steps=600))
    small = OracleConfig(tariff_points=60, investment_steps=600)
    # Restrictions evaluated through the oracle's own venue response.
    fees = np.linspace(0.0, 1.5 * t.l, 60)
    lump = max(_oracle_revenue(Tariff(float(l), 0.0), p, small) for l in fees)
    prices = np.linspace(-p.phi - p.b * p.eta - 1.0, p.b * p.eta + 1.0, 60)
    per = max(_oracle_revenue(Tariff(0.0, float(x)), p, small) for x in prices)
    assert best >= lump and best >= per


def _oracle_revenue(t, p, cfg):
    v = oracle_venue(t, p, cfg)
    _, y = oracle_stage3(v, p, cfg)
    return v.r * (t.l + t.p * p.N * y) + p.phi * p.N * y


def test_random_sets_are_valid_and_reproducible():
    a = random_params(np.random.default_rng(RANDOM_SEED), 20)
    b = random_params(np.random.default_rng(RANDOM_SEED), 20)
    assert a == b
    assert all(validate_params(q) == [] for q in a)
