import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import BASELINE, markets
from poitariff.core_model import (
    STAY_HOME,
    VISIT,
    VISIT_AND_INTERACT,
    InvalidParameters,
    MarketParams,
    UserType,
    VenueChoice,
    check_params,
    cutoff_shift,
    investment_threshold,
    net_poi_surplus,
    stage3_fractions,
    user_best_response,
    validate_params,
)


def test_baseline_is_valid():
    assert validate_params(BASELINE) == []


def test_cost_bound_violation_is_reported():
    bad = BASELINE.replace(c_max=10.0)  # U + V + θN = 18
    problems = validate_params(bad)
    assert len(problems) == 1 and problems[0].startswith("c_max ≤ U+V+θN")
    with pytest.raises(InvalidParameters) as err:
        check_params(bad)
    assert err.value.violations == problems


def test_eta_above_one_is_reported():
    assert any("η outside [0,1]" in m for m in validate_params(BASELINE.replace(eta=1.2)))


def test_several_violations_are_all_listed():
    problems = validate_params(BASELINE.replace(N=-1.0, k=0.0, phi=-0.1))
    assert len(problems) >= 3


def test_from_dict_round_trip_and_key_checks():
    assert MarketParams.from_dict(BASELINE.to_dict()) == BASELINE
    d = BASELINE.to_dict()
    d.pop("k")
    with pytest.raises(KeyError, match="k"):
        MarketParams.from_dict(d)
    with pytest.raises(KeyError, match="gamma"):
        MarketParams.from_dict({**BASELINE.to_dict(), "gamma": 1})


def test_venue_choice_rejects_bad_values():
    with pytest.raises(ValueError):
        VenueChoice(2, 0.0)
    with pytest.raises(ValueError):
        VenueChoice(1, -1.0)


def test_indifferent_user_stays_home():
    u = UserType(omega=1, c=BASELINE.U)
    assert user_best_response(u, VenueChoice(0, 0.0), 0.0, BASELINE) == STAY_HOME


def test_user_indifferent_about_interacting_only_visits():
    # g = V − δyN/T = 1 − 0.25·4 = 0 exactly.
    p = MarketParams(N=4, c_max=20, U=3, V=1, theta=0, delta=1, I0=1, b=1, k=1, eta=0.5, phi=0)
    assert net_poi_surplus(0.25, 1.0, p) == 0.0
    assert user_best_response(UserType(1, 1.0), VenueChoice(1, 0.0), 0.25, p) == VISIT
    assert user_best_response(UserType(1, 1.0), VenueChoice(1, 0.0), 0.2, p) == VISIT_AND_INTERACT


def test_user_choices_follow_payoffs():
    v = VenueChoice(1, 1.0)
    assert user_best_response(UserType(0, 1.0), v, 0.0, BASELINE) == VISIT_AND_INTERACT
    assert user_best_response(UserType(0, 1.0), VenueChoice(0, 0.0), 0.0, BASELINE) == STAY_HOME
    assert user_best_response(UserType(1, 1.0), VenueChoice(0, 0.0), 0.0, BASELINE) == VISIT
    with pytest.raises(ValueError):
        user_best_response(UserType(1, 1.0), v, 1.5, BASELINE)


def test_no_infrastructure_blocks_interaction():
    p = BASELINE.replace(I0=0.0)
    assert net_poi_surplus(0.3, 0.0, p) == -math.inf
    out = stage3_fractions(VenueChoice(1, 0.0), p)
    assert out.y_bar == 0.0 and out.case_tag == "B"


def test_no_poi_outcome():
    out = stage3_fractions(VenueChoice(0, 5.0), BASELINE)
    assert out.case_tag == "A"
    assert out.x_bar == pytest.approx(BASELINE.eta * BASELINE.U / BASELINE.c_max)
    assert out.y_bar == 0.0


def test_baseline_case_c_by_hand():
    # T = 0.6: y = (ηU + V)T / ((c − θN)T + δN) = 3.36 / 28.4.
    out = stage3_fractions(VenueChoice(1, 0.0), BASELINE)
    assert out.case_tag == "C"
    assert out.y_bar == pytest.approx(3.36 / 28.4, rel=1e-12)
    assert out.c_t == pytest.approx(3.36 / 28.4 * 24 - 0.6, rel=1e-12)
    assert out.x_bar == pytest.approx(0.2 * (3 + out.c_t) / 24, rel=1e-12)


def test_threshold_formula_and_zero_popularity_limit():
    th = investment_threshold(BASELINE)
    assert th == pytest.approx(0.1 / (0.05 + 5 * 24 / (0.2 * 3 * 200)), rel=1e-12)
    assert investment_threshold(BASELINE.replace(eta=0.0)) == 0.0


def test_large_investment_limit():
    p = BASELINE
    out = stage3_fractions(VenueChoice(1, 1e9), p)
    limit = (p.V * p.c_max + p.eta * p.U * p.N * p.theta) / (p.c_max - p.N * p.theta)
    assert out.c_t == pytest.approx(limit, rel=1e-6)


def _strict_interactor_share(g, p):
    """Mass of users strictly preferring to interact when the net surplus is g."""
    if g <= 0:
        return 0.0
    return (p.eta * min(p.U + g, p.c_max) + (1 - p.eta) * min(g, p.c_max)) / p.c_max


@given(markets(), st.floats(0.0, 3.0))
def test_outcome_is_a_user_equilibrium(p, scale):
    I = scale * max(investment_threshold(p), 1e-3)
    out = stage3_fractions(VenueChoice(1, I), p)
    g = net_poi_surplus(out.y_bar, I + p.I0, p)
    assert 0.0 <= out.y_bar <= 1.0
    if out.case_tag == "C":
        assert g == pytest.approx(out.c_t, rel=1e-9, abs=1e-12)
        assert _strict_interactor_share(g, p) == pytest.approx(out.y_bar, rel=1e-9)
    else:
        # Interaction is rationed: users are indifferent and the share fits
        # among the visitors who come anyway.
        if out.y_bar > 0:
            assert g == pytest.approx(0.0, abs=1e-9 * p.V)
        assert out.y_bar <= p.eta * p.U / p.c_max * (1 + 1e-12)
        assert out.x_bar == pytest.approx(p.eta * p.U / p.c_max)


@given(markets(small_initial=True), st.floats(0.0, 1.0))
def test_fractions_are_nondecreasing_in_investment(p, u):
    th = investment_threshold(p)
    a = u * 2 * th
    b = a + 0.01 * max(th, 1e-6)
    lo, hi = (stage3_fractions(VenueChoice(1, x), p) for x in (a, b))
    assert hi.y_bar >= lo.y_bar - 1e-12
    assert hi.x_bar >= lo.x_bar - 1e-12


@given(markets(small_initial=True))
def test_cases_join_continuously_at_the_threshold(p):
    edge = investment_threshold(p) - p.I0
    eps = 1e-9 * max(edge, 1e-3)
    below = stage3_fractions(VenueChoice(1, max(edge - eps, 0.0)), p)
    above = stage3_fractions(VenueChoice(1, edge + eps), p)
    assert above.y_bar == pytest.approx(below.y_bar, rel=1e-6, abs=1e-9)
    assert above.x_bar == pytest.approx(below.x_bar, rel=1e-6, abs=1e-9)
    assert cutoff_shift(edge + p.I0, p) == pytest.approx(0.0, abs=1e-6 * p.V)
