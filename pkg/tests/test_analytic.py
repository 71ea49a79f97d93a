"""Closed-form collision metrics and headway rules."""

import math

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy.optimize import brentq

from advtraffic.analytic import (
    RATIO_RULE_COEF,
    ROUNDED_SI_COEF,
    BoundKind,
    SafetyHeadway,
    apply_adversary,
    braking_distance,
    inf_collision_reaction_delay,
    inf_collision_speed_gain,
    irc_speed_gain,
    max_collisions,
    ratio_rule_coefficient,
    reaction_distance,
    safe_headway,
    safe_headway_ratio_kmh,
)
from advtraffic.core import AdversaryParams, ParameterError, PhysConstants, kmh_to_ms

# ---------------------------------------------------------------- distances


def test_braking_distance_values():
    assert braking_distance(kmh_to_ms(50)) == pytest.approx(14.06, abs=5e-3)
    assert braking_distance(kmh_to_ms(130)) == pytest.approx(95.05, abs=1e-2)
    assert braking_distance(0.0) == 0.0


def test_braking_distance_rejects_negative():
    with pytest.raises(ParameterError):
        braking_distance(-1.0)


def test_reaction_distance_values():
    assert reaction_distance(kmh_to_ms(130), 1.5) == pytest.approx(54.17, abs=5e-3)
    assert reaction_distance(33.0, 0.0) == 0.0
    assert reaction_distance(kmh_to_ms(25), 2.0) == pytest.approx(13.89, abs=5e-3)


def test_apply_adversary():
    assert apply_adversary(25.0, 1.5, AdversaryParams(3.75, 0.2)) == pytest.approx((28.75, 1.7))
    assert apply_adversary(25.0, 1.5, AdversaryParams()) == (25.0, 1.5)
    assert apply_adversary(25.0, 1.5, AdversaryParams(-2.5))[0] == 22.5
    with pytest.raises(ParameterError):
        apply_adversary(2.0, 1.5, AdversaryParams(-2.5))

# ---------------------------------------------------------------- collision bound


def test_bound_anchor_cells():
    big = max_collisions(25.0, 50.0, 1.5, AdversaryParams(3.75, 0.2))
    assert big.kind is BoundKind.FINITE and big.count == 53
    small = max_collisions(kmh_to_ms(20), 11.0, 1.5, AdversaryParams(kmh_to_ms(1), 0.1))
    assert small.count == 1


def test_bound_equality_is_infinite():
    b = max_collisions(10.0, 15.0, 1.5)
    assert b.kind is BoundKind.INFINITE
    assert b.unbounded and b.as_number() == math.inf and b.count is None
    assert str(b) == "infinite"


def test_bound_short_headway_is_immediate():
    b = max_collisions(10.0, 14.0, 1.5)
    assert b.kind is BoundKind.IMMEDIATE and b.unbounded


def test_bound_raw_value():
    b = max_collisions(20.0, 40.0, 1.5)
    assert b.raw == pytest.approx(braking_distance(20.0) / 10.0)
    assert b.count == math.floor(b.raw) and str(b) == str(b.count)


@pytest.mark.parametrize("v, b", [(0.0, 10.0), (10.0, 0.0)])
def test_bound_rejects(v, b):
    with pytest.raises(ParameterError):
        max_collisions(v, b)


v_st = st.floats(min_value=1.0, max_value=50.0)
b_st = st.floats(min_value=5.0, max_value=150.0)
gain_st = st.floats(min_value=0.0, max_value=15.0)
eps_st = st.floats(min_value=0.0, max_value=1.0)


@given(v_st, b_st, gain_st, gain_st, eps_st)
def test_bound_monotone_in_gain(v, b, g1, g2, eps):
    lo, hi = sorted((g1, g2))
    a = max_collisions(v, b, adv=AdversaryParams(lo, eps)).as_number()
    c = max_collisions(v, b, adv=AdversaryParams(hi, eps)).as_number()
    assert a <= c


@given(v_st, b_st, gain_st, eps_st, eps_st)
def test_bound_monotone_in_delay(v, b, g, e1, e2):
    lo, hi = sorted((e1, e2))
    a = max_collisions(v, b, adv=AdversaryParams(g, lo)).as_number()
    c = max_collisions(v, b, adv=AdversaryParams(g, hi)).as_number()
    assert a <= c


@given(v_st, b_st, gain_st, eps_st)
def test_bound_duality_with_delay_threshold(v, b, g, eps):
    threshold = inf_collision_reaction_delay(g, v, b, 1.5)
    # Stay clear of the equality band, where rounding decides either way.
    assume(abs(threshold - eps) > 1e-9)
    bound = max_collisions(v, b, 1.5, AdversaryParams(g, eps))
    if threshold < eps:
        assert bound.unbounded
    else:
        assert bound.kind is BoundKind.FINITE

# ---------------------------------------------------------------- infinite-collision locus


def test_inf_delay_values():
    v = kmh_to_ms(130)
    eps = inf_collision_reaction_delay(0.0, v, 72.0, 1.5)
    assert eps == pytest.approx(0.494, abs=5e-4)
    assert eps + 1.5 == pytest.approx(72.0 / v, rel=1e-12)
    assert inf_collision_reaction_delay(48.0 - v, v, 72.0, 1.5) == pytest.approx(0.0, abs=1e-12)


def test_inf_delay_negative_when_exhausted():
    assert inf_collision_reaction_delay(0.0, 30.0, 30.0, 1.5) < 0


def test_inf_gain_is_inverse_of_delay():
    v, b = 20.0, 45.0
    theta = inf_collision_speed_gain(0.3, v, b, 1.5)
    assert inf_collision_reaction_delay(theta, v, b, 1.5) == pytest.approx(0.3, rel=1e-12)


@given(v_st, b_st, gain_st)
def test_inf_locus_is_exact(v, b, g):
    eps = inf_collision_reaction_delay(g, v, b, 1.5)
    assert (v + g) * (1.5 + eps) == pytest.approx(b, rel=1e-12)


def _irc_oracle(v, c=PhysConstants()):
    """Bisection for the gain where braking distance equals the 2 s headway."""
    f = lambda th: braking_distance(v + th, c) - 2 * v  # noqa: E731
    return brentq(f, -v + 1e-12, 10 * v, xtol=1e-13)


def test_irc_zero_point():
    c = PhysConstants()
    assert irc_speed_gain(4 * c.decel, c) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("kmh, expected", [(50, 5.633), (130, -4.63)])
def test_irc_values(kmh, expected):
    v = kmh_to_ms(kmh)
    assert irc_speed_gain(v) == pytest.approx(_irc_oracle(v), abs=1e-9)
    assert irc_speed_gain(v) == pytest.approx(expected, abs=5e-3)


@given(st.floats(min_value=0.5, max_value=80.0))
def test_irc_duality(v):
    th = irc_speed_gain(v)
    assert braking_distance(v + th) == pytest.approx(2 * v, rel=1e-9)

# ---------------------------------------------------------------- safe headway


def test_safe_headway_values():
    v = kmh_to_ms(100)
    assert safe_headway(v).seconds == pytest.approx(1.5 + v / 13.72, rel=1e-12)
    assert safe_headway(v).seconds == pytest.approx(3.525, abs=5e-4)
    assert safe_headway(1e-6).seconds == pytest.approx(1.5, abs=1e-6)


def test_safe_headway_is_stopping_distance():
    v, adv = 20.0, AdversaryParams(5.0, 0.3)
    ell = safe_headway(v, adv).seconds
    stop = (v + 5.0) * 1.8 + braking_distance(v + 5.0)
    assert ell * v == pytest.approx(stop, rel=1e-12)


def test_safety_headway_type():
    assert SafetyHeadway(2.0).distance(10.0) == 20.0
    with pytest.raises(ParameterError):
        SafetyHeadway(0.0)


def test_ratio_rule_values():
    assert safe_headway_ratio_kmh(1e-9, 0.0).seconds == pytest.approx(1.5)
    assert safe_headway_ratio_kmh(90, 0.5, 0.5).seconds == pytest.approx(6.8475, abs=1e-12)
    for rho in (0.0, 0.3, 1.0):
        lead = safe_headway_ratio_kmh(1e-12, rho, 0.5).seconds
        assert lead == pytest.approx(2 + 2 * rho)


@given(st.floats(min_value=1.0, max_value=250.0))
def test_ratio_rule_half_gain_closed_form(v_kmh):
    ell = safe_headway_ratio_kmh(v_kmh, 0.5, 0.0).seconds
    assert math.isclose(ell, 2.25 + 0.04275 * v_kmh, rel_tol=1e-12)


def test_ratio_rule_rejects():
    with pytest.raises(ParameterError):
        safe_headway_ratio_kmh(0.0, 0.5)
    with pytest.raises(ParameterError):
        safe_headway_ratio_kmh(50.0, -0.1)


@given(st.floats(min_value=1.0, max_value=250.0), st.floats(min_value=0.0, max_value=1.0))
def test_ratio_rule_within_three_percent_of_rounded_si(v_kmh, rho):
    rounded = safe_headway_ratio_kmh(v_kmh, rho).seconds
    si = safe_headway_ratio_kmh(v_kmh, rho, coef=ROUNDED_SI_COEF).seconds
    assert abs(rounded - si) / si < 0.03


def test_ratio_rule_gap_to_exact_si_form():
    # The unrounded 1/(2 mu g) coefficient differs from 0.019 by about 6%.
    assert ratio_rule_coefficient() == pytest.approx(1 / 13.72 / 3.6)
    worst = 0.0
    for v_kmh in range(10, 251, 10):
        v = kmh_to_ms(v_kmh)
        si = safe_headway(v, AdversaryParams.from_ratio(v, 0.5)).seconds
        ratio = safe_headway_ratio_kmh(v_kmh, 0.5, coef=ratio_rule_coefficient()).seconds
        assert ratio == pytest.approx(si, rel=1e-12)
        worst = max(worst, abs(safe_headway_ratio_kmh(v_kmh, 0.5).seconds - si) / si)
    assert 0.03 < worst < 0.065
    assert RATIO_RULE_COEF == 0.019
