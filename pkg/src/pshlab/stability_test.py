import math
from fractions import Fraction

import numpy as np
import pytest

from pshlab.errors import DegenerateInputError, DimensionMismatchError, EtaSearchError, PreconditionError
from pshlab.poly import ComplexPoly
from pshlab.psh import AnalyticSingularityPsh, ConstantPsh, Polydisc, SumPsh
from pshlab.stability import (
    FIBER_CONDITION,
    RAISED_CONDITION,
    WEIGHTED_CONDITION,
    RationalPowerIntegrand,
    StabilityHypotheses,
    find_eta,
    hypothesis_check,
    integral_family,
    lemma_nb_check,
    lemma_nb_constant,
    nondegenerate_check,
    siu_limit_check,
)

Z = ComplexPoly.variable(2, 0)
W = ComplexPoly.variable(2, 1)
ONE = ComplexPoly.constant(2, 1.0)
z = ComplexPoly.variable(1, 0)
W_SAMPLES = [-0.2, -0.1, 0.0, 0.1, 0.2]


# ##################################################################
# inverse modulus
# R = 1/|z|, independent of w
def inverse_modulus() -> RationalPowerIntegrand:
    return RationalPowerIntegrand((ONE,), (Z,), eps=2, delta=1, n=1, m=1)


# ##################################################################
# moving numerator
# R = |z - w| / |z|^2: finite at w = 0 only
def moving_numerator() -> RationalPowerIntegrand:
    return RationalPowerIntegrand((Z - W,), (Z,), eps=1, delta=2, n=1, m=1)


# ##################################################################
# hypotheses
# beta = 1/4 and alpha = 9/10 on the unit disc
def hypotheses() -> StabilityHypotheses:
    return StabilityHypotheses(
        beta=Fraction(1, 4),
        alpha=0.9,
        q1=Polydisc((0j,), (0.75,)),
        q2=Polydisc((0j,), (0.5,)),
        eps_radius=0.5,
    )


# ====================================================================
# integrand


# ##################################################################
# test integrand validates its polynomials
def test_integrand_validates_its_polynomials():
    with pytest.raises(DegenerateInputError):
        RationalPowerIntegrand((ComplexPoly(2, {}),), (Z,), eps=2, delta=1, n=1, m=1)
    with pytest.raises(DimensionMismatchError):
        RationalPowerIntegrand((ONE,), (z,), eps=2, delta=1, n=1, m=1)
    with pytest.raises(DegenerateInputError):
        RationalPowerIntegrand((ONE,), (Z,), eps=2, delta=-1, n=1, m=1)


# ##################################################################
# test integrand log values
# log R = eps log|F| - delta log|G|
def test_integrand_log_values():
    values = moving_numerator().log_values(np.array([[0.5, 0.25]]))
    assert values[0] == pytest.approx(math.log(0.25) - 2 * math.log(0.5))
    assert moving_numerator().eps == Fraction(1)


# ##################################################################
# test fiber with a vanishing numerator is zero
# F = (w) vanishes identically on the fiber w = 0
def test_fiber_with_a_vanishing_numerator_is_zero():
    R = RationalPowerIntegrand((W,), (Z,), eps=2, delta=1, n=1, m=1)
    fiber = R.fiber([0.0])
    assert fiber.m == 0
    assert fiber.log_values(np.array([[0.3]]))[0] == -math.inf


# ====================================================================
# non-degeneracy


# ##################################################################
# test degenerate pairs
# with eps = 2 and delta = 2 the pairs are (0, 3) and (1, 6)
def test_degenerate_pairs():
    report = nondegenerate_check(2, 2, 6, 6)
    assert report.pairs == [(0, 3), (1, 6)]
    assert not report.non_degenerate


# ##################################################################
# test degenerate pairs with a fractional delta
# [delta] = 0 for delta = 1/2, so l * delta / 1 = 2 needs l = 4
def test_degenerate_pairs_with_a_fractional_delta():
    assert nondegenerate_check(2, Fraction(1, 2), 6, 6).pairs == [(0, 4)]


# ##################################################################
# test zero delta is never degenerate
def test_zero_delta_is_never_degenerate():
    assert nondegenerate_check(2, 0, 6, 6).non_degenerate


# ##################################################################
# test find eta picks the smallest clean candidate
def test_find_eta_picks_the_smallest_clean_candidate():
    grid = [Fraction(1, 3), Fraction(1, 5), Fraction(1, 7)]
    assert find_eta(2, 2, 3, 3, grid) == Fraction(1, 7)


# ##################################################################
# test find eta failures
# empty grids and fully blocked grids raise, out of range candidates too
def test_find_eta_failures():
    with pytest.raises(EtaSearchError):
        find_eta(2, 2, 3, 3, [])
    with pytest.raises(EtaSearchError) as info:
        find_eta(2, 1, 3, 3, [1])
    assert len(info.value.blocked) == 1
    with pytest.raises(PreconditionError):
        find_eta(2, 2, 3, 3, [2])


# ====================================================================
# hypotheses


# ##################################################################
# test hypotheses validate their parameters
def test_hypotheses_validate_their_parameters():
    with pytest.raises(PreconditionError):
        StabilityHypotheses(Fraction(1, 4), 0.5, Polydisc((0j,), (0.75,)), Polydisc((0j,), (0.5,)), 0.5)
    with pytest.raises(PreconditionError):
        StabilityHypotheses(Fraction(1, 4), 0.9, Polydisc((0j,), (0.5,)), Polydisc((0.3,), (0.5,)), 0.5)


# ##################################################################
# test hypotheses hold for the inverse modulus
def test_hypotheses_hold_for_the_inverse_modulus():
    checked = hypothesis_check(inverse_modulus(), hypotheses())
    assert checked.results[FIBER_CONDITION].holds
    assert checked.results[RAISED_CONDITION].holds
    assert checked.results[WEIGHTED_CONDITION].holds


# ##################################################################
# test moving numerator fails the weighted condition
# the fiber at 0 is fine, but the parameter-weighted integral diverges
def test_moving_numerator_fails_the_weighted_condition():
    checked = hypothesis_check(moving_numerator(), hypotheses())
    assert checked.results[FIBER_CONDITION].holds
    assert not checked.results[WEIGHTED_CONDITION].holds
    assert not checked.all_hold


# ##################################################################
# test hypothesis check needs one parameter
def test_hypothesis_check_needs_one_parameter():
    R = RationalPowerIntegrand((ComplexPoly.constant(1, 1.0),), (z,), eps=2, delta=1, n=1, m=0)
    with pytest.raises(DimensionMismatchError):
        hypothesis_check(R)


# ====================================================================
# integral family


# ##################################################################
# test inverse modulus integrates to pi
# 1/|z| over the disc of radius 1/2 is pi at every w
def test_inverse_modulus_integrates_to_pi():
    report = integral_family(inverse_modulus(), 0.5, W_SAMPLES)
    for row in report.samples:
        assert row["value"] == pytest.approx(math.pi, abs=1e-3)
    assert report.continuous


# ##################################################################
# test moving numerator jumps at zero
# the integral is finite at w = 0 and infinite elsewhere
def test_moving_numerator_jumps_at_zero():
    report = integral_family(moving_numerator(), 0.5, W_SAMPLES)
    divergent = [row["divergent"] for row in report.samples]
    assert divergent == [True, True, False, True, True]
    assert report.samples[2]["value"] == pytest.approx(math.pi, abs=1e-3)
    assert not report.continuous
    assert report.max_jump > 10 * report.threshold


# ====================================================================
# limits and bounds


# ##################################################################
# test parameter averages converge to the fiber
# e^{-phi} = 1/|z| does not depend on w, so every average equals 2 pi r1
def test_parameter_averages_converge_to_the_fiber():
    phi = AnalyticSingularityPsh(1.0, (Z,))
    report = siu_limit_check(phi, ComplexPoly.constant(1, 1.0), 0.5, [0.1, 0.01, 0.001])
    assert report.fiber == pytest.approx(math.pi, rel=1e-6)
    assert report.converging
    assert report.measured_c == pytest.approx(1.0, abs=0.02)


# ##################################################################
# test parameter averages with a numerator
# |z|^2 / |z| over |z| < 1/2 is 2 pi (1/2)^3 / 3
def test_parameter_averages_with_a_numerator():
    phi = AnalyticSingularityPsh(1.0, (Z,))
    report = siu_limit_check(phi, Z, 0.5, [0.1, 0.01])
    assert report.fiber == pytest.approx(2 * math.pi / 24, rel=1e-6)
    assert report.converging


# ##################################################################
# test divergent fiber is rejected
def test_divergent_fiber_is_rejected():
    phi = AnalyticSingularityPsh(2.0, (Z,))
    with pytest.raises(PreconditionError):
        siu_limit_check(phi, ComplexPoly.constant(1, 1.0), 0.5, [0.1])


# ##################################################################
# test bound constant
# inf of e^{eps x} / x^alpha over x >= 1
def test_bound_constant():
    assert lemma_nb_constant(1.0, 1.0) == pytest.approx((math.e, 1.0))
    constant, x_star = lemma_nb_constant(0.5, 2.0)
    assert x_star == 4.0
    assert constant == pytest.approx(math.e**2 / 16)


# ##################################################################
# test exponential bound holds
# phi = (1/4) log|z| - 1 stays below -1 on the unit disc
def test_exponential_bound_holds():
    phi = SumPsh(((1.0, AnalyticSingularityPsh(0.25, (z,))), (1.0, ConstantPsh(1, -1.0))))
    report = lemma_nb_check(phi, ComplexPoly.constant(1, 1.0), eps=1.0, alpha=1.0)
    assert report.constant == pytest.approx(math.e)
    assert report.holds
    assert report.slack > 0


# ##################################################################
# test exponential bound needs phi below minus one
def test_exponential_bound_needs_phi_below_minus_one():
    with pytest.raises(PreconditionError):
        lemma_nb_check(AnalyticSingularityPsh(1.0, (z,)), ComplexPoly.constant(1, 1.0), eps=1.0, alpha=1.0)
