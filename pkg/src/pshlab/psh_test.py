import math

import numpy as np
import pytest

from pshlab.errors import DegenerateInputError, DimensionMismatchError, DomainError
from pshlab.poly import ComplexPoly
from pshlab.psh import (
    AnalyticSingularityPsh,
    ConstantPsh,
    Family,
    LogHoelderTerm,
    MaxPsh,
    Polydisc,
    ScalarField,
    SumPsh,
    common_zeros,
    evaluate,
    pole_points,
    restrict_fiber,
    scale,
)

Z = ComplexPoly.variable(2, 0)
W = ComplexPoly.variable(2, 1)


# ##################################################################
# log norm
# phi = log ||(z, w)|| used across several tests
def log_norm() -> AnalyticSingularityPsh:
    return AnalyticSingularityPsh(1.0, (Z, W))


# ====================================================================
# polydisc


# ##################################################################
# test polydisc rejects bad radii
def test_polydisc_rejects_bad_radii():
    with pytest.raises(DomainError):
        Polydisc((0j,), (0.0,))
    with pytest.raises(DimensionMismatchError):
        Polydisc((0j, 0j), (1.0,))


# ##################################################################
# test polydisc contains boundary
# containment is closed
def test_polydisc_contains_boundary():
    disc = Polydisc((0j, 0.5), (1.0, 0.25))
    assert disc.contains([1.0, 0.75])
    assert not disc.contains([0.0, 0.8])


# ====================================================================
# expressions


# ##################################################################
# test analytic singularity values
# log ||(z, w)|| at (3/5, 4/5) is log 1 = 0
def test_analytic_singularity_values():
    values = log_norm().values(np.array([[0.6, 0.8], [0.0, 0.0]]))
    assert values[0] == pytest.approx(0.0, abs=1e-14)
    assert values[1] == -math.inf


# ##################################################################
# test analytic singularity rejects zero generators
def test_analytic_singularity_rejects_zero_generators():
    with pytest.raises(DegenerateInputError):
        AnalyticSingularityPsh(1.0, (ComplexPoly(2, {}),))
    with pytest.raises(DegenerateInputError):
        AnalyticSingularityPsh(0.0, (Z,))


# ##################################################################
# test restrict to zero fiber gives minus infinity
# restricting log|w| to w = 0 leaves a constant -inf fiber
def test_restrict_to_zero_fiber_gives_minus_infinity():
    fiber = AnalyticSingularityPsh(1.0, (W,)).restrict([0.0])
    assert isinstance(fiber, ConstantPsh)
    assert fiber.value == -math.inf


# ##################################################################
# test max and sum combine pointwise
def test_max_and_sum_combine_pointwise():
    a = AnalyticSingularityPsh(1.0, (Z,))
    b = ConstantPsh(2, -1.0)
    pts = np.array([[0.1, 0.0], [0.9, 0.0]])
    assert np.allclose(MaxPsh((a, b)).values(pts), [-1.0, math.log(0.9)])
    assert np.allclose(SumPsh(((2.0, a), (1.0, b))).values(pts), [2 * math.log(0.1) - 1, 2 * math.log(0.9) - 1])


# ##################################################################
# test sum drops zero weights
# 0 * (-inf) must never be formed
def test_sum_drops_zero_weights():
    total = SumPsh(((0.0, ConstantPsh(1, -math.inf)), (1.0, ConstantPsh(1, 2.0))))
    assert total.values(np.array([[0.0]]))[0] == 2.0


# ##################################################################
# test log hoelder term
# log(|w|^2 + |z|^3) vanishes only at the origin
def test_log_hoelder_term():
    term = LogHoelderTerm(W, Z, 2.0, 3.0)
    assert evaluate(term, [0.0, 0.0]) == -math.inf
    assert evaluate(term, [0.0, 0.5]) == pytest.approx(math.log(0.25))


# ##################################################################
# test scalar field restrict and recenter
# frozen coordinates and shifts reach the wrapped callable
def test_scalar_field_restrict_and_recenter():
    field = ScalarField(2, lambda pts: pts[:, 1].real)
    assert evaluate(field.restrict([0.25]), [0.0]) == 0.25
    assert evaluate(field.recentered([0.0, 0.5]), [0.0, 0.25]) == 0.75


# ##################################################################
# test scale keeps exponent exact
def test_scale_keeps_exponent_exact():
    scaled = scale(log_norm(), 3.0)
    assert isinstance(scaled, AnalyticSingularityPsh)
    assert scaled.alpha == 3.0
    with pytest.raises(DegenerateInputError):
        scale(log_norm(), 0.0)


# ====================================================================
# families


# ##################################################################
# test family checks dimensions
def test_family_checks_dimensions():
    with pytest.raises(DimensionMismatchError):
        Family(log_norm(), n=1, m=0, domain=Polydisc.unit(2))


# ##################################################################
# test restrict fiber rejects parameters outside the base
def test_restrict_fiber_rejects_parameters_outside_the_base():
    family = Family(log_norm(), n=1, m=1, domain=Polydisc.unit(2))
    assert evaluate(restrict_fiber(family, [0.0]), [0.5]) == pytest.approx(math.log(0.5))
    with pytest.raises(DomainError):
        restrict_fiber(family, [2.0])


# ====================================================================
# poles


# ##################################################################
# test common zeros in one variable
# z^2 (z - 1/2) has roots 0 and 1/2 inside the unit disc, 0 counted once
def test_common_zeros_in_one_variable():
    z = ComplexPoly.variable(1, 0)
    roots = common_zeros([z**2 * (z - 0.5)], Polydisc.unit(1))
    found = sorted(complex(r[0]).real for r in roots)
    assert found == pytest.approx([0.0, 0.5], abs=1e-6)


# ##################################################################
# test common zeros of linear generators
def test_common_zeros_of_linear_generators():
    roots = common_zeros([Z - W, W - 0.25], Polydisc.unit(2))
    assert len(roots) == 1
    assert np.allclose(roots[0], [0.25, 0.25])


# ##################################################################
# test pole points of a max
# a max is -inf only where every part is
def test_pole_points_of_a_max():
    phi = MaxPsh((AnalyticSingularityPsh(1.0, (Z, W)), ConstantPsh(2, -5.0)))
    assert pole_points(phi, Polydisc.unit(2)) == []
    assert len(pole_points(log_norm(), Polydisc.unit(2))) == 1
