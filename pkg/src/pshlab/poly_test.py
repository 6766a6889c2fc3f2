import math

import numpy as np
import pytest

from pshlab.errors import DegenerateInputError, DimensionMismatchError
from pshlab.poly import ComplexPoly, vanishing_order

Z = ComplexPoly.variable(2, 0)
W = ComplexPoly.variable(2, 1)


# ##################################################################
# test zero coefficients are dropped
# terms that cancel leave no stored entry behind
def test_zero_coefficients_are_dropped():
    p = (Z + W) - W
    assert p.exponents() == [(1, 0)]
    assert (Z - Z).is_zero()


# ##################################################################
# test rejects mismatched exponent
# exponent tuples must match the declared dimension
def test_rejects_mismatched_exponent():
    with pytest.raises(DimensionMismatchError):
        ComplexPoly(2, {(1,): 1.0})
    with pytest.raises(DimensionMismatchError):
        Z + ComplexPoly.variable(3, 0)


# ##################################################################
# test evaluation at points
# single points and batches evaluate to the same numbers
def test_evaluation_at_points():
    p = Z**2 - 3 * W + 1
    single = p(np.array([2.0, 1.0]))
    batch = p(np.array([[2.0, 1.0], [0.0, 0.0]]))
    assert single[0] == pytest.approx(2.0)
    assert batch[1] == pytest.approx(1.0)


# ##################################################################
# test log abs survives tiny arguments
# log|z^40| at |z| = 1e-10 is far below the double range but stays finite
def test_log_abs_survives_tiny_arguments():
    p = ComplexPoly.monomial((40,))
    value = p.log_abs(np.array([1e-10]))[0]
    assert value == pytest.approx(40 * math.log(1e-10))


# ##################################################################
# test log abs at zero is minus infinity
def test_log_abs_at_zero_is_minus_infinity():
    assert (Z * W).log_abs(np.array([0.0, 0.5]))[0] == -math.inf


# ##################################################################
# test restrict freezes trailing variables
# f(z, w) = z^2 + z w + w^2 at w = 2 becomes z^2 + 2 z + 4
def test_restrict_freezes_trailing_variables():
    p = (Z**2 + Z * W + W**2).restrict([2.0])
    assert p.dim == 1
    assert p.terms == {(0,): 4.0, (1,): 2.0, (2,): 1.0}


# ##################################################################
# test recentered expands exactly
# (z - 1/2)^3 recentered at 1/2 is a single monomial
def test_recentered_expands_exactly():
    z = ComplexPoly.variable(1, 0)
    p = (z - 0.5) ** 3
    assert p.recentered([0.5]).exponents() == [(3,)]


# ##################################################################
# test vanishing order
# multiplicity is the least total degree after recentering
def test_vanishing_order():
    assert vanishing_order(Z**2 + W**3, [0, 0]) == 2
    assert vanishing_order((W - 0.5) ** 2 + Z**3, [0, 0.5]) == 2
    assert vanishing_order(Z + 1, [0, 0]) == 0


# ##################################################################
# test degenerate orders raise
# the zero polynomial has no order
def test_degenerate_orders_raise():
    with pytest.raises(DegenerateInputError):
        ComplexPoly(2, {}).lowest_order()
    with pytest.raises(DegenerateInputError):
        vanishing_order(ComplexPoly(2, {}), [0, 0])


# ##################################################################
# test dominant monomial
# z^2 w + z^3 w^2 is z^2 w times a unit; z^2 + w^3 has no dominant term
def test_dominant_monomial():
    assert (Z**2 * W + Z**3 * W**2).dominant_monomial() == (2, 1)
    assert (Z**2 + W**3).dominant_monomial() is None
