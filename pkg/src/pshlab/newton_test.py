from fractions import Fraction

import pytest

from pshlab.errors import DegenerateInputError, DimensionMismatchError
from pshlab.newton import NewtonPolyhedron, as_fraction, lct_value, multiplier_contains, newton_gauge


# ##################################################################
# test lct of a diagonal ideal
# (z1^2, z2^3) has threshold 1/2 + 1/3
def test_lct_of_a_diagonal_ideal():
    assert lct_value(NewtonPolyhedron(2, ((2, 0), (0, 3)))) == Fraction(5, 6)


# ##################################################################
# test lct of the maximal ideal
# (z1, z2, z3) has threshold equal to the dimension
def test_lct_of_the_maximal_ideal():
    assert lct_value(NewtonPolyhedron(3, ((1, 0, 0), (0, 1, 0), (0, 0, 1)))) == 3


# ##################################################################
# test lct with a mixed generator
# (z1^4, z1 z2, z2^4): the diagonal meets the face through (1, 1)
def test_lct_with_a_mixed_generator():
    assert lct_value(NewtonPolyhedron(2, ((4, 0), (1, 1), (0, 4)))) == 1


# ##################################################################
# test unit ideal is infinite
def test_unit_ideal_is_infinite():
    assert lct_value(NewtonPolyhedron(2, ((0, 0), (3, 1)))) is None


# ##################################################################
# test gauge outside every multiple
# (z1) never contains a point off the z1 axis direction in the first slot
def test_gauge_outside_every_multiple():
    assert newton_gauge(NewtonPolyhedron(2, ((1, 0),)), [0, 1]) is None
    assert newton_gauge(NewtonPolyhedron(2, ((1, 0),)), [2, 1]) == Fraction(1, 2)


# ##################################################################
# test multiplier membership is strict
# 1 lies in J(c (z1^2, z2^3)) exactly for c < 5/6
def test_multiplier_membership_is_strict():
    newt = NewtonPolyhedron(2, ((2, 0), (0, 3)))
    assert multiplier_contains(newt, [0, 0], Fraction(4, 5))
    assert not multiplier_contains(newt, [0, 0], Fraction(5, 6))
    assert multiplier_contains(newt, [1, 0], 0.5)


# ##################################################################
# test generators are validated
def test_generators_are_validated():
    with pytest.raises(DegenerateInputError):
        NewtonPolyhedron(2, ())
    with pytest.raises(DimensionMismatchError):
        NewtonPolyhedron(2, ((1, 2, 3),))
    with pytest.raises(DegenerateInputError):
        NewtonPolyhedron(1, ((-1,),))


# ##################################################################
# test as fraction recovers small rationals
def test_as_fraction_recovers_small_rationals():
    assert as_fraction(1 / 9) == Fraction(1, 9)
    assert as_fraction(Fraction(2, 7)) == Fraction(2, 7)
