import math

import numpy as np
import pytest

from pshlab.errors import DomainError
from pshlab.quadrature import disc_integral, polar_rule, product_integral


# ##################################################################
# test area of the unit disc
# the constant integrand integrates to pi
def test_area_of_the_unit_disc():
    result = disc_integral(lambda z: np.zeros(z.shape), 0j, 1.0)
    assert not result.divergent
    assert result.value == pytest.approx(math.pi, rel=1e-10)


# ##################################################################
# test inverse modulus on a half disc
# 1/|z| over |z| < 1/2 is 2 pi * 1/2
def test_inverse_modulus_on_a_half_disc():
    result = disc_integral(lambda z: -np.log(np.abs(z)), 0j, 0.5, poles=[0j])
    assert result.value == pytest.approx(math.pi, rel=1e-8)


# ##################################################################
# test off center pole
# 1/|z - 1/4| on the unit disc is finite and split by the partition
def test_off_center_pole():
    result = disc_integral(lambda z: -np.log(np.abs(z - 0.25)), 0j, 1.0, poles=[0.25, -0.5])
    assert not result.divergent
    assert 2 * math.pi * 0.75 < result.value < 2 * math.pi * 1.25


# ##################################################################
# test inverse square diverges
# 1/|z|^2 has equal mass on every dyadic panel
def test_inverse_square_diverges():
    result = disc_integral(lambda z: -2 * np.log(np.abs(z)), 0j, 0.5, poles=[0j])
    assert result.divergent
    assert result.value == math.inf


# ##################################################################
# test polar rule rejects outside pole
def test_polar_rule_rejects_outside_pole():
    with pytest.raises(DomainError):
        polar_rule(0j, 1.0, 2.0)


# ##################################################################
# test product of two discs
# the constant integrand over a bidisc of radii 1 and 1/2 is pi^2 / 4
def test_product_of_two_discs():
    z_rule = polar_rule(0j, 1.0, 0j, n_theta=16, n_gl=4, depth=30)
    w_rule = polar_rule(0j, 0.5, 0j, n_theta=16, n_gl=4, depth=30)
    result = product_integral(lambda z, w: np.zeros(z.shape), z_rule, w_rule)
    assert result.value == pytest.approx(math.pi**2 / 4, rel=1e-6)
