import math

import numpy as np
import pytest

from pshlab.bergman import BergmanKernelField, build_basis, kernel_at, log_psh_check, pole_scan
from pshlab.errors import DegenerateInputError, DimensionMismatchError, DomainError
from pshlab.families import GridSpec
from pshlab.poly import ComplexPoly
from pshlab.psh import AnalyticSingularityPsh, ConstantPsh, Family, Polydisc

z = ComplexPoly.variable(1, 0)
Z = ComplexPoly.variable(2, 0)
W = ComplexPoly.variable(2, 1)


# ##################################################################
# log modulus field
# log|z| on the unit disc with no parameters
def log_modulus_field(c: float = 1.0, cap: int = 8) -> BergmanKernelField:
    family = Family(AnalyticSingularityPsh(1.0, (z,)), n=1, m=0, domain=Polydisc.unit(1))
    return BergmanKernelField(family, c, degree_cap=cap)


# ##################################################################
# test admissible exponents skip the pole order
# with weight |z|^{-2} the constant is not square integrable
def test_admissible_exponents_skip_the_pole_order():
    basis = build_basis(AnalyticSingularityPsh(1.0, (z,)), 1.0, Polydisc.unit(1), degree_cap=4)
    assert basis.admissible == [(1,), (2,), (3,), (4,)]
    assert basis.excluded == ((0,),)
    assert basis.metadata["pole_orders"] == [1]


# ##################################################################
# test gram is diagonal for monomials
# the norm of z^k against |z|^{-2} on the unit disc is pi / k
def test_gram_is_diagonal_for_monomials():
    basis = build_basis(AnalyticSingularityPsh(1.0, (z,)), 1.0, Polydisc.unit(1), degree_cap=4)
    assert basis.norms == pytest.approx([math.pi / k for k in range(1, 5)], rel=1e-8)
    off = basis.gram - np.diag(np.diag(basis.gram))
    assert np.max(np.abs(off)) < 1e-10
    assert basis.reproducing_defect() < 1e-8


# ##################################################################
# test kernel matches the truncated series
# K(z) = sum_{k=1}^{8} k |z|^{2k} / pi
def test_kernel_matches_the_truncated_series():
    expected = sum(k * 0.25**k for k in range(1, 9)) / math.pi
    assert kernel_at(log_modulus_field(), [0.5], []) == pytest.approx(expected, rel=1e-6)


# ##################################################################
# test kernel vanishes at the pole
# every admissible element carries the factor z
def test_kernel_vanishes_at_the_pole():
    field = log_modulus_field()
    assert field.kernel_at([0.0], []) == 0.0
    assert field.log_kernel([0.0], []) == -math.inf


# ##################################################################
# test kernel rejects points outside the fiber
def test_kernel_rejects_points_outside_the_fiber():
    field = log_modulus_field()
    with pytest.raises(DomainError):
        field.kernel_at([1.5], [])
    with pytest.raises(DimensionMismatchError):
        field.kernel_at([0.1, 0.1], [])


# ##################################################################
# test small weight keeps the constant
# c = 1/2 gives |z|^{-1}, which is integrable, so no factor is forced
def test_small_weight_keeps_the_constant():
    field = log_modulus_field(c=0.5, cap=3)
    assert field.fiber([]).admissible == [(0,), (1,), (2,), (3,)]
    assert field.kernel_at([0.0], []) > 0


# ##################################################################
# test build basis rejects bad input
def test_build_basis_rejects_bad_input():
    with pytest.raises(DegenerateInputError):
        build_basis(AnalyticSingularityPsh(1.0, (z,)), 0.0, Polydisc.unit(1))
    with pytest.raises(DimensionMismatchError):
        build_basis(AnalyticSingularityPsh(1.0, (z,)), 1.0, Polydisc.unit(2))


# ##################################################################
# test pole scan follows the moving pole
# log|z - w| has its pole at z = w on every fiber
def test_pole_scan_follows_the_moving_pole():
    family = Family(AnalyticSingularityPsh(1.0, (Z - W,)), n=1, m=1, domain=Polydisc.unit(2))
    field = BergmanKernelField(family, 1.0, degree_cap=4)
    cloud = pole_scan(field, GridSpec.real_axes([0.0, 0.5], [0.0, 0.5]))
    assert cloud.member_indices() == {(0, 0), (1, 1)}
    assert all(p.value > -math.inf for p in cloud.points if not p.member)


# ##################################################################
# test log kernel is subharmonic along the fiber
# log K of a single weight satisfies the sub-mean-value inequality
def test_log_kernel_is_subharmonic_along_the_fiber():
    report = log_psh_check(log_modulus_field(), [([0.3], [], 0.1), ([0.0], [], 0.2)])
    assert report.worst_z <= 1e-9
    assert report.worst_w == -math.inf


# ##################################################################
# test kernel at the pole follows the weight
# the constant has norm pi / (1 - c) against |z|^{-2c}, so K(0) = (1 - c) / pi
@pytest.mark.parametrize("c", [0.25, 0.5, 0.75])
def test_kernel_at_the_pole_follows_the_weight(c):
    assert kernel_at(log_modulus_field(c=c, cap=4), [0.0], []) == pytest.approx((1 - c) / math.pi, rel=1e-3)
    assert kernel_at(log_modulus_field(c=1.5, cap=4), [0.0], []) == 0.0


# ##################################################################
# test unweighted disc kernel
def test_unweighted_disc_kernel():
    family = Family(ConstantPsh(1, 0.0), n=1, m=0, domain=Polydisc.unit(1))
    field = BergmanKernelField(family, 1.0, degree_cap=4)
    assert field.kernel_at([0.0], []) == pytest.approx(1 / math.pi, rel=1e-3)
