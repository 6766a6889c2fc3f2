import math

import numpy as np
import pytest
from scipy.special import logsumexp

from pshlab.errors import DegenerateInputError, DomainError
from pshlab.integrability import IntegrabilityProbe, ShellGeometry, ShellSampler, choose_geometry
from pshlab.poly import ComplexPoly
from pshlab.psh import AnalyticSingularityPsh

Z1 = ComplexPoly.variable(2, 0)
Z2 = ComplexPoly.variable(2, 1)


# ##################################################################
# test one variable threshold
# |z|^{-2c} is integrable near 0 exactly for c < 1
def test_one_variable_threshold():
    phi = AnalyticSingularityPsh(1.0, (ComplexPoly.variable(1, 0),))
    probe = IntegrabilityProbe(phi, [0j], n_samples=1024)
    assert probe.geometry == ShellGeometry.ANNULUS
    below = probe.classify(0.5)
    above = probe.classify(1.5)
    assert below.convergent
    assert below.ratio == pytest.approx(0.5, rel=0.05)
    assert not above.convergent


# ##################################################################
# test monomial ideal uses slabs
# (z1^2, z2^3) is monomial at the origin and gets log-polydisc shells
def test_monomial_ideal_uses_slabs():
    phi = AnalyticSingularityPsh(1.0, (Z1**2, Z2**3))
    assert choose_geometry(phi, [0, 0]) == ShellGeometry.SLAB
    assert choose_geometry(AnalyticSingularityPsh(1.0, (Z1 - Z2**2,)), [0, 0]) == ShellGeometry.ANNULUS


# ##################################################################
# test slab verdicts around the threshold
# threshold of (z1^2, z2^3) is 5/6
def test_slab_verdicts_around_the_threshold():
    phi = AnalyticSingularityPsh(1.0, (Z1**2, Z2**3))
    probe = IntegrabilityProbe(phi, [0, 0], n_samples=1024, seed=3)
    assert probe.classify(0.4).convergent
    assert not probe.classify(1.5).convergent


# ##################################################################
# test extra weight shifts the threshold
# multiplying by |z|^2 moves the one-variable threshold from 1 to 2
def test_extra_weight_shifts_the_threshold():
    phi = AnalyticSingularityPsh(1.0, (ComplexPoly.variable(1, 0),))
    probe = IntegrabilityProbe(phi, [0j], n_samples=1024)
    extra = [2 * np.log(np.abs(pts[:, 0])) for pts in probe.sampler.points]
    assert probe.classify(1.5, extra).convergent
    assert not probe.classify(2.5, extra).convergent


# ##################################################################
# test sampler is deterministic
# the same seed reproduces the same shell points
def test_sampler_is_deterministic():
    a = ShellSampler(2, ShellGeometry.ANNULUS, 0.5, seed=11, n_samples=256)
    b = ShellSampler(2, ShellGeometry.ANNULUS, 0.5, seed=11, n_samples=256)
    assert np.array_equal(a.points[0], b.points[0])


# ##################################################################
# geometric shells
# log integrand whose shell integrals are exactly q^j
def geometric_shells(sampler: ShellSampler, q: float) -> list[np.ndarray]:
    return [
        np.full(len(logw), j * math.log(q)) - logsumexp(logw)
        for j, logw in zip(sampler.shell_index, sampler.log_weights)
    ]


# ##################################################################
# test ratios near one are undecided
# 0.99 is neither accepted nor rejected, 0.9 converges and 1.1 diverges
def test_ratios_near_one_are_undecided():
    sampler = ShellSampler(1, ShellGeometry.ANNULUS, 0.5, seed=0, n_samples=64)
    near = sampler.classify(geometric_shells(sampler, 0.99))
    assert near.ratio == pytest.approx(0.99, rel=1e-9)
    assert not near.convergent
    assert near.inconclusive
    below = sampler.classify(geometric_shells(sampler, 0.9))
    assert below.convergent
    assert not below.inconclusive
    above = sampler.classify(geometric_shells(sampler, 1.1))
    assert not above.convergent
    assert not above.inconclusive

# ##################################################################
# test sampler rejects bad input
def test_sampler_rejects_bad_input():
    with pytest.raises(DegenerateInputError):
        ShellSampler(1, ShellGeometry.AUTO, 0.5, seed=0)
    with pytest.raises(DomainError):
        ShellSampler(1, ShellGeometry.ANNULUS, 0.0, seed=0)
