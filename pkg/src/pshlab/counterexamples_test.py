import math
from fractions import Fraction

import pytest

from pshlab.counterexamples import (
    WangFamily,
    default_li_grid,
    li_catalog,
    li_example,
    li_fiber_lelong,
    nonanalyticity_demo,
    wang_catalog,
    wang_fiber_lelong,
    wang_phi,
)
from pshlab.errors import DomainError, PreconditionError
from pshlab.invariants import InvariantMethod


# ====================================================================
# wang family


# ##################################################################
# test wang terms
# c = 1: alpha_k = 1/k^2, m_k = k^2, beta_k = 2, every target is 1
def test_wang_terms():
    fam = WangFamily(1.0, 5)
    assert [t.m_k for t in fam.terms] == [1, 4, 9, 16, 25]
    assert fam.terms[2].alpha_k == Fraction(1, 9)
    assert all(t.target == 1 for t in fam.terms)


# ##################################################################
# test wang poles
# phi(0, w_k) = -inf at every w_k while phi(0, 0) stays finite
def test_wang_poles():
    fam = WangFamily(1.0, 5)
    for t in fam.terms:
        assert wang_phi(fam, 0.0, t.w_k) == -math.inf
    assert math.isfinite(wang_phi(fam, 0.0, 0.0))
    with pytest.raises(DomainError):
        wang_phi(fam, 1.0, 0.0)


# ##################################################################
# test wang fiber lelong numbers
# nu_0(phi_{w_k}) is within 5% of its target and vanishes at w = 0
def test_wang_fiber_lelong_numbers():
    fam = WangFamily(1.0, 5)
    for k in range(1, 6):
        est = wang_fiber_lelong(fam, k)
        assert est.value == pytest.approx(float(est.metadata["target"]), rel=0.05)
    assert wang_fiber_lelong(fam, 0).value <= 0.05


# ##################################################################
# test wang catalog rows
def test_wang_catalog_rows():
    fam = WangFamily(1.0, 3)
    rows = wang_catalog(fam)
    assert [r["w"] for r in rows] == [0.0, 0.5, 1 / 3, 0.25]
    assert [r["member"] for r in rows] == [False, True, True, True]


# ##################################################################
# test wang rejects bad parameters
def test_wang_rejects_bad_parameters():
    with pytest.raises(PreconditionError):
        WangFamily(0.0, 5)
    with pytest.raises(PreconditionError):
        wang_fiber_lelong(WangFamily(1.0, 2), 3)


# ====================================================================
# li example


# ##################################################################
# test li slopes
# slope 4 at a limit-set endpoint, slope 2 at the first gap
def test_li_slopes():
    ex = li_example(20)
    at_endpoint = li_fiber_lelong(ex, 0.0)
    at_gap = li_fiber_lelong(ex, 0.5)
    assert at_endpoint.value == pytest.approx(4.0, abs=0.05)
    assert at_gap.value == pytest.approx(2.0, abs=0.05)
    assert not at_endpoint.metadata["crossover_in_window"]


# ##################################################################
# test li polar hook
# p = -inf leaves only the slope-4 branch and is answered exactly
def test_li_polar_hook():
    est = li_fiber_lelong(li_example(20), 0.3, p=-math.inf)
    assert est.value == 4.0
    assert est.method == InvariantMethod.EXACT_MULTIPLICITY
    assert est.metadata["rule"] == "polar"


# ##################################################################
# test li window lies between the crossovers
def test_li_window_lies_between_the_crossovers():
    ex = li_example(20)
    lo, hi = ex.window
    assert ex.crossover_radius(0.0) < lo < hi < ex.crossover_radius(0.5)


# ##################################################################
# test li catalog separates endpoints from gaps
def test_li_catalog_separates_endpoints_from_gaps():
    ex = li_example(20)
    rows = li_catalog(ex, [0.0, 0.25 ** 2, 0.5, 1.0])
    assert [r["member"] for r in rows] == [True, True, False, True]
    assert rows[2]["distance"] == pytest.approx(0.25)


# ##################################################################
# test default grid sizes
# 32 endpoints of level 4 and 1 + 2 + 4 + 8 gap midpoints
def test_default_grid_sizes():
    assert len(default_li_grid(li_example(20).spec)) == 47


# ##################################################################
# test nonanalyticity demo
# the level set hugs the cantor set and no low-degree polynomial cuts it out
def test_nonanalyticity_demo():
    report = nonanalyticity_demo(li_example(20))
    assert len(report.members) == 32
    assert report.hausdorff < 1e-4
    assert not report.probe.certified
