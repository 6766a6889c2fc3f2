import json
import math
from fractions import Fraction

import numpy as np

from pshlab.result import make_failure, make_success, to_plain


# ##################################################################
# test make success populates all fields
# verify every field is correctly set on a successful result
def test_make_success_populates_all_fields():
    result = make_success(
        task="lct",
        index=3,
        payload={"value": 0.8333333333333334},
        method="newton-polyhedron",
        seed=7,
        elapsed_ms=150,
        notes=["monomial generators"],
    )
    assert result.success is True
    assert result.task == "lct"
    assert result.index == 3
    assert result.payload == {"value": 0.8333333333333334}
    assert result.error is None
    assert result.method == "newton-polyhedron"
    assert result.seed == 7
    assert result.elapsed_ms == 150
    assert result.inconclusive is False
    assert result.notes == ["monomial generators"]


# ##################################################################
# test make failure populates all fields
# verify every field is correctly set on a failed result
def test_make_failure_populates_all_fields():
    result = make_failure(task="lelong", index=0, error="DomainError: point outside", seed=1, elapsed_ms=5)
    assert result.success is False
    assert result.payload is None
    assert result.method is None
    assert result.error == "DomainError: point outside"
    assert result.notes == []


# ##################################################################
# test to dict drops timings by default
# elapsed time stays out of the serialized result unless asked for
def test_to_dict_drops_timings_by_default():
    result = make_success(task="scan", index=0, payload={}, method=None, seed=0, elapsed_ms=42)
    assert "elapsed_ms" not in result.to_dict()
    assert result.to_dict(timings=True)["elapsed_ms"] == 42


# ##################################################################
# test to json is valid and sorted
# verify json output parses and keys come out sorted
def test_to_json_is_valid_and_sorted():
    result = make_success(task="cse", index=1, payload={"b": 1, "a": 2}, method="bisection", seed=0, elapsed_ms=1)
    text = result.to_json()
    parsed = json.loads(text)
    assert parsed["payload"] == {"a": 2, "b": 1}
    assert text.index('"error"') < text.index('"task"')


# ====================================================================
# to plain


# ##################################################################
# test to plain spells non finite floats
# json has no infinities so they become strings
def test_to_plain_spells_non_finite_floats():
    assert to_plain([math.inf, -math.inf]) == ["inf", "-inf"]
    assert to_plain(math.nan) == "nan"


# ##################################################################
# test to plain handles complex and numpy
# complex numbers split into re/im and numpy values become python values
def test_to_plain_handles_complex_and_numpy():
    assert to_plain(1 + 2j) == {"re": 1.0, "im": 2.0}
    assert to_plain(np.float64(0.5)) == 0.5
    assert to_plain(np.array([1, 2])) == [1, 2]
    assert to_plain((np.bool_(True),)) == [True]


# ##################################################################
# test to plain keeps fractions exact
# rationals carry numerator and denominator next to their float value
def test_to_plain_keeps_fractions_exact():
    assert to_plain(Fraction(5, 6)) == {"num": 5, "den": 6, "value": 5 / 6}
