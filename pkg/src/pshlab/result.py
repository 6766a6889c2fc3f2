from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict, field
from fractions import Fraction
from typing import Any


# ##################################################################
# task result
# structured result of one scenario task; never raises, always
# returns success or failure with context for diagnostics
@dataclass(frozen=True)
class TaskResult:
    success: bool
    task: str
    index: int
    payload: dict[str, Any] | None
    error: str | None
    method: str | None
    seed: int
    elapsed_ms: int
    inconclusive: bool = False
    notes: list[str] = field(default_factory=list)

    # ##################################################################
    # to dict
    # convert to plain dict for serialization; runtimes only on request
    # so that repeated runs stay byte-identical
    def to_dict(self, timings: bool = False) -> dict:
        data = asdict(self)
        if not timings:
            data.pop("elapsed_ms")
        return to_plain(data)

    # ##################################################################
    # to json
    # convert to json string
    def to_json(self, timings: bool = False) -> str:
        return json.dumps(self.to_dict(timings=timings), ensure_ascii=False, sort_keys=True)


# ##################################################################
# make success
# convenience constructor for successful tasks
def make_success(
    task: str,
    index: int,
    payload: dict[str, Any],
    method: str | None,
    seed: int,
    elapsed_ms: int,
    inconclusive: bool = False,
    notes: list[str] | None = None,
) -> TaskResult:
    return TaskResult(
        success=True,
        task=task,
        index=index,
        payload=payload,
        error=None,
        method=method,
        seed=seed,
        elapsed_ms=elapsed_ms,
        inconclusive=inconclusive,
        notes=list(notes or []),
    )


# ##################################################################
# make failure
# convenience constructor for failed tasks
def make_failure(
    task: str,
    index: int,
    error: str,
    seed: int,
    elapsed_ms: int,
) -> TaskResult:
    return TaskResult(
        success=False,
        task=task,
        index=index,
        payload=None,
        error=error,
        method=None,
        seed=seed,
        elapsed_ms=elapsed_ms,
    )


# ##################################################################
# to plain
# recursively convert numpy scalars, complex numbers, tuples and
# non-finite floats into json-safe python values
def to_plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if hasattr(value, "to_dict"):
        return to_plain(value.to_dict())
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, complex):
        return {"re": to_plain(value.real), "im": to_plain(value.imag)}
    if hasattr(value, "item") and not hasattr(value, "__len__"):
        return to_plain(value.item())
    if hasattr(value, "tolist"):
        return to_plain(value.tolist())
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, Fraction):
        return {"num": value.numerator, "den": value.denominator, "value": to_plain(float(value))}
    return str(value)
