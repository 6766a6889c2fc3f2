from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from pshlab.errors import DegenerateInputError

logger = logging.getLogger(__name__)

DEFAULT_DEPTH = 20
# nodes further than this many of their own lengths use the far-field expansion
FAR_FIELD = 8.0
CONSTANT_LEVEL = 12
MAX_ENUMERATED_LEVEL = 16


# ##################################################################
# cantor spec
# generalized cantor construction: level k keeps 2^k closed intervals
# of length l_k = (1 - s_k) l_{k-1} / 2; lengths are stored as logs so
# that doubly exponential decay does not underflow
@dataclass(frozen=True)
class CantorSpec:
    s: tuple[float, ...]
    log_lengths: tuple[float, ...]

    @property
    def depth(self) -> int:
        return len(self.s)

    def length(self, k: int) -> float:
        return math.exp(self.log_lengths[k])

    def log_ratio(self, k: int) -> float:
        # log(l_k / l_{k-1}) for 1 <= k <= depth
        return self.log_lengths[k] - self.log_lengths[k - 1]

    def left_endpoints(self, level: int) -> np.ndarray:
        if not 0 <= level <= min(self.depth, MAX_ENUMERATED_LEVEL):
            raise DegenerateInputError(f"cannot enumerate level {level} of a depth-{self.depth} construction")
        lefts = np.zeros(1)
        for k in range(1, level + 1):
            lefts = np.concatenate([lefts, lefts + (self.length(k - 1) - self.length(k))])
        return np.sort(lefts)

    def intervals(self, level: int) -> np.ndarray:
        lefts = self.left_endpoints(level)
        return np.column_stack([lefts, lefts + self.length(level)])

    def gap_midpoints(self, level: int) -> np.ndarray:
        # midpoints of the gaps removed when passing from level - 1 to level
        parents = self.left_endpoints(level - 1)
        return parents + 0.5 * self.length(level - 1)

    def to_dict(self) -> dict:
        return {"s": list(self.s), "depth": self.depth, "log_lengths": list(self.log_lengths)}


def cantor_build(s: float | Sequence[float], depth: int) -> CantorSpec:
    ratios = [float(s)] * depth if isinstance(s, (int, float)) else [float(v) for v in s]
    if depth < 0 or len(ratios) < depth:
        raise DegenerateInputError(f"need {depth} ratios, got {len(ratios)}")
    ratios = ratios[:depth]
    if any(not 0 < v < 1 for v in ratios):
        raise DegenerateInputError("every ratio s_k must lie in (0, 1)")
    logs = [0.0]
    for v in ratios:
        logs.append(logs[-1] + math.log1p(-v) - math.log(2.0))
    return CantorSpec(tuple(ratios), tuple(logs))


# ##################################################################
# polar cantor
# lengths l_k = 2^{-2^k}: sum 2^{-k} log(1/l_k) diverges, so the
# potential tends to -inf on the limit set
def polar_cantor(depth: int = DEFAULT_DEPTH) -> CantorSpec:
    logs = [-(2.0**k) * math.log(2.0) for k in range(depth + 1)]
    ratios = tuple(-math.expm1(math.log(2.0) + logs[k] - logs[k - 1]) for k in range(1, depth + 1))
    return CantorSpec(ratios, tuple(logs))


# ##################################################################
# cantor cdf
# locate x in the interval tree using coordinates relative to the
# current interval; mass 2^{-k} per level-k interval, constant on gaps,
# linear inside a leaf
def cantor_cdf(spec: CantorSpec, x: float) -> float:
    if x <= 0:
        return 0.0
    if x >= 1:
        return 1.0
    u, acc = float(x), 0.0
    for k in range(1, spec.depth + 1):
        r = math.exp(spec.log_ratio(k))
        mass = 2.0**-k
        if u <= r:
            u = u / r if r > 0 else u
        elif u >= 1 - r:
            acc += mass
            u = (u - 1) / r + 1 if r > 0 else u
        else:
            return acc + mass
    return acc + 2.0**-spec.depth * min(max(u, 0.0), 1.0)


# ##################################################################
# cantor distance
# distance from w to the union of the depth-K intervals
def cantor_distance(spec: CantorSpec, w: complex) -> float:
    w = complex(w)
    return math.hypot(_real_distance(spec, w.real), w.imag)


def _real_distance(spec: CantorSpec, x: float) -> float:
    if x < 0:
        return -x
    if x > 1:
        return x - 1
    u = x
    for k in range(1, spec.depth + 1):
        r = math.exp(spec.log_ratio(k))
        if u <= r:
            u = u / r if r > 0 else u
        elif u >= 1 - r:
            u = (u - 1) / r + 1 if r > 0 else u
        else:
            return spec.length(k - 1) * min(u - r, 1 - r - u)
    return 0.0


# ##################################################################
# cantor potential
# p(w) = int log chi(w, t) dmu_K(t) with chi the chordal distance and
# mu_K uniform on the depth-K intervals; the logarithmic part descends
# the tree in relative coordinates, far nodes contribute their monopole
# and quadrupole terms and leaves are integrated exactly
class CantorPotential:
    def __init__(self, spec: CantorSpec) -> None:
        self.spec = spec
        self._memo: dict[complex, float] = {}
        self._lock = threading.Lock()
        self._constant: float | None = None
        self._second_moments = _second_moments(spec)

    @property
    def depth(self) -> int:
        return self.spec.depth

    @property
    def constant(self) -> float:
        # -(1/2) int log(1 + t^2) dmu, from the level-12 midpoints
        if self._constant is None:
            level = min(self.depth, CONSTANT_LEVEL)
            mids = self.spec.left_endpoints(level) + 0.5 * self.spec.length(level)
            self._constant = -0.5 * float(np.mean(np.log1p(mids**2)))
        return self._constant

    def logarithmic(self, w: complex) -> float:
        # int log|w - t| dmu_K(t)
        return self._node(complex(w), 0)

    def value(self, w: complex) -> float:
        w = complex(w)
        with self._lock:
            cached = self._memo.get(w)
        if cached is not None:
            return cached
        result = self.logarithmic(w) - 0.5 * math.log1p(abs(w) ** 2) + self.constant
        with self._lock:
            self._memo.setdefault(w, result)
        return result

    def values(self, ws: np.ndarray) -> np.ndarray:
        flat = np.asarray(ws, dtype=complex).ravel()
        return np.array([self.value(w) for w in flat]).reshape(np.shape(ws))

    def _node(self, u: complex, k: int) -> float:
        if k == self.depth:
            return _leaf(u)
        log_r = self.spec.log_ratio(k + 1)
        r = math.exp(log_r)
        m2 = r * r * self._second_moments[k + 1]
        total = 0.0
        for center, left in ((0.5 * r, True), (1 - 0.5 * r, False)):
            offset = u - center
            dist = abs(offset)
            if dist > 0 and math.log(dist) > math.log(FAR_FIELD) + log_r:
                total += math.log(dist) - (m2 / (2 * offset * offset)).real
                continue
            if r > 0:
                child = u / r if left else (u - 1) / r + 1
            else:
                child = u
            total += log_r + self._node(child, k + 1)
        return 0.5 * total


def _leaf(u: complex) -> float:
    # int_0^1 log|u - v| dv = Re[u log u - (u - 1) log(u - 1)] - 1
    return (_xlogx(u) - _xlogx(u - 1)).real - 1.0


def _xlogx(u: complex) -> complex:
    if u == 0:
        return 0j
    return u * np.log(complex(u))


def _second_moments(spec: CantorSpec) -> list[float]:
    # variance of a normalised level-k node measure in its own coordinates
    moments = [0.0] * (spec.depth + 1)
    moments[spec.depth] = 1.0 / 12.0
    for k in range(spec.depth - 1, -1, -1):
        r = math.exp(spec.log_ratio(k + 1))
        moments[k] = (0.5 - 0.5 * r) ** 2 + r * r * moments[k + 1]
    return moments


def cantor_potential(spec: CantorSpec, w: complex) -> float:
    return CantorPotential(spec).value(w)
