from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Mapping

import numpy as np

from pshlab.errors import DegenerateInputError, DimensionMismatchError

Exponent = tuple[int, ...]

# relative size below which a recentered coefficient is treated as cancellation noise
RECENTER_CLEANUP = 1e-12


# ##################################################################
# complex poly
# sparse polynomial in dim complex variables: exponent tuple -> complex
# coefficient; zero coefficients are never stored
@dataclass(frozen=True)
class ComplexPoly:
    dim: int
    terms: Mapping[Exponent, complex] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise DimensionMismatchError(f"polynomial dimension must be >= 1, got {self.dim}")
        cleaned: dict[Exponent, complex] = {}
        for exp, coef in self.terms.items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != self.dim:
                raise DimensionMismatchError(f"exponent {exp} has length {len(exp)}, expected {self.dim}")
            if any(e < 0 for e in exp):
                raise DimensionMismatchError(f"negative exponent {exp}")
            value = cleaned.get(exp, 0j) + complex(coef)
            cleaned[exp] = value
        object.__setattr__(self, "terms", {e: c for e, c in sorted(cleaned.items()) if c != 0})

    # ##################################################################
    # constructors
    @classmethod
    def constant(cls, dim: int, value: complex) -> ComplexPoly:
        return cls(dim, {(0,) * dim: value})

    @classmethod
    def variable(cls, dim: int, index: int) -> ComplexPoly:
        exp = [0] * dim
        exp[index] = 1
        return cls(dim, {tuple(exp): 1.0})

    @classmethod
    def monomial(cls, exponent: Iterable[int], coef: complex = 1.0) -> ComplexPoly:
        exp = tuple(exponent)
        return cls(len(exp), {exp: coef})

    # ##################################################################
    # arithmetic
    # ring operations used to assemble catalog families; scalars coerce
    # to constants of the same dimension
    def _coerce(self, other: ComplexPoly | complex | float | int) -> ComplexPoly:
        if isinstance(other, ComplexPoly):
            if other.dim != self.dim:
                raise DimensionMismatchError(f"cannot combine dim {self.dim} with dim {other.dim}")
            return other
        return ComplexPoly.constant(self.dim, complex(other))

    def __add__(self, other: ComplexPoly | complex | float | int) -> ComplexPoly:
        other = self._coerce(other)
        merged = dict(self.terms)
        for exp, coef in other.terms.items():
            merged[exp] = merged.get(exp, 0j) + coef
        return ComplexPoly(self.dim, merged)

    __radd__ = __add__

    def __neg__(self) -> ComplexPoly:
        return ComplexPoly(self.dim, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other: ComplexPoly | complex | float | int) -> ComplexPoly:
        return self + (-self._coerce(other))

    def __rsub__(self, other: complex | float | int) -> ComplexPoly:
        return self._coerce(other) - self

    def __mul__(self, other: ComplexPoly | complex | float | int) -> ComplexPoly:
        other = self._coerce(other)
        out: dict[Exponent, complex] = {}
        for (ea, ca), (eb, cb) in product(self.terms.items(), other.terms.items()):
            exp = tuple(a + b for a, b in zip(ea, eb))
            out[exp] = out.get(exp, 0j) + ca * cb
        return ComplexPoly(self.dim, out)

    __rmul__ = __mul__

    def __pow__(self, power: int) -> ComplexPoly:
        result = ComplexPoly.constant(self.dim, 1.0)
        for _ in range(int(power)):
            result = result * self
        return result

    # ##################################################################
    # properties
    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def exponents(self) -> list[Exponent]:
        return list(self.terms)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "terms": [{"exp": list(e), "re": c.real, "im": c.imag} for e, c in self.terms.items()],
        }

    # ##################################################################
    # call
    # evaluate at one point (shape (dim,)) or many points (shape (N, dim))
    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = _as_points(points, self.dim)
        if self.is_zero():
            return np.zeros(pts.shape[0], dtype=complex)
        exps = np.array(self.exponents(), dtype=int)
        coefs = np.array(list(self.terms.values()), dtype=complex)
        powers = np.prod(pts[:, None, :] ** exps[None, :, :], axis=2)
        return powers @ coefs

    # ##################################################################
    # log abs
    # log|f| evaluated term by term in log space with the largest term
    # factored out, so values far below the double range stay finite
    def log_abs(self, points: np.ndarray) -> np.ndarray:
        pts = _as_points(points, self.dim)
        if self.is_zero():
            return np.full(pts.shape[0], -np.inf)
        exps = np.array(self.exponents(), dtype=float)
        coefs = np.array(list(self.terms.values()), dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_mod = np.log(np.abs(pts))
            contrib = np.where(exps[None, :, :] > 0, exps[None, :, :] * log_mod[:, None, :], 0.0)
            log_terms = contrib.sum(axis=2) + np.log(np.abs(coefs))[None, :]
            phase = (exps[None, :, :] * np.angle(pts)[:, None, :]).sum(axis=2) + np.angle(coefs)[None, :]
            top = np.max(log_terms, axis=1)
            safe_top = np.where(np.isfinite(top), top, 0.0)
            scaled = np.exp(log_terms - safe_top[:, None]) * np.exp(1j * phase)
            total = np.abs(scaled.sum(axis=1))
            out = safe_top + np.log(total)
        return np.where(np.isfinite(top), out, -np.inf)

    # ##################################################################
    # restrict
    # freeze the trailing coordinates at values; result lives in the
    # leading dim - len(values) variables
    def restrict(self, values: Iterable[complex]) -> ComplexPoly:
        frozen = [complex(v) for v in values]
        keep = self.dim - len(frozen)
        if keep < 1:
            raise DimensionMismatchError(f"cannot freeze {len(frozen)} of {self.dim} variables")
        out: dict[Exponent, complex] = {}
        for exp, coef in self.terms.items():
            factor = coef
            for value, power in zip(frozen, exp[keep:]):
                factor *= value**power
            head = exp[:keep]
            out[head] = out.get(head, 0j) + factor
        return ComplexPoly(keep, out)

    # ##################################################################
    # recentered
    # exact expansion of f(x + y) in y: coefficients and x are converted
    # to gaussian rationals, expanded binomially, and terms that are pure
    # cancellation noise of the float input are dropped
    def recentered(self, x: Iterable[complex]) -> ComplexPoly:
        center = [complex(v) for v in x]
        if len(center) != self.dim:
            raise DimensionMismatchError(f"center has {len(center)} coordinates, expected {self.dim}")
        if all(c == 0 for c in center):
            return self
        gx = [_to_gaussian(c) for c in center]
        acc: dict[Exponent, tuple[Fraction, Fraction]] = {}
        scale = 0.0
        for exp, coef in self.terms.items():
            gc = _to_gaussian(coef)
            scale += abs(coef) * math.prod((1.0 + abs(c)) ** e for c, e in zip(center, exp))
            per_var = [_binomial_row(gx[i], exp[i]) for i in range(self.dim)]
            for choice in product(*per_var):
                value = gc
                shifted = []
                for b, g in choice:
                    value = _gmul(value, g)
                    shifted.append(b)
                key = tuple(shifted)
                old = acc.get(key, (Fraction(0), Fraction(0)))
                acc[key] = (old[0] + value[0], old[1] + value[1])
        cutoff = RECENTER_CLEANUP * scale
        out = {}
        for key, (re, im) in acc.items():
            value = complex(float(re), float(im))
            if abs(value) > cutoff:
                out[key] = value
        return ComplexPoly(self.dim, out)

    # ##################################################################
    # lowest order
    # least total degree among stored terms
    def lowest_order(self) -> int:
        if self.is_zero():
            raise DegenerateInputError("zero polynomial has no order")
        return min(sum(e) for e in self.terms)

    # ##################################################################
    # leading monomial
    # exponent a with a <= every other stored exponent componentwise, i.e.
    # f = z^a * unit near 0; None when no such exponent exists
    def dominant_monomial(self) -> Exponent | None:
        if self.is_zero():
            return None
        exps = self.exponents()
        for cand in exps:
            if all(all(c <= e for c, e in zip(cand, other)) for other in exps):
                return cand
        return None

    def is_monomial_in(self, count: int) -> Exponent | None:
        # every term shares the same exponent in the leading `count` variables
        heads = {e[:count] for e in self.terms}
        if len(heads) != 1:
            return None
        return next(iter(heads))


# ##################################################################
# vanishing order
# multiplicity of f at x: least total degree of the recentered expansion
def vanishing_order(f: ComplexPoly, x: Iterable[complex]) -> int:
    if f.is_zero():
        raise DegenerateInputError("vanishing order of the zero polynomial is undefined")
    shifted = f.recentered(x)
    if shifted.is_zero():
        raise DegenerateInputError("polynomial cancels identically after recentering")
    return shifted.lowest_order()


# ##################################################################
# as points
# normalise a single point or a batch to shape (N, dim) complex
def _as_points(points: np.ndarray, dim: int) -> np.ndarray:
    pts = np.asarray(points, dtype=complex)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise DimensionMismatchError(f"points of shape {np.shape(points)} do not match dim {dim}")
    return pts


def _to_gaussian(value: complex) -> tuple[Fraction, Fraction]:
    return Fraction(value.real), Fraction(value.imag)


def _gmul(a: tuple[Fraction, Fraction], b: tuple[Fraction, Fraction]) -> tuple[Fraction, Fraction]:
    return a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0]


# ##################################################################
# binomial row
# (x + y)^n = sum_b C(n, b) x^(n-b) y^b as (b, coefficient) pairs
def _binomial_row(x: tuple[Fraction, Fraction], n: int) -> list[tuple[int, tuple[Fraction, Fraction]]]:
    powers = [(Fraction(1), Fraction(0))]
    for _ in range(n):
        powers.append(_gmul(powers[-1], x))
    row = []
    for b in range(n + 1):
        c = math.comb(n, b)
        p = powers[n - b]
        row.append((b, (p[0] * c, p[1] * c)))
    return row
