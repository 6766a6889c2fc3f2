from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from enum import StrEnum
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from pshlab.errors import DegenerateInputError, DimensionMismatchError, PreconditionError
from pshlab.integrability import IntegrabilityProbe, ShellGeometry
from pshlab.newton import NewtonPolyhedron, as_fraction, lct_value
from pshlab.poly import ComplexPoly
from pshlab.psh import (
    AnalyticSingularityPsh,
    ConstantPsh,
    Family,
    LogHoelderTerm,
    MaxPsh,
    PshExpr,
    ScalarField,
    SumPsh,
    evaluate,
)

logger = logging.getLogger(__name__)

R_MIN = 1e-24
R_MAX = 1e-4
N_RADII = 16
ANGLES_PER_DIM = 64
DIRECTION_SEED = 20240611
C_LO = 0.01
TOL = 0.02
BUDGET = 64
SHELL_RADIUS = 0.5
MIN_SLOPE_UNCERTAINTY = 1e-12
COEFFICIENT_ZERO_TOL = 1e-12


class InvariantMethod(StrEnum):
    EXACT_MULTIPLICITY = "exact-multiplicity"
    RADIAL_SLOPE = "radial-slope"
    HOWALD_LP = "howald-lp"
    INTEGRABILITY_BISECTION = "integrability-bisection"


EXACT_METHODS = {InvariantMethod.EXACT_MULTIPLICITY, InvariantMethod.HOWALD_LP}


# ##################################################################
# invariant estimate
# a lelong number or singularity exponent with its method, half-width
# and the sampling data behind it; exact methods carry uncertainty 0
@dataclass(frozen=True)
class InvariantEstimate:
    value: float
    method: InvariantMethod
    uncertainty: float = 0.0
    metadata: dict[str, Any] = field(default_factory=dict)
    inconclusive: bool = False

    def __post_init__(self) -> None:
        if self.value < 0 or math.isnan(self.value):
            raise DegenerateInputError(f"invariant value must be non-negative, got {self.value}")
        exact = self.method in EXACT_METHODS
        if exact != (self.uncertainty == 0):
            raise DegenerateInputError(f"method {self.method} inconsistent with uncertainty {self.uncertainty}")

    @property
    def exact(self) -> bool:
        return self.method in EXACT_METHODS

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "method": str(self.method),
            "uncertainty": self.uncertainty,
            "inconclusive": self.inconclusive,
            "metadata": self.metadata,
        }


def _exact(value: Fraction | float, method: InvariantMethod, **metadata: Any) -> InvariantEstimate:
    if isinstance(value, Fraction):
        metadata.setdefault("exact", value)
        value = float(value)
    return InvariantEstimate(value=value, method=method, uncertainty=0.0, metadata=metadata)


# ##################################################################
# lelong exact
# alpha * min_i ord_x(f_i) on the exact recentered expansions, +inf when
# every generator vanishes identically
def lelong_exact(phi: AnalyticSingularityPsh, x: Sequence[complex]) -> InvariantEstimate:
    _check_point(phi, x)
    point = [complex(v) for v in x]
    orders = [_order_or_inf(g, point) for g in phi.gens]
    value = as_fraction(phi.alpha) * min(orders)
    return _exact(value, InvariantMethod.EXACT_MULTIPLICITY, orders=orders)


# ##################################################################
# lelong radial
# least-squares slope of the sphere maxima M(r) against log r over
# log-spaced radii; the fit residual, in slope units, is the uncertainty
def lelong_radial(
    phi: PshExpr,
    x: Sequence[complex],
    r_min: float = R_MIN,
    r_max: float = R_MAX,
    n_radii: int = N_RADII,
    n_angles: int | None = None,
) -> InvariantEstimate:
    _check_point(phi, x)
    if not 0 < r_min < r_max:
        raise DegenerateInputError(f"need 0 < r_min < r_max, got {r_min}, {r_max}")
    if n_radii < 3:
        raise DegenerateInputError(f"need at least 3 radii, got {n_radii}")
    n_angles = n_angles or ANGLES_PER_DIM * phi.dim
    directions = sphere_directions(phi.dim, n_angles)
    shifted = phi.recentered(x)
    log_r = np.linspace(math.log(r_min), math.log(r_max), n_radii)
    maxima = np.array([np.max(shifted.values(math.exp(lr) * directions)) for lr in log_r])
    keep = np.isfinite(maxima)
    if not np.any(keep):
        raise DegenerateInputError("function is -inf on every sampled sphere")
    if keep.sum() < 3:
        raise DegenerateInputError("fewer than three radii with finite sphere maxima")
    slope, intercept = np.polyfit(log_r[keep], maxima[keep], 1)
    residual = maxima[keep] - (slope * log_r[keep] + intercept)
    spread = math.log(r_max) - math.log(r_min)
    uncertainty = max(2.0 * float(np.max(np.abs(residual))) / spread, MIN_SLOPE_UNCERTAINTY)
    logger.debug("radial slope %.6f over [%g, %g], uncertainty %.2e", slope, r_min, r_max, uncertainty)
    return InvariantEstimate(
        value=max(float(slope), 0.0),
        method=InvariantMethod.RADIAL_SLOPE,
        uncertainty=uncertainty,
        metadata={"r_min": r_min, "r_max": r_max, "n_radii": int(keep.sum()), "n_angles": n_angles},
    )


# ##################################################################
# sphere directions
# unit vectors in C^dim: equispaced on the circle for dim 1, fixed-seed
# normalised gaussians otherwise
def sphere_directions(dim: int, count: int) -> np.ndarray:
    if dim == 1:
        theta = 2 * math.pi * np.arange(count) / count
        return np.exp(1j * theta)[:, None]
    rng = np.random.default_rng(DIRECTION_SEED + dim)
    raw = rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))
    return raw / np.linalg.norm(raw, axis=1, keepdims=True)


# ##################################################################
# lct monomial
# howald threshold of a monomial ideal by exact rational LP
def lct_monomial(newt: NewtonPolyhedron) -> InvariantEstimate:
    value = lct_value(newt)
    if value is None:
        return _exact(math.inf, InvariantMethod.HOWALD_LP, generators=newt.to_dict()["generators"])
    return _exact(value, InvariantMethod.HOWALD_LP, generators=newt.to_dict()["generators"])


# ##################################################################
# cse bisection
# bisect on c with the shell integrability test; the bracket is checked
# first and a bracket that does not straddle the threshold is returned
# as inconclusive
def cse_bisection(
    phi: PshExpr,
    x: Sequence[complex],
    c_lo: float = C_LO,
    c_hi: float | None = None,
    tol: float = TOL,
    budget: int = BUDGET,
    r0: float = SHELL_RADIUS,
    seed: int = 0,
    geometry: ShellGeometry | str = ShellGeometry.AUTO,
    n_samples: int | None = None,
) -> InvariantEstimate:
    _check_point(phi, x)
    c_hi = float(phi.dim + 1) if c_hi is None else c_hi
    if not c_lo < c_hi:
        raise DegenerateInputError(f"need c_lo < c_hi, got {c_lo}, {c_hi}")
    if tol <= 0:
        raise DegenerateInputError(f"tolerance must be positive, got {tol}")
    if math.isfinite(evaluate(phi, x)):
        return _exact(math.inf, InvariantMethod.EXACT_MULTIPLICITY, rule="finite-value")
    if _exact_lelong(phi, [complex(v) for v in x]) == math.inf:
        return _exact(Fraction(0), InvariantMethod.EXACT_MULTIPLICITY, rule="identically-minus-inf")

    probe = IntegrabilityProbe(phi, x, geometry=geometry, r0=r0, seed=seed, n_samples=n_samples)
    trail: list[dict[str, Any]] = []

    # an undecided shell ratio is not accepted, so the bracket closes on it from above
    def convergent(c: float) -> bool:
        verdict = probe.classify(c)
        trail.append(
            {"c": c, "ratio": verdict.ratio, "convergent": verdict.convergent, "inconclusive": verdict.inconclusive}
        )
        return verdict.convergent

    meta = {"geometry": str(probe.geometry), "samples": probe.sampler.n_samples, "r0": r0, "seed": seed}
    lo, hi = float(c_lo), float(c_hi)
    if budget < 2:
        return _inconclusive(lo, hi, meta, trail, "budget")
    if not convergent(lo):
        return _inconclusive(lo, lo, meta | {"bracket": "below-bracket"}, trail, "below-bracket", value=lo / 2)
    if convergent(hi):
        return _inconclusive(hi, hi, meta | {"bracket": "above-bracket"}, trail, "above-bracket", value=hi)
    while hi - lo > tol:
        if len(trail) >= budget:
            return _inconclusive(lo, hi, meta, trail, "budget")
        mid = 0.5 * (lo + hi)
        if convergent(mid):
            lo = mid
        else:
            hi = mid
    logger.debug("cse bisection settled on [%.5f, %.5f] after %d tests", lo, hi, len(trail))
    return InvariantEstimate(
        value=0.5 * (lo + hi),
        method=InvariantMethod.INTEGRABILITY_BISECTION,
        uncertainty=0.5 * (hi - lo),
        metadata=meta
        | {"interval": [lo, hi], "steps": trail, "undecided_steps": sum(s["inconclusive"] for s in trail)},
    )


def _inconclusive(
    lo: float,
    hi: float,
    meta: dict[str, Any],
    trail: list[dict[str, Any]],
    reason: str,
    value: float | None = None,
) -> InvariantEstimate:
    half = max(0.5 * (hi - lo), lo / 2 if reason == "below-bracket" else 0.0, MIN_SLOPE_UNCERTAINTY)
    return InvariantEstimate(
        value=0.5 * (lo + hi) if value is None else value,
        method=InvariantMethod.INTEGRABILITY_BISECTION,
        uncertainty=half,
        metadata=meta | {"interval": [lo, hi], "steps": trail, "unresolved": reason},
        inconclusive=True,
    )


# ##################################################################
# lelong estimate
# exact recursive rules where the expression allows them, radial slope
# otherwise
def lelong_estimate(phi: PshExpr, x: Sequence[complex], **radial: Any) -> InvariantEstimate:
    _check_point(phi, x)
    exact = _exact_lelong(phi, [complex(v) for v in x])
    if exact is not None:
        return _exact(exact, InvariantMethod.EXACT_MULTIPLICITY, rule="structural")
    return lelong_radial(phi, x, **radial)


def _order_or_inf(f: ComplexPoly, x: list[complex]) -> Fraction | float:
    if f.is_zero():
        return math.inf
    shifted = f.recentered(x)
    if shifted.is_zero():
        return math.inf
    return Fraction(shifted.lowest_order())


def _exact_lelong(phi: PshExpr, x: list[complex]) -> Fraction | float | None:
    if isinstance(phi, AnalyticSingularityPsh):
        return as_fraction(phi.alpha) * min(_order_or_inf(g, x) for g in phi.gens)
    if isinstance(phi, LogHoelderTerm):
        return min(as_fraction(phi.alpha) * _order_or_inf(phi.a, x), as_fraction(phi.beta) * _order_or_inf(phi.b, x))
    if isinstance(phi, ConstantPsh):
        return math.inf if phi.value == -math.inf else Fraction(0)
    if isinstance(phi, ScalarField):
        return Fraction(0) if math.isfinite(evaluate(phi, x)) else None
    if isinstance(phi, MaxPsh):
        parts = [_exact_lelong(p, x) for p in phi.parts]
        return None if any(p is None for p in parts) else min(parts)
    if isinstance(phi, SumPsh):
        parts = [_exact_lelong(p, x) for _, p in phi.terms]
        if any(p is None for p in parts):
            return None
        return sum((as_fraction(w) * p for (w, _), p in zip(phi.terms, parts)), Fraction(0))
    return None


# ##################################################################
# cse estimate
# exact fast paths in order: finite value, constant -inf, generators
# monomial up to a unit (howald), linear generators (rank); bisection
# otherwise
def cse_estimate(phi: PshExpr, x: Sequence[complex], **bisection: Any) -> InvariantEstimate:
    _check_point(phi, x)
    point = [complex(v) for v in x]
    if math.isfinite(evaluate(phi, point)):
        return _exact(math.inf, InvariantMethod.EXACT_MULTIPLICITY, rule="finite-value")
    if isinstance(phi, ConstantPsh):
        return _exact(Fraction(0), InvariantMethod.EXACT_MULTIPLICITY, rule="identically-minus-inf")
    if isinstance(phi, AnalyticSingularityPsh):
        shifted = phi.recentered(point)
        if isinstance(shifted, AnalyticSingularityPsh):
            alpha = as_fraction(phi.alpha)
            heads = [g.dominant_monomial() for g in shifted.gens]
            if all(h is not None for h in heads):
                lct = lct_value(NewtonPolyhedron(phi.dim, heads))
                value = math.inf if lct is None else lct / alpha
                return _exact(value, InvariantMethod.HOWALD_LP, rule="monomial-up-to-unit", generators=heads)
            if all(g.degree() == 1 and g.lowest_order() == 1 for g in shifted.gens):
                rank = _linear_rank(shifted.gens)
                return _exact(Fraction(rank) / alpha, InvariantMethod.HOWALD_LP, rule="linear-rank", rank=rank)
    return cse_bisection(phi, point, **bisection)


def _linear_rank(gens: Sequence[ComplexPoly]) -> int:
    rows = []
    for g in gens:
        row = np.zeros(g.dim, dtype=complex)
        for e, c in g.terms.items():
            row[e.index(1)] = c
        rows.append(row)
    return int(np.linalg.matrix_rank(np.array(rows)))


# ##################################################################
# reciprocity report
# nu * c against 1 for a one-variable function
@dataclass(frozen=True)
class ReciprocityReport:
    nu: InvariantEstimate
    c: InvariantEstimate
    defect: float

    def to_dict(self) -> dict:
        return {"nu": self.nu.to_dict(), "c": self.c.to_dict(), "defect": self.defect}


def dim1_reciprocity_check(phi: PshExpr, x: Sequence[complex], seed: int = 0, **bisection: Any) -> ReciprocityReport:
    if phi.dim != 1:
        raise DimensionMismatchError(f"reciprocity is a one-variable statement, phi has dim {phi.dim}")
    nu = lelong_radial(phi, x)
    if nu.value <= 0:
        raise PreconditionError("no pole at x: lelong number is zero")
    bisection.setdefault("tol", TOL / nu.value)
    bisection.setdefault("c_hi", 2.0)
    c = cse_bisection(phi, x, seed=seed, **bisection)
    return ReciprocityReport(nu=nu, c=c, defect=abs(nu.value * c.value - 1.0))


# ##################################################################
# restriction report
# per-sample fiber thresholds with the generic value, the exceptional
# parameters and the samples whose fiber ideal is zero
@dataclass(frozen=True)
class RestrictionReport:
    generic: Fraction | float | None
    exceptional: list[dict[str, Any]]
    zero_ideal: list[list[complex]]
    samples: list[dict[str, Any]]

    def to_dict(self) -> dict:
        return {
            "generic": self.generic,
            "exceptional": self.exceptional,
            "zero_ideal": self.zero_ideal,
            "samples": self.samples,
        }


def default_w_samples() -> list[list[complex]]:
    return [[complex(k * 0.009)] for k in range(-100, 101)]


# ##################################################################
# generic restriction check
# every generator must be z^a * c(w); the fiber ideal at w keeps the
# z^a whose coefficient c(w) does not vanish, and its howald threshold
# divided by alpha is the fiber exponent at z = 0
def generic_restriction_check(
    family: Family,
    x: Sequence[complex] | None = None,
    w_samples: Sequence[Sequence[complex]] | None = None,
    zero_tol: float = COEFFICIENT_ZERO_TOL,
) -> RestrictionReport:
    phi = family.phi
    if not isinstance(phi, AnalyticSingularityPsh):
        raise PreconditionError("generic restriction needs an analytic-singularity family")
    if x is not None and any(complex(v) != 0 for v in x):
        raise PreconditionError("generic restriction is evaluated at the fiber origin only")
    if zero_tol <= 0:
        raise DegenerateInputError(f"coefficient tolerance must be positive, got {zero_tol}")
    split = []
    for g in phi.gens:
        head = g.is_monomial_in(family.n)
        if head is None:
            raise PreconditionError("generators must be monomial in z with coefficients in w")
        coef = ComplexPoly(family.m, {e[family.n :]: c for e, c in g.terms.items()}) if family.m else None
        split.append((head, coef))
    alpha = as_fraction(phi.alpha)
    samples = list(w_samples) if w_samples is not None else default_w_samples()
    rows: list[dict[str, Any]] = []
    zero_ideal: list[list[complex]] = []
    for w in samples:
        w = [complex(v) for v in w]
        heads = [head for head, coef in split if coef is None or not _vanishes(coef, w, zero_tol)]
        if not heads:
            zero_ideal.append(w)
            continue
        lct = lct_value(NewtonPolyhedron(family.n, heads))
        value: Fraction | float = math.inf if lct is None else lct / alpha
        rows.append({"w": w, "value": value})
    if not rows:
        return RestrictionReport(None, [], zero_ideal, [])
    generic, _ = Counter(r["value"] for r in rows).most_common(1)[0]
    exceptional = [r for r in rows if r["value"] != generic]
    logger.debug("generic fiber exponent %s with %d exceptional samples", generic, len(exceptional))
    return RestrictionReport(generic, exceptional, zero_ideal, rows)


def _vanishes(coef: ComplexPoly, w: list[complex], zero_tol: float) -> bool:
    value = coef(np.asarray(w))[0]
    size = sum(abs(c) * math.prod(abs(v) ** e for v, e in zip(w, exp)) for exp, c in coef.terms.items())
    return abs(value) <= zero_tol * max(size, 1e-300)


def _check_point(phi: PshExpr, x: Sequence[complex]) -> None:
    if len(x) != phi.dim:
        raise DimensionMismatchError(f"point has {len(x)} coordinates, phi has dim {phi.dim}")
