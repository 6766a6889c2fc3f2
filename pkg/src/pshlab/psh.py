from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import least_squares
from scipy.special import logsumexp

from pshlab.errors import DegenerateInputError, DimensionMismatchError, DomainError
from pshlab.poly import ComplexPoly

logger = logging.getLogger(__name__)

ROOT_CLUSTER_TOL = 1e-6
ROOT_RESIDUAL_TOL = 1e-8
MAX_ISOLATED_POLES = 4


# ##################################################################
# polydisc
# product of discs: center and strictly positive radii per coordinate
@dataclass(frozen=True)
class Polydisc:
    center: tuple[complex, ...]
    radii: tuple[float, ...]

    def __post_init__(self) -> None:
        center = tuple(complex(c) for c in self.center)
        radii = tuple(float(r) for r in self.radii)
        if len(center) != len(radii):
            raise DimensionMismatchError("polydisc center and radii differ in length")
        if not radii or any(r <= 0 for r in radii):
            raise DomainError(f"polydisc radii must be strictly positive, got {radii}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radii", radii)

    @classmethod
    def unit(cls, dim: int) -> Polydisc:
        return cls((0j,) * dim, (1.0,) * dim)

    @property
    def dim(self) -> int:
        return len(self.radii)

    # ##################################################################
    # contains
    # closed containment with a relative slack for points built from
    # the same floats as the radii
    def contains(self, point: Iterable[complex]) -> bool:
        pt = np.asarray(list(point), dtype=complex)
        if pt.shape != (self.dim,):
            raise DimensionMismatchError(f"point of length {pt.size} against polydisc of dim {self.dim}")
        dist = np.abs(pt - np.asarray(self.center))
        return bool(np.all(dist <= np.asarray(self.radii) * (1 + 1e-12)))

    def split(self, n: int) -> tuple[Polydisc, Polydisc]:
        return (
            Polydisc(self.center[:n], self.radii[:n]),
            Polydisc(self.center[n:], self.radii[n:]),
        )

    def to_dict(self) -> dict:
        return {
            "center": [{"re": c.real, "im": c.imag} for c in self.center],
            "radii": list(self.radii),
        }


# ##################################################################
# psh expr
# closed expression class of plurisubharmonic functions; every node
# evaluates vectorised over (N, dim) point batches with values in
# [-inf, +inf)
class PshExpr(ABC):
    dim: int

    @abstractmethod
    def values(self, points: np.ndarray) -> np.ndarray: ...

    # freeze the trailing coordinates; result lives in dim - len(frozen)
    @abstractmethod
    def restrict(self, frozen: Sequence[complex]) -> PshExpr: ...

    # psi(y) = phi(x + y), evaluated accurately for tiny y
    @abstractmethod
    def recentered(self, x: Sequence[complex]) -> PshExpr: ...

    @abstractmethod
    def to_dict(self) -> dict: ...

    def _points(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=complex)
        if pts.ndim == 1:
            pts = pts[None, :]
        if pts.ndim != 2 or pts.shape[1] != self.dim:
            raise DimensionMismatchError(f"points of shape {np.shape(points)} do not match dim {self.dim}")
        return pts


# ##################################################################
# analytic singularity psh
# (alpha/2) log sum |f_i|^2 with the largest |f_i| factored out in log
# space; smooth remainder fixed to zero
@dataclass(frozen=True)
class AnalyticSingularityPsh(PshExpr):
    alpha: float
    gens: tuple[ComplexPoly, ...]

    def __post_init__(self) -> None:
        gens = tuple(self.gens)
        if not gens:
            raise DegenerateInputError("analytic singularity needs at least one generator")
        dims = {g.dim for g in gens}
        if len(dims) != 1:
            raise DimensionMismatchError(f"generators have mixed dimensions {sorted(dims)}")
        if all(g.is_zero() for g in gens):
            raise DegenerateInputError("every generator is the zero polynomial")
        if not self.alpha > 0:
            raise DegenerateInputError(f"alpha must be positive, got {self.alpha}")
        object.__setattr__(self, "gens", gens)
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def dim(self) -> int:
        return self.gens[0].dim

    def values(self, points: np.ndarray) -> np.ndarray:
        pts = self._points(points)
        logs = np.stack([g.log_abs(pts) for g in self.gens])
        with np.errstate(divide="ignore"):
            return 0.5 * self.alpha * logsumexp(2.0 * logs, axis=0)

    def restrict(self, frozen: Sequence[complex]) -> PshExpr:
        gens = [g.restrict(frozen) for g in self.gens]
        live = tuple(g for g in gens if not g.is_zero())
        if not live:
            return ConstantPsh(self.dim - len(frozen), -np.inf)
        return AnalyticSingularityPsh(self.alpha, live)

    def recentered(self, x: Sequence[complex]) -> PshExpr:
        gens = tuple(g.recentered(x) for g in self.gens)
        live = tuple(g for g in gens if not g.is_zero())
        if not live:
            return ConstantPsh(self.dim, -np.inf)
        return AnalyticSingularityPsh(self.alpha, live)

    def to_dict(self) -> dict:
        return {"kind": "log-sum", "alpha": self.alpha, "gens": [g.to_dict() for g in self.gens]}


# ##################################################################
# constant psh
# constant function; value -inf stands for a fiber on which every
# generator vanishes identically
@dataclass(frozen=True)
class ConstantPsh(PshExpr):
    dim: int
    value: float

    def values(self, points: np.ndarray) -> np.ndarray:
        pts = self._points(points)
        return np.full(pts.shape[0], float(self.value))

    def restrict(self, frozen: Sequence[complex]) -> PshExpr:
        return ConstantPsh(self.dim - len(frozen), self.value)

    def recentered(self, x: Sequence[complex]) -> PshExpr:
        return self

    def to_dict(self) -> dict:
        return {"kind": "const", "dim": self.dim, "value": self.value}


# ##################################################################
# max psh
# pointwise maximum of parts
@dataclass(frozen=True)
class MaxPsh(PshExpr):
    parts: tuple[PshExpr, ...]

    def __post_init__(self) -> None:
        parts = tuple(self.parts)
        if len(parts) < 2:
            raise DegenerateInputError("max needs at least two parts")
        if len({p.dim for p in parts}) != 1:
            raise DimensionMismatchError("max parts have mixed dimensions")
        object.__setattr__(self, "parts", parts)

    @property
    def dim(self) -> int:
        return self.parts[0].dim

    def values(self, points: np.ndarray) -> np.ndarray:
        pts = self._points(points)
        return np.max(np.stack([p.values(pts) for p in self.parts]), axis=0)

    def restrict(self, frozen: Sequence[complex]) -> PshExpr:
        return MaxPsh(tuple(p.restrict(frozen) for p in self.parts))

    def recentered(self, x: Sequence[complex]) -> PshExpr:
        return MaxPsh(tuple(p.recentered(x) for p in self.parts))

    def to_dict(self) -> dict:
        return {"kind": "max", "args": [p.to_dict() for p in self.parts]}


# ##################################################################
# sum psh
# non-negative weighted sum; zero weights are dropped so that
# 0 * (-inf) never appears
@dataclass(frozen=True)
class SumPsh(PshExpr):
    terms: tuple[tuple[float, PshExpr], ...]

    def __post_init__(self) -> None:
        terms = tuple((float(w), p) for w, p in self.terms if float(w) != 0.0)
        if not terms:
            raise DegenerateInputError("sum needs at least one term with positive weight")
        if any(w < 0 for w, _ in terms):
            raise DegenerateInputError("sum weights must be non-negative")
        if len({p.dim for _, p in terms}) != 1:
            raise DimensionMismatchError("sum terms have mixed dimensions")
        object.__setattr__(self, "terms", terms)

    @property
    def dim(self) -> int:
        return self.terms[0][1].dim

    def values(self, points: np.ndarray) -> np.ndarray:
        pts = self._points(points)
        total = np.zeros(pts.shape[0])
        for weight, part in self.terms:
            total = total + weight * part.values(pts)
        return total

    def restrict(self, frozen: Sequence[complex]) -> PshExpr:
        return SumPsh(tuple((w, p.restrict(frozen)) for w, p in self.terms))

    def recentered(self, x: Sequence[complex]) -> PshExpr:
        return SumPsh(tuple((w, p.recentered(x)) for w, p in self.terms))

    def to_dict(self) -> dict:
        return {"kind": "sum", "weights": [w for w, _ in self.terms], "args": [p.to_dict() for _, p in self.terms]}


# ##################################################################
# log hoelder term
# log(|a|^alpha + |b|^beta); -inf only where a and b vanish together
@dataclass(frozen=True)
class LogHoelderTerm(PshExpr):
    a: ComplexPoly
    b: ComplexPoly
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if self.a.dim != self.b.dim:
            raise DimensionMismatchError("log-hoelder polynomials differ in dimension")
        if not (self.alpha > 0 and self.beta > 0):
            raise DegenerateInputError("log-hoelder exponents must be positive")

    @property
    def dim(self) -> int:
        return self.a.dim

    def values(self, points: np.ndarray) -> np.ndarray:
        pts = self._points(points)
        return np.logaddexp(self.alpha * self.a.log_abs(pts), self.beta * self.b.log_abs(pts))

    def restrict(self, frozen: Sequence[complex]) -> PshExpr:
        return LogHoelderTerm(self.a.restrict(frozen), self.b.restrict(frozen), self.alpha, self.beta)

    def recentered(self, x: Sequence[complex]) -> PshExpr:
        return LogHoelderTerm(self.a.recentered(x), self.b.recentered(x), self.alpha, self.beta)

    def to_dict(self) -> dict:
        return {
            "kind": "log-hoelder",
            "a": self.a.to_dict(),
            "b": self.b.to_dict(),
            "alpha": self.alpha,
            "beta": self.beta,
        }


# ##################################################################
# scalar field
# externally computed real field (e.g. a potential); assumed finite
# on the domain unless it says otherwise
@dataclass(frozen=True)
class ScalarField(PshExpr):
    dim: int
    fn: Callable[[np.ndarray], np.ndarray] = field(compare=False)
    label: str = "field"

    def values(self, points: np.ndarray) -> np.ndarray:
        pts = self._points(points)
        return np.asarray(self.fn(pts), dtype=float)

    def restrict(self, frozen: Sequence[complex]) -> PshExpr:
        tail = np.asarray(list(frozen), dtype=complex)
        keep = self.dim - tail.size
        if keep < 1:
            raise DimensionMismatchError(f"cannot freeze {tail.size} of {self.dim} variables")
        fn = self.fn

        def restricted(pts: np.ndarray) -> np.ndarray:
            full = np.concatenate([pts, np.broadcast_to(tail, (pts.shape[0], tail.size))], axis=1)
            return fn(full)

        return ScalarField(keep, restricted, self.label)

    def recentered(self, x: Sequence[complex]) -> PshExpr:
        shift = np.asarray(list(x), dtype=complex)
        fn = self.fn
        return ScalarField(self.dim, lambda pts: fn(pts + shift[None, :]), self.label)

    def to_dict(self) -> dict:
        return {"kind": "field", "dim": self.dim, "label": self.label}


# ##################################################################
# family
# psh function over a product polydisc with n fiber variables z
# followed by m parameter variables w
@dataclass(frozen=True)
class Family:
    phi: PshExpr
    n: int
    m: int
    domain: Polydisc
    name: str = "family"

    def __post_init__(self) -> None:
        if self.phi.dim != self.n + self.m or self.domain.dim != self.n + self.m:
            raise DimensionMismatchError(
                f"family declares n={self.n}, m={self.m} but phi has dim {self.phi.dim} "
                f"and domain has dim {self.domain.dim}"
            )

    @property
    def fiber_domain(self) -> Polydisc:
        return self.domain.split(self.n)[0]

    @property
    def base_domain(self) -> Polydisc | None:
        return self.domain.split(self.n)[1] if self.m else None

    def to_dict(self) -> dict:
        return {"name": self.name, "n": self.n, "m": self.m, "phi": self.phi.to_dict(), "domain": self.domain.to_dict()}


# ##################################################################
# evaluate
# phi at a single point
def evaluate(phi: PshExpr, point: Sequence[complex]) -> float:
    pt = np.asarray(list(point), dtype=complex)
    if pt.shape != (phi.dim,):
        raise DimensionMismatchError(f"point has {pt.size} coordinates, phi has dim {phi.dim}")
    return float(phi.values(pt[None, :])[0])


# ##################################################################
# restrict fiber
# phi(., w0) over z; w0 must lie in the parameter polydisc
def restrict_fiber(family: Family, w0: Sequence[complex]) -> PshExpr:
    w = [complex(v) for v in w0]
    if len(w) != family.m:
        raise DimensionMismatchError(f"fiber parameter has {len(w)} coordinates, family has m={family.m}")
    if family.m == 0:
        return family.phi
    if not family.base_domain.contains(w):
        raise DomainError(f"fiber parameter {w} outside the parameter polydisc")
    return family.phi.restrict(w)


# ##################################################################
# scale
# lambda * phi, keeping exponents exact where the node allows it
def scale(phi: PshExpr, lam: float) -> PshExpr:
    if lam <= 0:
        raise DegenerateInputError(f"scale factor must be positive, got {lam}")
    if isinstance(phi, AnalyticSingularityPsh):
        return AnalyticSingularityPsh(phi.alpha * lam, phi.gens)
    if isinstance(phi, ConstantPsh):
        return ConstantPsh(phi.dim, phi.value * lam)
    return SumPsh(((lam, phi),))


# ##################################################################
# common zeros
# common zeros of polynomials inside a polydisc; one variable uses
# polished companion roots, two variables use linear algebra or a
# multistart least-squares search
def common_zeros(polys: Sequence[ComplexPoly], domain: Polydisc) -> list[np.ndarray]:
    live = [p for p in polys if not p.is_zero()]
    if not live:
        raise DegenerateInputError("common zeros of zero polynomials are not isolated")
    dim = live[0].dim
    if any(p.degree() == 0 for p in live):
        return []
    if dim == 1:
        candidates = _roots_1d(min(live, key=lambda p: p.degree()))
    elif all(p.degree() <= 1 for p in live):
        candidates = _linear_zero(live)
    elif dim == 2:
        candidates = _multistart_zeros(live, domain)
    else:
        raise DimensionMismatchError(f"pole location supports at most two variables, got {dim}")
    found = []
    for cand in candidates:
        if not domain.contains(cand):
            continue
        if all(_residual(p, cand) <= ROOT_RESIDUAL_TOL for p in live):
            found.append(cand)
    return found


def _residual(p: ComplexPoly, point: np.ndarray) -> float:
    size = sum(abs(c) * float(np.prod(np.abs(point) ** np.asarray(e))) for e, c in p.terms.items())
    return float(abs(p(point)[0]) / max(size, 1e-300))


# ##################################################################
# roots 1d
# companion roots, newton polish, then cluster near-equal roots and
# keep each cluster's mean (accurate for multiple roots)
def _roots_1d(p: ComplexPoly) -> list[np.ndarray]:
    deg = p.degree()
    coeffs = np.zeros(deg + 1, dtype=complex)
    for (k,), c in p.terms.items():
        coeffs[deg - k] = c
    if deg == 1:
        return [np.array([-coeffs[1] / coeffs[0]])]
    lowest = p.lowest_order()
    roots = list(np.roots(coeffs[: deg - lowest + 1])) + [0j] * lowest
    deriv = np.polyder(coeffs)
    polished = []
    for r in roots:
        for _ in range(3):
            d = np.polyval(deriv, r)
            if d == 0:
                break
            step = np.polyval(coeffs, r) / d
            r = r - step
            if abs(step) < 1e-15 * max(1.0, abs(r)):
                break
        polished.append(r)
    clusters: list[list[complex]] = []
    for r in sorted(roots, key=lambda v: (v.real, v.imag)):
        for cl in clusters:
            if abs(np.mean(cl) - r) <= ROOT_CLUSTER_TOL:
                cl.append(r)
                break
        else:
            clusters.append([r])
    out = []
    for cl in clusters:
        center = complex(np.mean(cl))
        if len(cl) == 1:
            center = min(polished, key=lambda v: abs(v - center))
        out.append(np.array([center]))
    return out


def _linear_zero(polys: list[ComplexPoly]) -> list[np.ndarray]:
    dim = polys[0].dim
    rows, rhs = [], []
    for p in polys:
        row = np.zeros(dim, dtype=complex)
        const = 0j
        for e, c in p.terms.items():
            if sum(e) == 0:
                const = c
            else:
                row[e.index(1)] = c
        rows.append(row)
        rhs.append(-const)
    a = np.array(rows)
    if np.linalg.matrix_rank(a) < dim:
        raise DegenerateInputError("linear generators have a non-isolated common zero set")
    sol, *_ = np.linalg.lstsq(a, np.array(rhs), rcond=None)
    return [sol]


def _multistart_zeros(polys: list[ComplexPoly], domain: Polydisc) -> list[np.ndarray]:
    center = np.asarray(domain.center)
    radii = np.asarray(domain.radii)

    def residual(v: np.ndarray) -> np.ndarray:
        z = v[:2] + 1j * v[2:]
        vals = np.array([p(z)[0] for p in polys])
        return np.concatenate([vals.real, vals.imag])

    offsets = [-0.5, 0.0, 0.5]
    found: list[np.ndarray] = []
    for a in offsets:
        for b in offsets:
            for c in (-0.25, 0.25):
                start = center + radii * np.array([a + 1j * c, b - 1j * c])
                fit = least_squares(residual, np.concatenate([start.real, start.imag]), xtol=1e-15, ftol=1e-15)
                z = fit.x[:2] + 1j * fit.x[2:]
                if any(np.max(np.abs(z - f)) <= ROOT_CLUSTER_TOL for f in found):
                    continue
                found.append(z)
    if len(found) > MAX_ISOLATED_POLES:
        raise DegenerateInputError("generators appear to vanish along a curve; isolated poles required")
    logger.debug("multistart located %d candidate zeros", len(found))
    return found


# ##################################################################
# pole points
# points of the domain where phi is -inf, for expressions whose -inf set
# is finite; scalar fields are assumed finite
def pole_points(phi: PshExpr, domain: Polydisc) -> list[np.ndarray]:
    if isinstance(phi, AnalyticSingularityPsh):
        return common_zeros(phi.gens, domain)
    if isinstance(phi, LogHoelderTerm):
        return common_zeros([phi.a, phi.b], domain)
    if isinstance(phi, ConstantPsh):
        if phi.value == -np.inf:
            raise DegenerateInputError("function is identically -inf")
        return []
    if isinstance(phi, ScalarField):
        return []
    if isinstance(phi, SumPsh):
        out: list[np.ndarray] = []
        for _, part in phi.terms:
            for p in pole_points(part, domain):
                if not any(np.allclose(p, q, atol=ROOT_CLUSTER_TOL) for q in out):
                    out.append(p)
        return out
    if isinstance(phi, MaxPsh):
        candidates = pole_points(phi.parts[0], domain)
        return [c for c in candidates if all(evaluate(p, c) == -np.inf for p in phi.parts[1:])]
    raise DegenerateInputError(f"cannot locate poles of {type(phi).__name__}")
