from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import StrEnum
from itertools import product
from typing import Any, Callable, Iterator, Sequence

import numpy as np
from scipy.stats import norm, qmc

from pshlab.errors import DomainError, GridMismatchError, PreconditionError
from pshlab.integrability import ShellGeometry
from pshlab.invariants import InvariantEstimate, cse_bisection, cse_estimate, lelong_estimate
from pshlab.poly import ComplexPoly
from pshlab.psh import (
    AnalyticSingularityPsh,
    ConstantPsh,
    Family,
    Polydisc,
    PshExpr,
    ScalarField,
    evaluate,
    restrict_fiber,
)

logger = logging.getLogger(__name__)

GRID_POINTS = 41
BALL_SAMPLES_PER_DIM = 512
SPHERE_SAMPLES_PER_DIM = 256
PROBE_DEGREE_CAP = 10
SV_CUTOFF = 1e-8
LOCUS_TOL = 1e-8
HOELDER_SLACK = 1.10
RADIAL_KEYS = frozenset({"r_min", "r_max", "n_radii", "n_angles"})


class CloudKind(StrEnum):
    E = "E"
    X = "X"
    F = "F"
    Y = "Y"


# ##################################################################
# grid spec
# tensor grid: one array of complex values per coordinate, points
# enumerated in row-major order
@dataclass(frozen=True)
class GridSpec:
    axes: tuple[tuple[complex, ...], ...]

    def __post_init__(self) -> None:
        axes = tuple(tuple(complex(v) for v in axis) for axis in self.axes)
        if not axes or any(not axis for axis in axes):
            raise DomainError("grid needs at least one value on every axis")
        object.__setattr__(self, "axes", axes)

    @classmethod
    def real_axes(cls, *values: Sequence[float]) -> GridSpec:
        return cls(tuple(tuple(complex(v) for v in axis) for axis in values))

    # ##################################################################
    # box
    # real diameter of every coordinate disc, n points strictly inside
    @classmethod
    def box(cls, domain: Polydisc, n: int = GRID_POINTS, shrink: float = 0.95) -> GridSpec:
        axes = []
        for center, radius in zip(domain.center, domain.radii):
            axes.append(tuple(center + t for t in np.linspace(-shrink * radius, shrink * radius, n)))
        return cls(tuple(axes))

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def size(self) -> int:
        return math.prod(len(a) for a in self.axes)

    def points(self) -> Iterator[tuple[tuple[int, ...], tuple[complex, ...]]]:
        for index in product(*(range(len(a)) for a in self.axes)):
            yield index, tuple(self.axes[i][j] for i, j in enumerate(index))

    def to_dict(self) -> dict:
        return {"axes": [[{"re": v.real, "im": v.imag} for v in axis] for axis in self.axes]}


# ##################################################################
# cloud point
# one scanned grid point with the invariant value behind its verdict
@dataclass(frozen=True)
class CloudPoint:
    index: tuple[int, ...]
    coords: tuple[complex, ...]
    value: float
    uncertainty: float
    member: bool
    borderline: bool = False
    unresolved: bool = False

    def to_dict(self) -> dict:
        return {
            "index": list(self.index),
            "coords": list(self.coords),
            "value": self.value,
            "uncertainty": self.uncertainty,
            "member": self.member,
            "borderline": self.borderline,
            "unresolved": self.unresolved,
        }


# ##################################################################
# level set cloud
# every scanned point of a grid with its membership in E_c, X_c, F_c
# or Y_c; members() is the level set itself
@dataclass(frozen=True)
class LevelSetCloud:
    kind: CloudKind
    c: float
    grid: GridSpec
    points: tuple[CloudPoint, ...]

    def members(self) -> list[CloudPoint]:
        return [p for p in self.points if p.member]

    def member_indices(self) -> set[tuple[int, ...]]:
        return {p.index for p in self.points if p.member}

    @classmethod
    def from_predicate(
        cls, kind: CloudKind, c: float, grid: GridSpec, predicate: Callable[[tuple[complex, ...]], bool]
    ) -> LevelSetCloud:
        pts = tuple(
            CloudPoint(index=i, coords=x, value=math.nan, uncertainty=0.0, member=bool(predicate(x)))
            for i, x in grid.points()
        )
        return cls(kind=kind, c=c, grid=grid, points=pts)

    def to_dict(self) -> dict:
        return {
            "kind": str(self.kind),
            "c": self.c,
            "grid": self.grid.to_dict(),
            "members": len(self.members()),
            "points": [p.to_dict() for p in self.points],
        }


def point_seed(seed: int, index: Sequence[int]) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=tuple(int(i) for i in index)).generate_state(1)[0])


# ##################################################################
# scan level set
# E/F use invariants of phi at (z, w), X/Y those of the fiber phi_w at
# z; lelong levels are nu >= c, exponent levels are cse <= c
def scan_level_set(
    family: Family,
    kind: CloudKind | str,
    c: float,
    grid: GridSpec,
    seed: int = 0,
    max_workers: int | None = None,
    **estimator: Any,
) -> LevelSetCloud:
    kind = CloudKind(kind)
    if grid.dim != family.n + family.m:
        raise GridMismatchError(f"grid of dim {grid.dim} for a family of dim {family.n + family.m}")
    items = list(grid.points())
    for _, coords in items:
        if not family.domain.contains(coords):
            raise DomainError(f"grid point {coords} outside the family domain")

    def classify(item: tuple[tuple[int, ...], tuple[complex, ...]]) -> CloudPoint:
        index, coords = item
        estimate = _point_estimate(family, kind, coords, point_seed(seed, index), estimator)
        return _cloud_point(index, coords, estimate, kind, c)

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            points = list(pool.map(classify, items))
    else:
        points = [classify(item) for item in items]
    logger.debug("scanned %d points for %s_%s: %d members", len(points), kind, c, sum(p.member for p in points))
    return LevelSetCloud(kind=kind, c=float(c), grid=grid, points=tuple(points))


def _point_estimate(
    family: Family, kind: CloudKind, coords: tuple[complex, ...], seed: int, estimator: dict[str, Any]
) -> InvariantEstimate:
    z, w = coords[: family.n], coords[family.n :]
    if kind in (CloudKind.E, CloudKind.F):
        phi, point = family.phi, list(coords)
    else:
        phi, point = restrict_fiber(family, w), list(z)
    radial = {k: v for k, v in estimator.items() if k in RADIAL_KEYS}
    bisection = {k: v for k, v in estimator.items() if k not in RADIAL_KEYS}
    if kind in (CloudKind.E, CloudKind.X):
        return lelong_estimate(phi, point, **radial)
    return cse_estimate(phi, point, seed=seed, **bisection)


def _cloud_point(
    index: tuple[int, ...], coords: tuple[complex, ...], estimate: InvariantEstimate, kind: CloudKind, c: float
) -> CloudPoint:
    value, u = estimate.value, estimate.uncertainty
    if estimate.inconclusive:
        return CloudPoint(index, coords, value, u, member=False, unresolved=True)
    member = value >= c if kind in (CloudKind.E, CloudKind.X) else value <= c
    borderline = u > 0 and abs(value - c) <= u
    return CloudPoint(index, coords, value, u, member=member, borderline=borderline)


# ##################################################################
# containment report
# points of a missing from b; borderline and unresolved points on
# either side are skipped
@dataclass(frozen=True)
class ContainmentReport:
    violations: list[tuple[complex, ...]]
    checked: int
    skipped: int

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"passed": self.passed, "violations": self.violations, "checked": self.checked, "skipped": self.skipped}


def containment_check(a: LevelSetCloud, b: LevelSetCloud) -> ContainmentReport:
    if a.c != b.c:
        raise GridMismatchError(f"clouds at different thresholds {a.c} and {b.c}")
    return _compare(a, b)


def _compare(a: LevelSetCloud, b: LevelSetCloud) -> ContainmentReport:
    if a.grid != b.grid:
        raise GridMismatchError("clouds were scanned on different grids")
    other = {p.index: p for p in b.points}
    violations, checked, skipped = [], 0, 0
    for p in a.points:
        if not p.member:
            continue
        q = other.get(p.index)
        if p.borderline or p.unresolved or q is None or q.borderline or q.unresolved:
            skipped += 1
            continue
        checked += 1
        if not q.member:
            violations.append(p.coords)
    return ContainmentReport(violations=violations, checked=checked, skipped=skipped)


# ##################################################################
# monotonicity in c
# for c <= c2: E_c2 in E_c, X_c2 in X_c, F_c in F_c2, Y_c in Y_c2
def monotonicity_in_c(
    family: Family, kind: CloudKind | str, c: float, c2: float, grid: GridSpec, seed: int = 0, **estimator: Any
) -> ContainmentReport:
    kind = CloudKind(kind)
    lo, hi = sorted((c, c2))
    low = scan_level_set(family, kind, lo, grid, seed=seed, **estimator)
    high = scan_level_set(family, kind, hi, grid, seed=seed, **estimator)
    if kind in (CloudKind.E, CloudKind.X):
        return _compare(high, low)
    return _compare(low, high)


# ##################################################################
# restriction monotonicity
# c_{(z,w)}(phi) >= c_z(phi_w) at every grid point, up to the combined
# uncertainties
def restriction_monotonicity(family: Family, grid: GridSpec, seed: int = 0, **estimator: Any) -> ContainmentReport:
    violations, checked = [], 0
    for index, coords in grid.points():
        s = point_seed(seed, index)
        ambient = cse_estimate(family.phi, list(coords), seed=s, **estimator)
        fiber = cse_estimate(restrict_fiber(family, coords[family.n :]), list(coords[: family.n]), seed=s, **estimator)
        checked += 1
        if ambient.value < fiber.value - (ambient.uncertainty + fiber.uncertainty):
            violations.append(coords)
    return ContainmentReport(violations=violations, checked=checked, skipped=0)


# ##################################################################
# approx family
# phi_k(z, w, xi) = sup of phi(., w) over the ball B(z, |xi|) with k
# extra variables xi
@dataclass(frozen=True)
class ApproxFamily:
    base: Family
    k: int
    ball_samples: int | None = None
    sphere_samples: int | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise PreconditionError(f"approximation needs k >= 1, got {self.k}")

    @property
    def n(self) -> int:
        return self.base.n

    def fiber(self, w: Sequence[complex]) -> PshExpr:
        return restrict_fiber(self.base, w) if self.base.m else self.base.phi

    # ##################################################################
    # closed form
    # sup over B(z, t) for a single linear generator in one variable is
    # alpha (log|a| + log(|z - p| + t)); constants are their own sup
    def closed_form(self, w: Sequence[complex]) -> Callable[[np.ndarray, np.ndarray], np.ndarray] | None:
        phi_w = self.fiber(w)
        if isinstance(phi_w, ConstantPsh):
            value = phi_w.value
            return lambda z, t: np.full(np.shape(t), value)
        if isinstance(phi_w, AnalyticSingularityPsh) and phi_w.dim == 1 and len(phi_w.gens) == 1:
            g = phi_w.gens[0]
            if g.degree() == 1:
                lead = g.terms.get((1,), 0j)
                root = -g.terms.get((0,), 0j) / lead
                alpha = phi_w.alpha
                return lambda z, t: alpha * (math.log(abs(lead)) + np.log(np.abs(z[:, 0] - root) + t))
        return None

    # ##################################################################
    # as psh
    # (z, xi) -> phi_k(z, w, |xi|) as a scalar field on C^{n+k}
    def as_psh(self, w: Sequence[complex]) -> ScalarField:
        n = self.n
        closed = self.closed_form(w)
        label = f"phi_{self.k}"
        if closed is not None:
            def fn(pts: np.ndarray) -> np.ndarray:
                with np.errstate(divide="ignore"):
                    return closed(pts[:, :n], np.linalg.norm(pts[:, n:], axis=1))
            return ScalarField(n + self.k, fn, label)

        def sampled(pts: np.ndarray) -> np.ndarray:
            return np.array([approx_phi_k(self, p[:n], w, float(np.linalg.norm(p[n:]))) for p in pts])

        return ScalarField(n + self.k, sampled, label)


# ##################################################################
# approx phi k
# ball supremum by low-discrepancy interior and sphere samples, with
# one refinement pass around the best sample
def approx_phi_k(fam: ApproxFamily, z: Sequence[complex], w: Sequence[complex], xi_modulus: float) -> float:
    z = np.asarray([complex(v) for v in z])
    t = float(xi_modulus)
    if t < 0:
        raise PreconditionError("ball radius must be non-negative")
    phi_w = fam.fiber(w)
    if t == 0:
        return evaluate(phi_w, z)
    domain = fam.base.fiber_domain
    for zi, ci, ri in zip(z, domain.center, domain.radii):
        if abs(zi - ci) + t > ri * (1 + 1e-12):
            raise DomainError(f"ball of radius {t} about {list(z)} leaves the fiber polydisc")
    closed = fam.closed_form(w)
    if closed is not None:
        return float(closed(z[None, :], np.array([t]))[0])
    n = z.size
    n_ball = fam.ball_samples or BALL_SAMPLES_PER_DIM * n
    n_sphere = fam.sphere_samples or SPHERE_SAMPLES_PER_DIM * n
    rng = np.random.default_rng(np.random.SeedSequence(fam.seed, spawn_key=(n, n_ball)))
    pts = np.concatenate([_ball(z, t, n_ball, rng, inside=True), _ball(z, t, n_sphere, rng, inside=False)])
    values = phi_w.values(pts)
    best = pts[int(np.argmax(values))]
    local = _ball(best, t / 4, n_ball, rng, inside=True)
    local = local[np.linalg.norm(local - z[None, :], axis=1) <= t]
    if local.size:
        values = np.concatenate([values, phi_w.values(local)])
    return float(np.max(values))


def _ball(center: np.ndarray, radius: float, count: int, rng: np.random.Generator, inside: bool) -> np.ndarray:
    n = center.size
    sobol = qmc.Sobol(d=2 * n + 1, scramble=True, seed=rng)
    u = np.clip(sobol.random(count), 1e-12, 1 - 1e-12)
    gauss = norm.ppf(u[:, 1:])
    gauss /= np.linalg.norm(gauss, axis=1, keepdims=True)
    scale = radius * (u[:, 0] ** (1.0 / (2 * n)) if inside else np.ones(count))
    real = gauss * scale[:, None]
    return center[None, :] + real[:, :n] + 1j * real[:, n:]


# ##################################################################
# sandwich report
# k/nu <= c_{(z,0)}(phi_k) <= (n+k)/nu with the three numbers
@dataclass(frozen=True)
class SandwichReport:
    nu: InvariantEstimate
    c: InvariantEstimate
    lower: float
    upper: float

    @property
    def holds(self) -> bool:
        slack = self.c.uncertainty + self.nu.uncertainty * self.upper / max(self.nu.value, 1e-300)
        return self.lower - slack <= self.c.value <= self.upper + slack

    def to_dict(self) -> dict:
        return {
            "nu": self.nu.to_dict(),
            "c": self.c.to_dict(),
            "lower": self.lower,
            "upper": self.upper,
            "holds": self.holds,
        }


def sandwich_check(
    fam: ApproxFamily, z: Sequence[complex], w: Sequence[complex], seed: int = 0, **bisection: Any
) -> SandwichReport:
    nu = lelong_estimate(fam.fiber(w), list(z))
    if not nu.value > 0:
        raise PreconditionError("sandwich needs a positive lelong number at z")
    lower = fam.k / nu.value
    upper = (fam.n + fam.k) / nu.value
    c = _approx_cse(fam, z, w, upper, seed, bisection)
    return SandwichReport(nu=nu, c=c, lower=lower, upper=upper)


def _approx_cse(
    fam: ApproxFamily, z: Sequence[complex], w: Sequence[complex], upper: float, seed: int, bisection: dict[str, Any]
) -> InvariantEstimate:
    domain = fam.base.fiber_domain
    room = min(r - abs(complex(zi) - ci) for zi, ci, r in zip(z, domain.center, domain.radii))
    bisection.setdefault("c_hi", upper + 1.0)
    bisection.setdefault("r0", min(0.5, 0.5 * room))
    bisection.setdefault("geometry", ShellGeometry.ANNULUS)
    point = [complex(v) for v in z] + [0j] * fam.k
    return cse_bisection(fam.as_psh(w), point, seed=seed, **bisection)


# ##################################################################
# xc via approximation
# (z, w) in X_c  <=>  c_{(z,0)}((n+k) phi_k) <= 1/c, side by side with
# the direct lelong test
def xc_via_approximation(
    fam: ApproxFamily, c: float, z: Sequence[complex], w: Sequence[complex], seed: int = 0, **bisection: Any
) -> dict[str, Any]:
    nu = lelong_estimate(fam.fiber(w), list(z))
    direct = nu.value >= c
    if nu.value == 0:
        return {"nu": nu, "direct": direct, "via": False, "scaled_cse": math.inf, "agree": not direct}
    est = _approx_cse(fam, z, w, (fam.n + fam.k) / nu.value, seed, bisection)
    scaled = est.value / (fam.n + fam.k)
    u = est.uncertainty / (fam.n + fam.k)
    via = scaled <= 1.0 / c
    borderline = abs(scaled - 1.0 / c) <= u
    return {"nu": nu, "direct": direct, "via": via, "scaled_cse": scaled, "agree": direct == via or borderline}


# ##################################################################
# hoelder constant
# max |e^{f(w1)} - e^{f(w2)}| / |w1 - w2|^alpha over sampled pairs
def hoelder_constant(
    fn: Callable[[Sequence[complex]], float], pairs: Sequence[tuple[Sequence[complex], Sequence[complex]]], alpha: float
) -> float:
    best = 0.0
    for w1, w2 in pairs:
        gap = float(np.linalg.norm(np.asarray(w1, dtype=complex) - np.asarray(w2, dtype=complex)))
        if gap == 0:
            continue
        diff = abs(math.exp(fn(w1)) - math.exp(fn(w2)))
        best = max(best, diff / gap**alpha)
    return best


def hoelder_propagation(
    fam: ApproxFamily,
    z: Sequence[complex],
    xi_modulus: float,
    pairs: Sequence[tuple[Sequence[complex], Sequence[complex]]],
    alpha: float,
) -> dict[str, Any]:
    base = hoelder_constant(lambda w: evaluate(fam.base.phi, list(z) + list(w)), pairs, alpha)
    approx = hoelder_constant(lambda w: approx_phi_k(fam, z, w, xi_modulus), pairs, alpha)
    return {"base": base, "approx": approx, "holds": approx <= HOELDER_SLACK * base + 1e-12}


# ##################################################################
# probe report
# lowest-degree polynomials vanishing on a cloud and whether their
# common zero locus on the grid is exactly the cloud
@dataclass(frozen=True)
class ProbeReport:
    certified: bool
    degree: int | None
    polynomials: list[ComplexPoly]
    residual: float
    extra_points: int
    missing_points: int
    reason: str

    def to_dict(self) -> dict:
        return {
            "certified": self.certified,
            "degree": self.degree,
            "polynomials": [p.to_dict() for p in self.polynomials],
            "residual": self.residual,
            "extra_points": self.extra_points,
            "missing_points": self.missing_points,
            "reason": self.reason,
        }


def analyticity_probe(
    cloud: LevelSetCloud, max_degree: int = PROBE_DEGREE_CAP, sv_cutoff: float = SV_CUTOFF
) -> ProbeReport:
    members = cloud.members()
    if not members:
        return ProbeReport(False, None, [], 0.0, 0, 0, "empty cloud")
    dim = cloud.grid.dim
    cloud_pts = np.array([p.coords for p in members], dtype=complex)
    grid_items = list(cloud.grid.points())
    grid_pts = np.array([x for _, x in grid_items], dtype=complex)
    member_set = {p.index for p in members}
    last_extra, last_missing = 0, 0
    reason = "no vanishing polynomial up to the degree cap"
    for degree in range(1, max_degree + 1):
        exps = [e for e in product(range(degree + 1), repeat=dim) if sum(e) <= degree]
        vander = _monomials(cloud_pts, exps)
        _, sv, vh = np.linalg.svd(vander)
        rank = int(np.sum(sv > sv_cutoff * sv[0])) if sv.size else 0
        null = np.conj(vh[rank:])
        if null.shape[0] == 0:
            continue
        scale = np.sum(np.abs(null), axis=1)
        grid_vals = np.abs(_monomials(grid_pts, exps) @ null.T)
        size = np.max(np.abs(grid_pts), axis=1, initial=1.0) ** degree
        on_locus = np.all(grid_vals <= LOCUS_TOL * scale[None, :] * np.maximum(size, 1.0)[:, None], axis=1)
        locus = {grid_items[i][0] for i in np.nonzero(on_locus)[0]}
        last_extra, last_missing = len(locus - member_set), len(member_set - locus)
        reason = f"fitted locus has {last_extra} extra and {last_missing} missing grid points"
        if locus == member_set:
            polys = [ComplexPoly(dim, {e: c for e, c in zip(exps, row) if abs(c) > 1e-12}) for row in null]
            residual = float(np.max(np.abs(vander @ null.T)) / np.max(scale))
            logger.debug("cloud certified analytic at degree %d by %d polynomials", degree, len(polys))
            return ProbeReport(True, degree, polys, residual, 0, 0, "locus matches cloud")
    return ProbeReport(False, None, [], 0.0, last_extra, last_missing, reason)


def _monomials(pts: np.ndarray, exps: Sequence[tuple[int, ...]]) -> np.ndarray:
    return np.stack([np.prod(pts ** np.asarray(e)[None, :], axis=1) for e in exps], axis=1)
