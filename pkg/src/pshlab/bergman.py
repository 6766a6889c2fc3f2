from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Any, Sequence

import numpy as np
from scipy.linalg import eigh

from pshlab.errors import DegenerateInputError, DimensionMismatchError, DomainError, GramConditioningError
from pshlab.families import CloudKind, CloudPoint, GridSpec, LevelSetCloud
from pshlab.integrability import IntegrabilityProbe
from pshlab.invariants import lelong_estimate
from pshlab.newton import NewtonPolyhedron, as_fraction, multiplier_contains
from pshlab.poly import ComplexPoly
from pshlab.psh import AnalyticSingularityPsh, Family, Polydisc, PshExpr, pole_points, restrict_fiber
from pshlab.quadrature import polar_rule

logger = logging.getLogger(__name__)

DEGREE_CAP = 8
EIGEN_CUTOFF = 1e-10
STRUCTURAL_TOL = 1e-12
CIRCLE_POINTS = 64
# polar rule sizes: one fiber variable, and each factor of a two-variable product
RULE_1D = {"n_theta": 64, "n_gl": 8, "depth": 40}
RULE_2D = {"n_theta": 16, "n_gl": 4, "depth": 14}
CHUNK = 200_000


# ##################################################################
# basis element
# product of anchored linear factors (z_i - root)^power; log|b| and the
# phase are summed factor by factor so nothing cancels near a root
@dataclass(frozen=True)
class BasisElement:
    label: tuple[int, ...]
    factors: tuple[tuple[int, complex, int], ...]

    def log_abs(self, pts: np.ndarray) -> np.ndarray:
        out = np.zeros(pts.shape[0])
        with np.errstate(divide="ignore"):
            for var, root, power in self.factors:
                if power:
                    out = out + power * np.log(np.abs(pts[:, var] - root))
        return out

    def phase(self, pts: np.ndarray) -> np.ndarray:
        out = np.zeros(pts.shape[0])
        for var, root, power in self.factors:
            if power:
                out = out + power * np.angle(pts[:, var] - root)
        return out

    def values(self, pts: np.ndarray) -> np.ndarray:
        return np.exp(self.log_abs(pts) + 1j * self.phase(pts))

    def vanishes_at(self, point: Sequence[complex]) -> bool:
        return any(
            power > 0 and abs(point[var] - root) <= STRUCTURAL_TOL * max(1.0, abs(root))
            for var, root, power in self.factors
        )

    def to_poly(self, dim: int) -> ComplexPoly:
        out = ComplexPoly.constant(dim, 1.0)
        for var, root, power in self.factors:
            out = out * (ComplexPoly.variable(dim, var) - root) ** power
        return out


# ##################################################################
# weighted basis
# admissible basis of the truncated weighted space at one fiber, its
# gram matrix and the orthonormalising coefficients
@dataclass(frozen=True)
class WeightedBasis:
    degree_cap: int
    c: float
    dim: int
    elements: tuple[BasisElement, ...]
    excluded: tuple[tuple[int, ...], ...]
    gram: np.ndarray
    coefficients: np.ndarray
    discarded: int
    poles: tuple[tuple[complex, ...], ...]
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def admissible(self) -> list[tuple[int, ...]]:
        return [e.label for e in self.elements]

    @property
    def norms(self) -> list[float]:
        return [float(v) for v in np.real(np.diag(self.gram))]

    def kernel(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=complex))
        if not self.elements:
            return np.zeros(pts.shape[0])
        b = np.stack([e.values(pts) for e in self.elements], axis=1)
        e_vals = b @ self.coefficients
        return np.sum(np.abs(e_vals) ** 2, axis=1)

    def structural_zero(self, point: Sequence[complex]) -> bool:
        return all(e.vanishes_at(point) for e in self.elements)

    # ##################################################################
    # reproducing defect
    # max |A - I| where column k of A expresses the projection of b_k
    # back in the basis; zero up to the discarded directions
    def reproducing_defect(self) -> float:
        if not self.elements:
            return 0.0
        recon = self.coefficients @ np.conj(self.coefficients).T @ self.gram.T
        return float(np.max(np.abs(recon - np.eye(len(self.elements)))))

    def to_dict(self) -> dict:
        return {
            "degree_cap": self.degree_cap,
            "c": self.c,
            "admissible": [list(k) for k in self.admissible],
            "excluded": [list(k) for k in self.excluded],
            "norms": self.norms,
            "discarded": self.discarded,
            "poles": [list(p) for p in self.poles],
            "metadata": self.metadata,
        }


# ##################################################################
# build basis
# admissibility at every pole of phi_w (exact exponent rule where the
# local structure is known, shell test otherwise), then the weighted
# gram matrix by polar gauss-legendre quadrature and a symmetric
# eigendecomposition
def build_basis(
    phi_w: PshExpr,
    c: float,
    domain: Polydisc,
    degree_cap: int = DEGREE_CAP,
    strict: bool = False,
    seed: int = 0,
) -> WeightedBasis:
    if c <= 0:
        raise DegenerateInputError(f"weight exponent must be positive, got {c}")
    if phi_w.dim != domain.dim:
        raise DimensionMismatchError(f"phi has dim {phi_w.dim}, domain has dim {domain.dim}")
    if phi_w.dim > 2:
        raise DimensionMismatchError("bergman kernels are supported for fibers of dimension 1 and 2")
    poles = [tuple(complex(v) for v in p) for p in pole_points(phi_w, domain)]
    if phi_w.dim == 1:
        elements, excluded, meta = _basis_1d(phi_w, c, domain, degree_cap, poles, seed)
    else:
        elements, excluded, meta = _basis_2d(phi_w, c, domain, degree_cap, poles, seed)
    gram = _gram(phi_w, c, domain, elements, poles)
    coefficients, discarded = _orthonormalise(gram, degree_cap, strict)
    logger.debug(
        "basis cap %d: %d admissible, %d excluded, %d discarded", degree_cap, len(elements), len(excluded), discarded
    )
    return WeightedBasis(
        degree_cap=degree_cap,
        c=float(c),
        dim=phi_w.dim,
        elements=tuple(elements),
        excluded=tuple(excluded),
        gram=gram,
        coefficients=coefficients,
        discarded=discarded,
        poles=tuple(poles),
        metadata=meta,
    )


# ##################################################################
# basis 1d
# admissible polynomials of degree <= cap are Q * (z - anchor)^j with
# Q = prod (z - p)^kappa_p, kappa_p the least order making the weight
# integrable at p
def _basis_1d(
    phi_w: PshExpr,
    c: float,
    domain: Polydisc,
    cap: int,
    poles: list[tuple[complex, ...]],
    seed: int,
) -> tuple[list[BasisElement], list[tuple[int, ...]], dict[str, Any]]:
    kappas = []
    rules = []
    for p in poles:
        kappa, rule = _pole_order(phi_w, c, domain, p, poles, seed)
        kappas.append(kappa)
        rules.append(rule)
    anchor = poles[0][0] if poles else domain.center[0]
    base = tuple((0, p[0], k) for p, k in zip(poles, kappas) if k > 0)
    deg_q = sum(kappas)
    elements = [
        BasisElement((deg_q + j,), base + ((0, anchor, j),)) for j in range(0, cap - deg_q + 1)
    ]
    excluded = [(k,) for k in range(0, min(deg_q, cap + 1))]
    meta = {"pole_orders": kappas, "rules": rules, "anchor": anchor}
    return elements, excluded, meta


def _pole_order(
    phi_w: PshExpr,
    c: float,
    domain: Polydisc,
    p: tuple[complex, ...],
    poles: list[tuple[complex, ...]],
    seed: int,
) -> tuple[int, str]:
    nu = lelong_estimate(phi_w, p)
    if not math.isfinite(nu.value):
        raise DegenerateInputError(f"fiber weight is identically -inf near {p}")
    if nu.exact:
        exact = nu.metadata.get("exact")
        cnu = as_fraction(c) * (exact if isinstance(exact, Fraction) else as_fraction(nu.value))
        return int(math.floor(cnu)), "exponent"
    probe = IntegrabilityProbe(phi_w, p, geometry="annulus", r0=_probe_radius(domain, p, poles), seed=seed)
    for k in range(0, DEGREE_CAP + 1):
        extra = probe.sampler.evaluate(lambda y, k=k: 2.0 * k * np.log(np.abs(y[:, 0])))
        if probe.classify(c, extra).convergent:
            return k, "shell-test"
    return DEGREE_CAP + 1, "shell-test"


def _probe_radius(domain: Polydisc, p: Sequence[complex], poles: list[tuple[complex, ...]]) -> float:
    room = min(r - abs(p[i] - domain.center[i]) for i, r in enumerate(domain.radii))
    for q in poles:
        gap = max(abs(a - b) for a, b in zip(p, q))
        if gap > 0:
            room = min(room, gap)
    if room <= 0:
        raise DomainError(f"pole {p} lies on the domain boundary")
    return 0.5 * room


# ##################################################################
# basis 2d
# anchored monomials (z - a)^k of total degree <= cap, each tested at
# every pole: howald membership when the generators are monomial up to
# a unit there, the shell test with the monomial folded into the
# weight otherwise
def _basis_2d(
    phi_w: PshExpr,
    c: float,
    domain: Polydisc,
    cap: int,
    poles: list[tuple[complex, ...]],
    seed: int,
) -> tuple[list[BasisElement], list[tuple[int, ...]], dict[str, Any]]:
    anchor = poles[0] if len(poles) == 1 else tuple(domain.center)
    candidates = [k for k in product(range(cap + 1), repeat=2) if sum(k) <= cap]
    candidates.sort(key=lambda k: (sum(k), k))
    admissible = {k: True for k in candidates}
    rules = []
    undecided: list[tuple[int, ...]] = []
    for p in poles:
        # (z - a)^k is a unit at p in every coordinate where p differs from the anchor
        local = [
            tuple(ki if abs(p[i] - anchor[i]) <= STRUCTURAL_TOL else 0 for i, ki in enumerate(k)) for k in candidates
        ]
        newt = _local_newton(phi_w, p)
        if newt is not None:
            cf = as_fraction(c) * as_fraction(phi_w.alpha)
            for k, lk in zip(candidates, local):
                admissible[k] = admissible[k] and multiplier_contains(newt, lk, cf)
            rules.append("howald")
            continue
        probe = IntegrabilityProbe(phi_w, p, r0=_probe_radius(domain, p, poles), seed=seed)
        shift = np.asarray(p) - np.asarray(anchor)
        for k in candidates:
            if admissible[k]:
                extra = probe.sampler.evaluate(lambda y, k=k: _log_monomial(y, shift, k))
                verdict = probe.classify(c, extra)
                admissible[k] = verdict.convergent
                if verdict.inconclusive:
                    undecided.append(k)
        rules.append("shell-test")
    elements = [
        BasisElement(k, ((0, anchor[0], k[0]), (1, anchor[1], k[1]))) for k in candidates if admissible[k]
    ]
    excluded = [k for k in candidates if not admissible[k]]
    return elements, excluded, {"rules": rules, "anchor": list(anchor), "undecided": undecided}


def _log_monomial(y: np.ndarray, shift: np.ndarray, k: tuple[int, ...]) -> np.ndarray:
    out = np.zeros(y.shape[0])
    with np.errstate(divide="ignore"):
        for i, ki in enumerate(k):
            if ki:
                out = out + 2.0 * ki * np.log(np.abs(y[:, i] + shift[i]))
    return out


def _local_newton(phi_w: PshExpr, p: Sequence[complex]) -> NewtonPolyhedron | None:
    if not isinstance(phi_w, AnalyticSingularityPsh):
        return None
    shifted = phi_w.recentered(p)
    if not isinstance(shifted, AnalyticSingularityPsh):
        return None
    heads = [g.dominant_monomial() for g in shifted.gens]
    if any(h is None for h in heads):
        return None
    return NewtonPolyhedron(phi_w.dim, heads)


# ##################################################################
# gram
# G = B~^T conj(B~) with the scaled basis b~ = |b| e^{-c phi} sqrt(w)
# times the phase; a geometric correction for the unresolved innermost
# panels keeps the matrix positive and nested across caps
def _gram(
    phi_w: PshExpr,
    c: float,
    domain: Polydisc,
    elements: list[BasisElement],
    poles: list[tuple[complex, ...]],
) -> np.ndarray:
    size = len(elements)
    gram = np.zeros((size, size), dtype=complex)
    if not size:
        return gram
    centers = poles or [tuple(domain.center)]
    for pole in centers:
        if phi_w.dim == 1:
            rule = polar_rule(domain.center[0], domain.radii[0], pole[0], **RULE_1D)
            pts = rule.nodes[:, None]
            logw = rule.log_weights + _log_partition_nd(pts, pole, centers)
            full, last, prev = _gram_panels(phi_w, c, elements, pts, logw, rule.panel, rule.depth)
            gram += full + _tail_correction(last, prev)
        else:
            gram += _gram_2d(phi_w, c, domain, elements, pole, centers)
    return 0.5 * (gram + gram.conj().T)


def _gram_panels(
    phi_w: PshExpr,
    c: float,
    elements: list[BasisElement],
    pts: np.ndarray,
    logw: np.ndarray,
    panel: np.ndarray,
    depth: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    scaled = _scaled_basis(phi_w, c, elements, pts, logw)
    full = scaled.T @ np.conj(scaled)
    last_rows = scaled[panel == depth - 1]
    prev_rows = scaled[panel == depth - 2]
    return full, last_rows.T @ np.conj(last_rows), prev_rows.T @ np.conj(prev_rows)


def _scaled_basis(
    phi_w: PshExpr, c: float, elements: list[BasisElement], pts: np.ndarray, logw: np.ndarray
) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        weight = -c * phi_w.values(pts) + 0.5 * logw
        cols = [np.exp(e.log_abs(pts) + weight + 1j * e.phase(pts)) for e in elements]
    out = np.stack(cols, axis=1)
    # a basis element vanishing at a pole cancels the weight there
    return np.nan_to_num(out, nan=0.0, posinf=0.0)


def _tail_correction(last: np.ndarray, prev: np.ndarray) -> np.ndarray:
    diag_last = np.real(np.diag(last))
    diag_prev = np.real(np.diag(prev))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(diag_prev > 0, diag_last / diag_prev, 0.0)
    ratio = np.clip(ratio, 0.0, 0.95)
    factor = np.sqrt(ratio / (1 - ratio))
    return factor[:, None] * last * factor[None, :]


def _gram_2d(
    phi_w: PshExpr,
    c: float,
    domain: Polydisc,
    elements: list[BasisElement],
    pole: tuple[complex, ...],
    centers: list[tuple[complex, ...]],
) -> np.ndarray:
    rz = polar_rule(domain.center[0], domain.radii[0], pole[0], **RULE_2D)
    rw = polar_rule(domain.center[1], domain.radii[1], pole[1], **RULE_2D)
    size = len(elements)
    gram = np.zeros((size, size), dtype=complex)
    step = max(1, CHUNK // rz.nodes.size)
    for start in range(0, rw.nodes.size, step):
        wn = rw.nodes[start : start + step]
        wl = rw.log_weights[start : start + step]
        pts = np.column_stack([np.tile(rz.nodes, wn.size), np.repeat(wn, rz.nodes.size)])
        logw = np.tile(rz.log_weights, wn.size) + np.repeat(wl, rz.nodes.size)
        logw = logw + _log_partition_nd(pts, pole, centers)
        scaled = _scaled_basis(phi_w, c, elements, pts, logw)
        gram += scaled.T @ np.conj(scaled)
    return gram


def _log_partition_nd(pts: np.ndarray, pole: Sequence[complex], centers: list[tuple[complex, ...]]) -> np.ndarray:
    if len(centers) == 1:
        return np.zeros(pts.shape[0])
    with np.errstate(divide="ignore"):
        dist = np.stack([np.log(np.linalg.norm(pts - np.asarray(q)[None, :], axis=1)) for q in centers])
    others = 2 * (dist.sum(axis=0)[None, :] - dist)
    own = centers.index(tuple(pole))
    top = np.max(others, axis=0)
    return others[own] - (top + np.log(np.sum(np.exp(others - top[None, :]), axis=0)))


# ##################################################################
# orthonormalise
# C = conj(U) Lambda^{-1/2} over eigenvalues above the cutoff, so that
# e = B C is orthonormal for G_ij = <b_i, b_j>
def _orthonormalise(gram: np.ndarray, cap: int, strict: bool) -> tuple[np.ndarray, int]:
    size = gram.shape[0]
    if size == 0:
        return np.zeros((0, 0), dtype=complex), 0
    lam, vec = eigh(gram)
    top = float(np.max(lam))
    if not top > 0:
        raise GramConditioningError("gram matrix has no positive eigenvalue", cap)
    keep = lam > EIGEN_CUTOFF * top
    discarded = int(size - keep.sum())
    if discarded and strict:
        raise GramConditioningError(
            f"gram matrix numerically singular: {discarded} of {size} eigenvalues below cutoff", cap
        )
    if discarded:
        logger.debug("discarding %d near-null gram directions at cap %d", discarded, cap)
    coefficients = np.conj(vec[:, keep]) / np.sqrt(lam[keep])[None, :]
    return coefficients, discarded


# ##################################################################
# bergman kernel field
# fibrewise truncated kernels K(z, w) of c * phi over a family; fiber
# bases are built on demand and cached
class BergmanKernelField:
    def __init__(self, family: Family, c: float, degree_cap: int = DEGREE_CAP, seed: int = 0) -> None:
        if family.n > 2:
            raise DimensionMismatchError("bergman kernels are supported for fibers of dimension 1 and 2")
        self.family = family
        self.c = float(c)
        self.degree_cap = degree_cap
        self.seed = seed
        self._fibers: dict[tuple[complex, ...], WeightedBasis] = {}
        self._lock = threading.Lock()

    def fiber(self, w: Sequence[complex]) -> WeightedBasis:
        key = tuple(complex(v) for v in w)
        with self._lock:
            cached = self._fibers.get(key)
        if cached is not None:
            return cached
        phi_w = restrict_fiber(self.family, key)
        basis = build_basis(phi_w, self.c, self.family.fiber_domain, self.degree_cap, seed=self.seed)
        with self._lock:
            return self._fibers.setdefault(key, basis)

    def kernel_at(self, z: Sequence[complex], w: Sequence[complex]) -> float:
        point = np.asarray([complex(v) for v in z])
        if point.size != self.family.n:
            raise DimensionMismatchError(f"z has {point.size} coordinates, family has n={self.family.n}")
        if not self.family.fiber_domain.contains(point):
            raise DomainError(f"z = {list(point)} outside the fiber polydisc")
        return float(self.fiber(w).kernel(point[None, :])[0])

    def log_kernel(self, z: Sequence[complex], w: Sequence[complex]) -> float:
        basis = self.fiber(w)
        if basis.structural_zero([complex(v) for v in z]):
            return -math.inf
        value = self.kernel_at(z, w)
        return math.log(value) if value > 0 else -math.inf


def kernel_at(field: BergmanKernelField, z: Sequence[complex], w: Sequence[complex]) -> float:
    return field.kernel_at(z, w)


# ##################################################################
# pole scan
# grid points where every admissible basis element vanishes, decided
# from the factor roots rather than from a floating threshold
def pole_scan(field: BergmanKernelField, grid: GridSpec) -> LevelSetCloud:
    n = field.family.n
    if grid.dim != n + field.family.m:
        raise DimensionMismatchError(f"grid of dim {grid.dim} for a family of dim {n + field.family.m}")
    points = []
    for index, coords in grid.points():
        z, w = coords[:n], coords[n:]
        basis = field.fiber(w)
        zero = basis.structural_zero(z)
        value = -math.inf if zero else field.log_kernel(z, w)
        points.append(CloudPoint(index=index, coords=coords, value=value, uncertainty=0.0, member=zero))
    return LevelSetCloud(kind=CloudKind.Y, c=field.c, grid=grid, points=tuple(points))


# ##################################################################
# log psh report
# worst sub-mean-value violation log K(center) - mean_circle log K,
# separately along z with w frozen and along w with z frozen
@dataclass(frozen=True)
class LogPshReport:
    worst_z: float
    worst_w: float
    samples: list[dict[str, Any]]

    @property
    def worst(self) -> float:
        return max(self.worst_z, self.worst_w)

    def to_dict(self) -> dict:
        return {"worst": self.worst, "worst_z": self.worst_z, "worst_w": self.worst_w, "samples": self.samples}


def log_psh_check(
    field: BergmanKernelField,
    disc_samples: Sequence[tuple[Sequence[complex], Sequence[complex], float]],
    n_points: int = CIRCLE_POINTS,
) -> LogPshReport:
    theta = 2 * math.pi * np.arange(n_points) / n_points
    circle = np.exp(1j * theta)
    worst_z = worst_w = -math.inf
    rows = []
    for z0, w0, radius in disc_samples:
        z0 = [complex(v) for v in z0]
        w0 = [complex(v) for v in w0]
        center = field.log_kernel(z0, w0)
        # along z: first coordinate moves, w fixed
        z_vals = [field.log_kernel([z0[0] + radius * u] + z0[1:], w0) for u in circle]
        violation_z = center - float(np.mean(z_vals))
        violation_w = -math.inf
        if field.family.m:
            w_vals = [field.log_kernel(z0, [w0[0] + radius * u] + w0[1:]) for u in circle]
            violation_w = center - float(np.mean(w_vals))
        violation_z = _finite_violation(center, violation_z)
        violation_w = _finite_violation(center, violation_w)
        worst_z = max(worst_z, violation_z)
        worst_w = max(worst_w, violation_w)
        rows.append({"z": z0, "w": w0, "radius": radius, "violation_z": violation_z, "violation_w": violation_w})
    logger.debug("log-psh worst violation: z %.3e, w %.3e", worst_z, worst_w)
    return LogPshReport(worst_z=worst_z, worst_w=worst_w, samples=rows)


def _finite_violation(center: float, violation: float) -> float:
    # a -inf center satisfies the inequality trivially
    if center == -math.inf:
        return -math.inf
    return violation
