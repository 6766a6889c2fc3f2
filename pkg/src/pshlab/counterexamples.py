from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Any, Sequence

import numpy as np

from pshlab.cantor import CantorPotential, CantorSpec, cantor_distance, polar_cantor
from pshlab.errors import DomainError, PreconditionError
from pshlab.families import CloudKind, CloudPoint, GridSpec, LevelSetCloud, ProbeReport, analyticity_probe
from pshlab.invariants import InvariantEstimate, InvariantMethod, lelong_radial
from pshlab.newton import as_fraction
from pshlab.poly import ComplexPoly
from pshlab.psh import (
    AnalyticSingularityPsh,
    ConstantPsh,
    Family,
    LogHoelderTerm,
    MaxPsh,
    Polydisc,
    PshExpr,
    ScalarField,
    SumPsh,
    evaluate,
)

logger = logging.getLogger(__name__)

DEFAULT_K = 5
LI_DEPTH = 20
LI_C = 3.0
WINDOW_FACTOR = 1.5
ENDPOINT_LEVEL = 4
HAUSDORFF_LEVEL = 12

_Z = ComplexPoly.variable(2, 0)
_W = ComplexPoly.variable(2, 1)


# ##################################################################
# wang term
# one summand log(|w - w_k - z^{m_k}|^{alpha_k} + |z|^{beta_k})
@dataclass(frozen=True)
class WangTerm:
    k: int
    w_k: float
    alpha_k: Fraction
    m_k: int
    beta_k: Fraction

    @property
    def target(self) -> Fraction:
        return min(self.m_k * self.alpha_k, self.beta_k)

    def to_psh(self) -> LogHoelderTerm:
        return LogHoelderTerm(_W - self.w_k - _Z**self.m_k, _Z, float(self.alpha_k), float(self.beta_k))

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "w_k": self.w_k,
            "alpha_k": self.alpha_k,
            "m_k": self.m_k,
            "beta_k": self.beta_k,
            "target": self.target,
        }


# ##################################################################
# wang family
# w_k = 1/(k+1), alpha_k = 1/k^2, m_k = ceil(c k^2), beta_k = c + 1:
# phi(0, w_k) = -inf for every k while phi(0, 0) is finite
@dataclass(frozen=True)
class WangFamily:
    c: float = 1.0
    K: int = DEFAULT_K

    def __post_init__(self) -> None:
        if self.c <= 0 or self.K < 1:
            raise PreconditionError(f"need c > 0 and K >= 1, got c={self.c}, K={self.K}")

    @cached_property
    def terms(self) -> tuple[WangTerm, ...]:
        c = as_fraction(self.c)
        return tuple(
            WangTerm(k=k, w_k=1.0 / (k + 1), alpha_k=Fraction(1, k * k), m_k=math.ceil(c * k * k), beta_k=c + 1)
            for k in range(1, self.K + 1)
        )

    @cached_property
    def phi(self) -> PshExpr:
        return SumPsh(tuple((1.0, t.to_psh()) for t in self.terms))

    def family(self) -> Family:
        return Family(self.phi, n=1, m=1, domain=Polydisc.unit(2), name=f"wang(c={self.c}, K={self.K})")

    def to_dict(self) -> dict:
        return {"c": self.c, "K": self.K, "terms": [t.to_dict() for t in self.terms]}


def wang_phi(fam: WangFamily, z: complex, w: complex) -> float:
    if abs(z) >= 1 or abs(w) >= 1:
        raise DomainError(f"({z}, {w}) is outside the unit bidisc")
    return evaluate(fam.phi, [z, w])


# ##################################################################
# wang fiber lelong
# radial slope of the fiber at z = 0 over w_k (k = 0 means w = 0),
# with the closed-form target recorded alongside
def wang_fiber_lelong(fam: WangFamily, k: int, **radial: Any) -> InvariantEstimate:
    if not 0 <= k <= fam.K:
        raise PreconditionError(f"term index {k} outside 0..{fam.K}")
    w = 0.0 if k == 0 else fam.terms[k - 1].w_k
    target = Fraction(0) if k == 0 else fam.terms[k - 1].target
    fiber = fam.phi.restrict([complex(w)])
    est = lelong_radial(fiber, [0j], **radial)
    return InvariantEstimate(
        value=est.value,
        method=est.method,
        uncertainty=est.uncertainty,
        metadata=est.metadata | {"k": k, "w": w, "target": target},
    )


def wang_catalog(fam: WangFamily, **radial: Any) -> list[dict[str, Any]]:
    rows = []
    for k in range(fam.K + 1):
        est = wang_fiber_lelong(fam, k, **radial)
        rows.append(
            {
                "w": est.metadata["w"],
                "nu": est.value,
                "uncertainty": est.uncertainty,
                "target": float(est.metadata["target"]),
                "member": est.value + est.uncertainty >= fam.c,
            }
        )
    return rows


# ##################################################################
# li example
# chart formula max{2 log(|zeta|^2 (1+|w|^2)), log(|zeta|^2 (1+|w|^2))
# + p(w)} with p the cantor potential; below the crossover radius
# exp((p - log(1+|w|^2))/2) the slope-2 branch wins
@dataclass
class LiExample:
    potential: CantorPotential

    @property
    def gens(self) -> tuple[ComplexPoly, ...]:
        return (_Z, _Z * _W)

    @property
    def spec(self) -> CantorSpec:
        return self.potential.spec

    @cached_property
    def phi(self) -> PshExpr:
        potential = self.potential
        field_ = ScalarField(2, lambda pts: potential.values(pts[:, 1]), "cantor-potential")
        slope2 = SumPsh(((1.0, AnalyticSingularityPsh(2.0, self.gens)), (1.0, field_)))
        return MaxPsh((AnalyticSingularityPsh(4.0, self.gens), slope2))

    def family(self) -> Family:
        domain = Polydisc((0j, 0.5 + 0j), (1.0, 0.75))
        return Family(self.phi, n=1, m=1, domain=domain, name=f"li(depth={self.spec.depth})")

    def fiber(self, w: complex, p: float | None = None) -> PshExpr:
        p = self.potential.value(w) if p is None else p
        gens = tuple(g.restrict([complex(w)]) for g in self.gens)
        if p == -math.inf:
            return AnalyticSingularityPsh(4.0, gens)
        slope2 = SumPsh(((1.0, AnalyticSingularityPsh(2.0, gens)), (1.0, ConstantPsh(1, p))))
        return MaxPsh((AnalyticSingularityPsh(4.0, gens), slope2))

    def crossover_radius(self, w: complex, p: float | None = None) -> float:
        p = self.potential.value(w) if p is None else p
        return math.exp((p - math.log1p(abs(w) ** 2)) / 2)

    @cached_property
    def window(self) -> tuple[float, float]:
        gap = complex(self.spec.gap_midpoints(1)[0])
        r_mid = math.sqrt(self.crossover_radius(0j) * self.crossover_radius(gap))
        return r_mid / WINDOW_FACTOR, r_mid * WINDOW_FACTOR


def li_example(depth: int = LI_DEPTH, spec: CantorSpec | None = None) -> LiExample:
    return LiExample(CantorPotential(spec or polar_cantor(depth)))


# ##################################################################
# li fiber lelong
# slope of the fiber at zeta = 0 on a window between the crossover radii
# of the cantor points and of the gaps; p = -inf leaves only the
# slope-4 branch and is answered exactly
def li_fiber_lelong(ex: LiExample, w: complex, p: float | None = None, **radial: Any) -> InvariantEstimate:
    p = ex.potential.value(w) if p is None else p
    if p == -math.inf:
        return InvariantEstimate(
            value=4.0, method=InvariantMethod.EXACT_MULTIPLICITY, metadata={"w": complex(w), "p": p, "rule": "polar"}
        )
    r_min, r_max = ex.window
    radial = {"r_min": r_min, "r_max": r_max} | radial
    est = lelong_radial(ex.fiber(w, p), [0j], **radial)
    r_c = ex.crossover_radius(w, p)
    inside = radial["r_min"] <= r_c <= radial["r_max"]
    if inside:
        logger.debug("crossover radius %.3g of w=%s lies inside the slope window", r_c, w)
    return InvariantEstimate(
        value=est.value,
        method=est.method,
        uncertainty=est.uncertainty,
        metadata=est.metadata | {"w": complex(w), "p": p, "crossover_radius": r_c, "crossover_in_window": inside},
    )


def default_li_grid(spec: CantorSpec) -> list[float]:
    # level-4 endpoints (in the limit set at every depth) and gap midpoints of levels 1..4
    ends = spec.intervals(ENDPOINT_LEVEL).ravel()
    gaps = np.concatenate([spec.gap_midpoints(level) for level in range(1, ENDPOINT_LEVEL + 1)])
    return sorted(float(v) for v in np.concatenate([ends, gaps]))


def li_catalog(ex: LiExample, ws: Sequence[float] | None = None, c: float = LI_C) -> list[dict[str, Any]]:
    rows = []
    for w in ws if ws is not None else default_li_grid(ex.spec):
        est = li_fiber_lelong(ex, w)
        rows.append(
            {
                "w": float(w),
                "nu": est.value,
                "uncertainty": est.uncertainty,
                "p": est.metadata["p"],
                "member": est.value >= c,
                "distance": cantor_distance(ex.spec, w),
            }
        )
    return rows


# ##################################################################
# nonanalyticity report
# X_c membership over {zeta = 0} x grid, its distance to the depth-K
# intervals and the analyticity probe verdict on the cloud
@dataclass(frozen=True)
class NonanalyticityReport:
    c: float
    cloud: LevelSetCloud
    hausdorff: float
    probe: ProbeReport

    @property
    def members(self) -> list[float]:
        return [p.coords[1].real for p in self.cloud.members()]

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "members": self.members,
            "hausdorff": self.hausdorff,
            "probe": self.probe.to_dict(),
            "cloud": self.cloud.to_dict(),
        }


def nonanalyticity_demo(
    ex: LiExample, c: float = LI_C, grid: Sequence[float] | None = None, **radial: Any
) -> NonanalyticityReport:
    ws = list(grid) if grid is not None else default_li_grid(ex.spec)
    spec = GridSpec.real_axes([0.0], ws)
    points = []
    for index, coords in spec.points():
        est = li_fiber_lelong(ex, coords[1], **radial)
        points.append(
            CloudPoint(
                index=index,
                coords=coords,
                value=est.value,
                uncertainty=est.uncertainty,
                member=est.value >= c,
                borderline=abs(est.value - c) <= est.uncertainty,
                unresolved=bool(est.metadata.get("crossover_in_window", False)),
            )
        )
    cloud = LevelSetCloud(kind=CloudKind.X, c=c, grid=spec, points=tuple(points))
    members = [p.coords[1].real for p in cloud.members()]
    hausdorff = _hausdorff(ex.spec, members)
    probe = analyticity_probe(cloud)
    logger.debug("X_%s scan: %d of %d grid points, hausdorff %.3g", c, len(members), len(ws), hausdorff)
    return NonanalyticityReport(c=c, cloud=cloud, hausdorff=hausdorff, probe=probe)


def _hausdorff(spec: CantorSpec, members: Sequence[float]) -> float:
    if not members:
        return math.inf
    outward = max(cantor_distance(spec, m) for m in members)
    level = min(spec.depth, HAUSDORFF_LEVEL)
    samples = spec.intervals(level).ravel()
    inward = float(np.max(np.min(np.abs(samples[:, None] - np.asarray(members)[None, :]), axis=1)))
    return max(outward, inward)
