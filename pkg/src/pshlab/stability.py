from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np
from scipy.special import logsumexp

from pshlab.errors import DegenerateInputError, DimensionMismatchError, EtaSearchError, PreconditionError
from pshlab.integrability import IntegrabilityProbe, ShellGeometry, ShellVerdict
from pshlab.newton import as_fraction
from pshlab.poly import ComplexPoly
from pshlab.psh import Polydisc, PshExpr, ScalarField, common_zeros, pole_points
from pshlab.quadrature import QuadratureResult, disc_integral, polar_rule, product_integral

logger = logging.getLogger(__name__)

BETA_BRACKET = (Fraction(1, 100), Fraction(4))
BETA_STEPS = 6
CONTINUITY_THRESHOLD = 1e-2
REFINED_RULE = {"n_theta": 96, "n_gl": 12}
SIU_Z_RULE = {"n_theta": 32, "n_gl": 8, "depth": 30}
SIU_W_RULE = {"n_theta": 16, "n_gl": 6, "depth": 20}
SIU_TOLERANCE = 0.02
BOUND_SAMPLES = 4096
FIBER_CONDITION = "fiber"
RAISED_CONDITION = "raised"
WEIGHTED_CONDITION = "weighted"


# ##################################################################
# rational power integrand
# R(z, w) = (sum |F_i|^2)^{eps/2} / (sum |G_j|^2)^{delta/2} over n
# fiber variables z and m parameters w, evaluated in log form
@dataclass(frozen=True)
class RationalPowerIntegrand:
    F: tuple[ComplexPoly, ...]
    G: tuple[ComplexPoly, ...]
    eps: Fraction
    delta: Fraction
    n: int
    m: int = 1

    def __post_init__(self) -> None:
        F, G = tuple(self.F), tuple(self.G)
        if not F or not G:
            raise DegenerateInputError("numerator and denominator tuples must be non-empty")
        if all(f.is_zero() for f in F):
            raise DegenerateInputError("every numerator polynomial is zero")
        if all(g.is_zero() for g in G):
            raise DegenerateInputError("every denominator polynomial is zero")
        if {p.dim for p in F + G} != {self.n + self.m}:
            raise DimensionMismatchError(f"polynomials must have dim n + m = {self.n + self.m}")
        eps, delta = as_fraction(self.eps), as_fraction(self.delta)
        if eps < 0 or delta < 0:
            raise DegenerateInputError("exponents must be non-negative")
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "delta", delta)

    @property
    def dim(self) -> int:
        return self.n + self.m

    def log_values(self, points: np.ndarray, delta_scale: float = 1.0) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=complex))
        return float(self.eps) * _log_norm(self.F, pts) - float(self.delta) * delta_scale * _log_norm(self.G, pts)

    def fiber(self, w: Sequence[complex]) -> RationalPowerIntegrand:
        w = [complex(v) for v in w]
        if len(w) != self.m:
            raise DimensionMismatchError(f"parameter has {len(w)} coordinates, integrand has m={self.m}")
        F = tuple(f.restrict(w) for f in self.F)
        G = tuple(g.restrict(w) for g in self.G)
        if all(f.is_zero() for f in F):
            F = (ComplexPoly(self.n, {}),)
            return _ZeroIntegrand(F, (ComplexPoly.constant(self.n, 1.0),), self.eps, self.delta, self.n, 0)
        return RationalPowerIntegrand(F, G, self.eps, self.delta, self.n, 0)

    def to_dict(self) -> dict:
        return {
            "F": [f.to_dict() for f in self.F],
            "G": [g.to_dict() for g in self.G],
            "eps": self.eps,
            "delta": self.delta,
            "n": self.n,
            "m": self.m,
        }


class _ZeroIntegrand(RationalPowerIntegrand):
    # fiber on which every numerator vanishes: R is identically zero
    def __post_init__(self) -> None:
        pass

    def log_values(self, points: np.ndarray, delta_scale: float = 1.0) -> np.ndarray:
        return np.full(np.atleast_2d(points).shape[0], -np.inf)


def _log_norm(polys: Sequence[ComplexPoly], pts: np.ndarray) -> np.ndarray:
    # (1/2) log sum |p|^2
    logs = np.stack([p.log_abs(pts) for p in polys])
    with np.errstate(divide="ignore"):
        return 0.5 * logsumexp(2 * logs, axis=0)


# ##################################################################
# nondegeneracy report
# integer pairs (nu, l) with nu * eps + 2 - l * delta / ([delta] + 1) = 0
@dataclass(frozen=True)
class NondegeneracyReport:
    eps: Fraction
    delta: Fraction
    M: int
    N: int
    pairs: list[tuple[int, int]]

    @property
    def non_degenerate(self) -> bool:
        return not self.pairs

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "delta": self.delta,
            "M": self.M,
            "N": self.N,
            "pairs": [list(p) for p in self.pairs],
            "non_degenerate": self.non_degenerate,
        }


def nondegenerate_check(eps: Fraction | float, delta: Fraction | float, M: int, N: int) -> NondegeneracyReport:
    eps, delta = as_fraction(eps), as_fraction(delta)
    if eps < 0 or delta < 0 or M < 0 or N < 0:
        raise DegenerateInputError("exponents and degree bounds must be non-negative")
    scale = delta / (math.floor(delta) + 1)
    pairs = [(nu, l) for nu in range(M + 1) for l in range(N + 1) if nu * eps + 2 - l * scale == 0]
    return NondegeneracyReport(eps=eps, delta=delta, M=M, N=N, pairs=pairs)


# ##################################################################
# find eta
# smallest grid eta making (eps, delta + eta) non-degenerate
def find_eta(
    eps: Fraction | float, delta: Fraction | float, M: int, N: int, eta_grid: Sequence[Fraction | float]
) -> Fraction:
    candidates = sorted(as_fraction(e) for e in eta_grid)
    if not candidates:
        raise EtaSearchError("eta grid is empty", [])
    if any(not 0 < e <= 1 for e in candidates):
        raise PreconditionError("eta candidates must lie in (0, 1]")
    blocked = []
    for eta in candidates:
        report = nondegenerate_check(eps, as_fraction(delta) + eta, M, N)
        if report.non_degenerate:
            return eta
        blocked.append(f"{eta}: {report.pairs}")
    raise EtaSearchError(f"every eta on the grid is degenerate: {'; '.join(blocked)}", blocked)


# ##################################################################
# condition result
# classification of one hypothesis integral with its shell evidence
@dataclass(frozen=True)
class ConditionResult:
    name: str
    holds: bool
    inconclusive: bool
    evidence: list[dict[str, Any]]

    def to_dict(self) -> dict:
        return {"name": self.name, "holds": self.holds, "inconclusive": self.inconclusive, "evidence": self.evidence}


# ##################################################################
# stability hypotheses
# beta, alpha in (1 - beta, 1), the polydiscs Q1 > Q2, the disc radius
# eps and, once checked, the three condition results
@dataclass(frozen=True)
class StabilityHypotheses:
    beta: Fraction
    alpha: float
    q1: Polydisc
    q2: Polydisc
    eps_radius: float
    results: dict[str, ConditionResult] = field(default_factory=dict)

    def __post_init__(self) -> None:
        beta = as_fraction(self.beta)
        if beta <= 0:
            raise PreconditionError(f"beta must be a positive rational, got {beta}")
        if not 1 - beta < self.alpha < 1:
            raise PreconditionError(f"alpha must lie in (1 - beta, 1) = ({float(1 - beta)}, 1), got {self.alpha}")
        if self.eps_radius <= 0:
            raise PreconditionError("disc radius must be positive")
        for a, b, r1, r2 in zip(self.q1.center, self.q2.center, self.q1.radii, self.q2.radii):
            if abs(a - b) + r2 > r1:
                raise PreconditionError("Q2 must be contained in Q1")
        object.__setattr__(self, "beta", beta)

    @property
    def all_hold(self) -> bool:
        return bool(self.results) and all(r.holds and not r.inconclusive for r in self.results.values())

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "alpha": self.alpha,
            "q1": self.q1.to_dict(),
            "q2": self.q2.to_dict(),
            "eps_radius": self.eps_radius,
            "results": {k: v.to_dict() for k, v in self.results.items()},
            "all_hold": self.all_hold,
        }


# ##################################################################
# hypothesis check
# "fiber": R(., 0) over D; "raised": the same with the denominator
# power raised by (1 + beta) over Q1; "weighted": R times |w|^{-2 alpha} over
# Q2 x disc(eps) tested at the origin on log-polydisc slabs
def hypothesis_check(
    R: RationalPowerIntegrand,
    hyp: StabilityHypotheses | None = None,
    domain: Polydisc | None = None,
    seed: int = 0,
) -> StabilityHypotheses:
    if R.m != 1:
        raise DimensionMismatchError("hypotheses are stated for one parameter")
    domain = domain or Polydisc.unit(R.n)
    if hyp is None:
        q1 = Polydisc(domain.center, tuple(0.75 * r for r in domain.radii))
        q2 = Polydisc(domain.center, tuple(0.5 * r for r in domain.radii))
        beta = default_beta(R, q1, seed)
        hyp = StabilityHypotheses(beta=beta, alpha=float(1 - beta / 2), q1=q1, q2=q2, eps_radius=0.5)
    fiber = R.fiber([0j])
    results = {
        FIBER_CONDITION: _fiber_condition(FIBER_CONDITION, fiber, domain, 1.0, seed),
        RAISED_CONDITION: _fiber_condition(RAISED_CONDITION, fiber, hyp.q1, float(1 + hyp.beta), seed),
        WEIGHTED_CONDITION: _weighted_condition(R, hyp, seed),
    }
    for name, res in results.items():
        logger.debug("condition %s: holds=%s inconclusive=%s", name, res.holds, res.inconclusive)
    return StabilityHypotheses(hyp.beta, hyp.alpha, hyp.q1, hyp.q2, hyp.eps_radius, results)


def default_beta(R: RationalPowerIntegrand, q1: Polydisc, seed: int = 0) -> Fraction:
    # half the coarse supremum of the betas for which the raised condition holds
    fiber = R.fiber([0j])
    lo, hi = BETA_BRACKET
    if not _fiber_condition(RAISED_CONDITION, fiber, q1, float(1 + lo), seed).holds:
        return lo
    if _fiber_condition(RAISED_CONDITION, fiber, q1, float(1 + hi), seed).holds:
        return hi / 2
    for _ in range(BETA_STEPS):
        mid = (lo + hi) / 2
        if _fiber_condition(RAISED_CONDITION, fiber, q1, float(1 + mid), seed).holds:
            lo = mid
        else:
            hi = mid
    return (lo / 2).limit_denominator(100)


def _fiber_condition(
    name: str, fiber: RationalPowerIntegrand, region: Polydisc, delta_scale: float, seed: int
) -> ConditionResult:
    if isinstance(fiber, _ZeroIntegrand):
        return ConditionResult(name, True, False, [{"rule": "zero-numerator"}])
    live = [g for g in fiber.G if not g.is_zero()]
    if fiber.delta == 0 or all(g.degree() == 0 for g in live):
        return ConditionResult(name, True, False, [{"rule": "bounded-integrand"}])
    if fiber.n == 1:
        centers = [tuple(p) for p in common_zeros(live, region)]
        geometry = ShellGeometry.ANNULUS
    else:
        centers = [tuple(region.center)]
        geometry = ShellGeometry.SLAB
    evidence, holds, undecided = [], True, False
    for p in centers:
        r0 = 0.5 * min(r - abs(p[i] - region.center[i]) for i, r in enumerate(region.radii))
        verdict = _log_probe(lambda pts: fiber.log_values(pts, delta_scale), fiber.n, p, geometry, r0, seed)
        evidence.append({"center": list(p), **verdict.to_dict()})
        holds = holds and verdict.convergent
        undecided = undecided or verdict.inconclusive
    return ConditionResult(name, holds, undecided, evidence)


def _weighted_condition(R: RationalPowerIntegrand, hyp: StabilityHypotheses, seed: int) -> ConditionResult:
    alpha = hyp.alpha
    scale = float(1 + hyp.beta)

    def log_integrand(pts: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return R.log_values(pts, scale) - 2 * alpha * np.log(np.abs(pts[:, -1]))

    center = tuple(hyp.q2.center) + (0j,)
    r0 = 0.999 * min(min(hyp.q2.radii), hyp.eps_radius)
    verdict = _log_probe(log_integrand, R.dim, center, ShellGeometry.SLAB, r0, seed)
    evidence = [{"center": list(center), **verdict.to_dict()}]
    return ConditionResult(WEIGHTED_CONDITION, verdict.convergent, verdict.inconclusive, evidence)


def _log_probe(
    log_integrand: Any, dim: int, center: Sequence[complex], geometry: ShellGeometry, r0: float, seed: int
) -> ShellVerdict:
    # e^{-2c phi} with phi = -log R / 2 and c = 1 is R itself
    field_ = ScalarField(dim, lambda pts: -0.5 * log_integrand(pts), "log-integrand")
    probe = IntegrabilityProbe(field_, center, geometry=geometry, r0=r0, seed=seed)
    return probe.classify(1.0)


# ##################################################################
# integral family report
# per-w values of the fiber integral, the adjacent-sample jumps and
# the continuity verdict
@dataclass(frozen=True)
class IntegralFamilyReport:
    radius: float
    samples: list[dict[str, Any]]
    jumps: list[float]
    threshold: float

    @property
    def max_jump(self) -> float:
        return max(self.jumps, default=0.0)

    @property
    def continuous(self) -> bool:
        return self.max_jump <= self.threshold

    def to_dict(self) -> dict:
        return {
            "radius": self.radius,
            "samples": self.samples,
            "jumps": self.jumps,
            "max_jump": self.max_jump,
            "threshold": self.threshold,
            "continuous": self.continuous,
        }


def integral_family(
    R: RationalPowerIntegrand,
    radius: float,
    w_samples: Sequence[complex],
    threshold: float = CONTINUITY_THRESHOLD,
    center: complex = 0j,
) -> IntegralFamilyReport:
    if R.n != 1 or R.m != 1:
        raise DimensionMismatchError("integral family quadrature handles one fiber variable and one parameter")
    rows = []
    for w in w_samples:
        fiber = R.fiber([complex(w)])
        result = _fiber_integral(fiber, center, radius)
        rows.append({"w": complex(w), "value": result.value, "error": result.error, "divergent": result.divergent})
    values = [r["value"] for r in rows]
    jumps = [_jump(a, b) for a, b in zip(values, values[1:])]
    return IntegralFamilyReport(radius=radius, samples=rows, jumps=jumps, threshold=threshold)


def _jump(a: float, b: float) -> float:
    if math.isinf(a) and math.isinf(b):
        return 0.0
    return abs(a - b)


def _fiber_integral(fiber: RationalPowerIntegrand, center: complex, radius: float) -> QuadratureResult:
    if isinstance(fiber, _ZeroIntegrand):
        return QuadratureResult(0.0, 0.0, False, 0)
    live = [g for g in fiber.G if not g.is_zero()]
    disc = Polydisc((center,), (radius,))
    poles = [] if fiber.delta == 0 else [p[0] for p in common_zeros(live, disc)]

    def log_f(z: np.ndarray) -> np.ndarray:
        return fiber.log_values(z[:, None])

    coarse = disc_integral(log_f, center, radius, poles)
    if coarse.divergent:
        return coarse
    fine = disc_integral(log_f, center, radius, poles, **REFINED_RULE)
    if fine.divergent:
        return fine
    return QuadratureResult(fine.value, abs(fine.value - coarse.value) + fine.error, False, coarse.nodes + fine.nodes)


# ##################################################################
# siu limit report
# averages A(eps) over shrinking parameter discs against the fiber
# integral at w = 0
@dataclass(frozen=True)
class SiuLimitReport:
    fiber: float
    averages: list[dict[str, float]]
    converging: bool
    measured_c: float

    def to_dict(self) -> dict:
        return {
            "fiber": self.fiber,
            "averages": self.averages,
            "converging": self.converging,
            "measured_c": self.measured_c,
        }


def siu_limit_check(
    phi: PshExpr,
    F: ComplexPoly,
    r1: float,
    eps_sequence: Sequence[float],
    tolerance: float = SIU_TOLERANCE,
) -> SiuLimitReport:
    if phi.dim != 2 or F.dim not in (1, 2):
        raise DimensionMismatchError("siu limit check handles one fiber variable and one parameter")
    F2 = F if F.dim == 2 else ComplexPoly(2, {e + (0,): c for e, c in F.terms.items()})
    phi0 = phi.restrict([0j])
    disc = Polydisc((0j,), (r1,))
    z_poles = [p[0] for p in pole_points(phi0, disc)]

    def log_fiber(z: np.ndarray) -> np.ndarray:
        pts = np.column_stack([z, np.zeros_like(z)])
        return 2 * F2.log_abs(pts) - phi.values(pts)

    fiber = disc_integral(log_fiber, 0j, r1, z_poles)
    if fiber.divergent:
        raise PreconditionError("fiber integral at w = 0 diverges")

    def log_joint(z: np.ndarray, w: np.ndarray) -> np.ndarray:
        pts = np.column_stack([z, w])
        return 2 * F2.log_abs(pts) - phi.values(pts)

    z_rule = polar_rule(0j, r1, z_poles[0] if z_poles else 0j, **SIU_Z_RULE)
    rows = []
    for eps in sorted(eps_sequence, reverse=True):
        w_rule = polar_rule(0j, eps, 0j, **SIU_W_RULE)
        joint = product_integral(log_joint, z_rule, w_rule)
        average = joint.value / (math.pi * eps**2)
        rows.append({"eps": eps, "average": average, "relative_error": abs(average - fiber.value) / fiber.value})
    last = rows[-1]["relative_error"] if rows else math.inf
    converging = last <= tolerance
    measured_c = min(r["average"] for r in rows) / fiber.value if rows else math.nan
    logger.debug("siu limit: fiber %.6g, final relative error %.3e", fiber.value, last)
    return SiuLimitReport(fiber=fiber.value, averages=rows, converging=converging, measured_c=measured_c)


# ##################################################################
# lemma nb report
# both sides of int |f|^2 e^{-2(1+eps/2) phi} <= C^{-1} int |f|^2
# e^{-2(1+eps) phi} / (-phi)^alpha with C = inf e^{eps x} / x^alpha
@dataclass(frozen=True)
class LemmaNbReport:
    constant: float
    minimiser: float
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1 + 1e-9) + 1e-300

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    def to_dict(self) -> dict:
        return {
            "constant": self.constant,
            "minimiser": self.minimiser,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "holds": self.holds,
        }


def lemma_nb_constant(eps: float, alpha: float) -> tuple[float, float]:
    x_star = max(1.0, alpha / eps)
    return math.exp(eps * x_star) / x_star**alpha, x_star


def lemma_nb_check(
    phi: PshExpr,
    f: ComplexPoly,
    eps: float,
    alpha: float,
    center: complex = 0j,
    radius: float = 1.0,
) -> LemmaNbReport:
    if phi.dim != 1 or f.dim != 1:
        raise DimensionMismatchError("the exponential bound is checked on a disc in one variable")
    if eps <= 0 or alpha < 0:
        raise PreconditionError("need eps > 0 and alpha >= 0")
    constant, x_star = lemma_nb_constant(eps, alpha)
    disc = Polydisc((center,), (radius,))
    probe = polar_rule(center, radius, center, n_theta=32, n_gl=4, depth=12).nodes[:BOUND_SAMPLES]
    if np.any(phi.values(probe[:, None]) > -1):
        raise PreconditionError("phi exceeds -1 at a sampled point")
    poles = [p[0] for p in pole_points(phi, disc)]

    def log_lhs(z: np.ndarray) -> np.ndarray:
        return 2 * f.log_abs(z[:, None]) - 2 * (1 + eps / 2) * phi.values(z[:, None])

    def log_rhs(z: np.ndarray) -> np.ndarray:
        values = phi.values(z[:, None])
        with np.errstate(divide="ignore", invalid="ignore"):
            return 2 * f.log_abs(z[:, None]) - 2 * (1 + eps) * values - alpha * np.log(-values)

    lhs = disc_integral(log_lhs, center, radius, poles)
    rhs = disc_integral(log_rhs, center, radius, poles)
    if lhs.divergent or rhs.divergent:
        raise PreconditionError("a bound integral diverges for these parameters")
    return LemmaNbReport(constant=constant, minimiser=x_star, lhs=lhs.value, rhs=rhs.value / constant)

