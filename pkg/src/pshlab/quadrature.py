from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from pshlab.errors import DomainError

logger = logging.getLogger(__name__)

N_THETA = 64
N_GL = 8
DEPTH = 40
# panel-to-panel ratio at or above which the radial tail is not summable
TAIL_DIVERGENCE_RATIO = 0.98

LogIntegrand = Callable[[np.ndarray], np.ndarray]


# ##################################################################
# quadrature result
# integral value with an error estimate; divergent results carry
# value +inf
@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error: float
    divergent: bool
    nodes: int

    def to_dict(self) -> dict:
        return {"value": self.value, "error": self.error, "divergent": self.divergent, "nodes": self.nodes}


# ##################################################################
# polar rule
# nodes and weights for the disc |z - center| < radius in polar
# coordinates around pole: periodic trapezoid in angle, gauss-legendre
# on dyadic radial panels shrinking to the pole
@dataclass(frozen=True)
class PolarRule:
    nodes: np.ndarray
    log_weights: np.ndarray
    panel: np.ndarray
    depth: int


def polar_rule(
    center: complex,
    radius: float,
    pole: complex,
    n_theta: int = N_THETA,
    n_gl: int = N_GL,
    depth: int = DEPTH,
) -> PolarRule:
    offset = complex(pole) - complex(center)
    if abs(offset) >= radius:
        raise DomainError(f"pole {pole} is not inside the disc of radius {radius} about {center}")
    theta = 2 * math.pi * (np.arange(n_theta) + 0.5) / n_theta
    direction = np.exp(1j * theta)
    proj = (np.conj(offset) * direction).real
    rho_max = -proj + np.sqrt(proj**2 + radius**2 - abs(offset) ** 2)
    x, w = np.polynomial.legendre.leggauss(n_gl)
    t = (x + 1) / 2
    wt = w / 2
    nodes, logw, panel = [], [], []
    for k in range(depth):
        lo = rho_max * 2.0 ** (-k - 1)
        hi = rho_max * 2.0 ** (-k)
        rho = lo[:, None] + (hi - lo)[:, None] * t[None, :]
        jac = (hi - lo)[:, None] * wt[None, :] * rho * (2 * math.pi / n_theta)
        nodes.append((complex(pole) + rho * direction[:, None]).ravel())
        logw.append(np.log(jac).ravel())
        panel.append(np.full(rho.size, k))
    return PolarRule(np.concatenate(nodes), np.concatenate(logw), np.concatenate(panel), depth)


# ##################################################################
# disc integral
# integral over a disc of exp(log_f) for a non-negative integrand given
# in log form; a partition of unity splits the disc among the poles and
# each piece is integrated in polar coordinates around its pole, with a
# geometric extrapolation of the unresolved radial tail
def disc_integral(
    log_f: LogIntegrand,
    center: complex,
    radius: float,
    poles: Sequence[complex] = (),
    n_theta: int = N_THETA,
    n_gl: int = N_GL,
    depth: int = DEPTH,
) -> QuadratureResult:
    inside = _dedupe([complex(p) for p in poles if abs(complex(p) - complex(center)) < radius])
    if not inside:
        inside = [complex(center)]
    total = 0.0
    err = 0.0
    count = 0
    for p in inside:
        rule = polar_rule(center, radius, p, n_theta, n_gl, depth)
        with np.errstate(divide="ignore", invalid="ignore"):
            logv = np.asarray(log_f(rule.nodes), dtype=float) + rule.log_weights
            logv = logv + _log_partition(rule.nodes, p, inside)
        if np.any(np.isposinf(logv)) or np.any(np.isnan(logv)):
            return QuadratureResult(math.inf, math.inf, True, count + rule.nodes.size)
        sums = np.bincount(rule.panel, weights=np.exp(logv), minlength=depth)
        count += rule.nodes.size
        value, tail, divergent = _sum_with_tail(sums)
        if divergent:
            logger.debug("radial tail at pole %s does not decay", p)
            return QuadratureResult(math.inf, math.inf, True, count)
        total += value
        err += abs(tail)
    return QuadratureResult(total, err + 1e-14 * abs(total), False, count)


def _dedupe(points: list[complex]) -> list[complex]:
    out: list[complex] = []
    for p in points:
        if all(abs(p - q) > 1e-12 for q in out):
            out.append(p)
    return out


# ##################################################################
# log partition
# log psi_p with psi_p = prod_{q != p} |z - q|^2 / sum_p' prod_{q != p'} |z - q|^2
def _log_partition(z: np.ndarray, p: complex, poles: list[complex]) -> np.ndarray:
    if len(poles) == 1:
        return np.zeros(z.shape)
    logs = np.log(np.abs(z[None, :] - np.asarray(poles)[:, None]))
    total = logs.sum(axis=0)
    others = 2 * (total[None, :] - logs)
    own = poles.index(p)
    return others[own] - logsumexp(others, axis=0)


def _sum_with_tail(sums: np.ndarray) -> tuple[float, float, bool]:
    body = float(sums.sum())
    last, prev = float(sums[-1]), float(sums[-2])
    if last <= 1e-16 * max(body, 1e-300):
        return body, 0.0, False
    ratio = last / prev if prev > 0 else math.inf
    if ratio >= TAIL_DIVERGENCE_RATIO:
        return math.inf, math.inf, True
    tail = last * ratio / (1 - ratio)
    return body + tail, tail, False


# ##################################################################
# product integral
# integral of exp(log_f(z, w)) over a product of two discs, each
# handled by a polar rule around its own pole; used for fiber averages
# with coarser rules than the one-variable case
def product_integral(
    log_f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    z_rule: PolarRule,
    w_rule: PolarRule,
) -> QuadratureResult:
    total = 0.0
    for w_node, w_logw in zip(w_rule.nodes, w_rule.log_weights):
        with np.errstate(divide="ignore", invalid="ignore"):
            logv = np.asarray(log_f(z_rule.nodes, np.full(z_rule.nodes.shape, w_node)), dtype=float)
        if np.any(np.isposinf(logv)):
            return QuadratureResult(math.inf, math.inf, True, z_rule.nodes.size * w_rule.nodes.size)
        total += float(np.exp(logsumexp(logv + z_rule.log_weights) + w_logw))
    return QuadratureResult(total, math.nan, False, z_rule.nodes.size * w_rule.nodes.size)
