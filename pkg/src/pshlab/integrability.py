from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import StrEnum
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp
from scipy.stats import norm, qmc

from pshlab.errors import DegenerateInputError, DomainError
from pshlab.psh import AnalyticSingularityPsh, PshExpr

logger = logging.getLogger(__name__)

# shell ratio q below which an integral is accepted as convergent; ratios
# in [q, 1) are too close to the threshold to decide
ACCEPT_RATIO = 0.98
SAMPLES_PER_DIM = 4096
FIRST_SHELL = 4
LAST_SHELL = 27
SLAB_WIDTH = math.log(2.0)
UNIT_CLIP = 1e-12
MIN_RELATIVE_SE = 1e-6


class ShellGeometry(StrEnum):
    ANNULUS = "annulus"
    SLAB = "slab"
    AUTO = "auto"


# ##################################################################
# shell verdict
# outcome of one integrability test: the fitted shell-to-shell ratio
# and the log shell integrals it came from; convergent and inconclusive
# are never both set
@dataclass(frozen=True)
class ShellVerdict:
    convergent: bool
    ratio: float
    inconclusive: bool
    geometry: str
    log_shells: tuple[float, ...]
    samples: int

    def to_dict(self) -> dict:
        return {
            "convergent": self.convergent,
            "ratio": self.ratio,
            "inconclusive": self.inconclusive,
            "geometry": self.geometry,
            "log_shells": list(self.log_shells),
            "samples": self.samples,
        }


# ##################################################################
# choose geometry
# log-polydisc slabs when the singularity is a monomial ideal up to a
# unit at x (its locus lies in coordinate hyperplanes), euclidean
# annuli otherwise
def choose_geometry(phi: PshExpr, x: Sequence[complex]) -> ShellGeometry:
    if phi.dim == 1:
        return ShellGeometry.ANNULUS
    if isinstance(phi, AnalyticSingularityPsh):
        shifted = phi.recentered(x)
        if isinstance(shifted, AnalyticSingularityPsh) and all(
            g.dominant_monomial() is not None for g in shifted.gens
        ):
            return ShellGeometry.SLAB
    return ShellGeometry.ANNULUS


def default_samples(dim: int) -> int:
    return 1 << math.ceil(math.log2(SAMPLES_PER_DIM * dim))


# ##################################################################
# shell sampler
# fixed low-discrepancy points on shells shrinking to the origin; the
# same points serve every exponent c, so bisection compares integrals
# on common random numbers
class ShellSampler:
    def __init__(
        self,
        dim: int,
        geometry: ShellGeometry,
        r0: float,
        seed: int,
        n_samples: int | None = None,
        first: int = FIRST_SHELL,
        last: int = LAST_SHELL,
    ) -> None:
        if geometry == ShellGeometry.AUTO:
            raise DegenerateInputError("sampler needs a concrete geometry")
        if r0 <= 0:
            raise DomainError(f"shell radius must be positive, got {r0}")
        self.dim = dim
        self.geometry = geometry
        self.r0 = float(r0)
        self.seed = int(seed)
        self.n_samples = n_samples or default_samples(dim)
        self.shell_index = np.arange(first, last + 1)
        self.points: list[np.ndarray] = []
        self.log_weights: list[np.ndarray] = []
        for j in self.shell_index:
            pts, logw = self._build_shell(int(j))
            self.points.append(pts)
            self.log_weights.append(logw)

    def _unit_samples(self, j: int) -> np.ndarray:
        stream = np.random.SeedSequence(self.seed, spawn_key=(j,))
        sobol = qmc.Sobol(d=2 * self.dim + 1, scramble=True, seed=np.random.default_rng(stream))
        u = sobol.random_base2(int(math.log2(self.n_samples)))
        return np.clip(u, UNIT_CLIP, 1 - UNIT_CLIP)

    def _build_shell(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        n = self.dim
        u = self._unit_samples(j)
        count = u.shape[0]
        if self.geometry == ShellGeometry.ANNULUS:
            outer = self.r0 * 2.0 ** (-j)
            inner_frac = 2.0 ** (-2 * n)
            radius = outer * (inner_frac + u[:, 0] * (1 - inner_frac)) ** (1.0 / (2 * n))
            gauss = norm.ppf(u[:, 1:])
            gauss /= np.linalg.norm(gauss, axis=1, keepdims=True)
            real = gauss * radius[:, None]
            pts = real[:, :n] + 1j * real[:, n:]
            log_vol = n * math.log(math.pi) - math.lgamma(n + 1) + 2 * n * math.log(outer) + math.log1p(-inner_frac)
            logw = np.full(count, log_vol - math.log(count))
            return pts, logw
        # slab: y_i = r0 exp(-s_i) exp(i theta_i), j h <= |s|_1 < (j + 1) h
        lo, hi = j * SLAB_WIDTH, (j + 1) * SLAB_WIDTH
        total = (lo**n + u[:, 0] * (hi**n - lo**n)) ** (1.0 / n)
        expo = -np.log(u[:, 1 : n + 1])
        split = expo / expo.sum(axis=1, keepdims=True)
        s = split * total[:, None]
        theta = 2 * math.pi * u[:, n + 1 :]
        pts = self.r0 * np.exp(-s) * np.exp(1j * theta)
        log_vol = n * math.log(SLAB_WIDTH) + math.log((j + 1) ** n - j**n) - math.lgamma(n + 1)
        logw = n * math.log(2 * math.pi) + 2 * n * math.log(self.r0) + log_vol - 2 * s.sum(axis=1) - math.log(count)
        return pts, logw

    # ##################################################################
    # evaluate
    # a function of the relative point y on every shell
    def evaluate(self, fn: Callable[[np.ndarray], np.ndarray]) -> list[np.ndarray]:
        return [np.asarray(fn(pts), dtype=float) for pts in self.points]

    # ##################################################################
    # classify
    # fit log I_j = a + b j + q log(j + 1/2) by weighted least squares and
    # read the shell ratio e^b; ratio >= 1 means the integral diverges and
    # ratios in [ACCEPT_RATIO, 1) are left undecided
    def classify(self, log_integrand: Sequence[np.ndarray]) -> ShellVerdict:
        log_shells = []
        rel_se = []
        for values, logw in zip(log_integrand, self.log_weights):
            terms = values + logw
            with np.errstate(invalid="ignore"):
                if np.any(np.isposinf(terms)):
                    return self._verdict(math.inf, [math.inf])
                total = float(logsumexp(terms)) if np.any(np.isfinite(terms)) else -math.inf
            log_shells.append(total)
            if math.isfinite(total):
                p = np.exp(terms - total)
                spread = max(len(p) * float(np.sum(p**2)) - 1.0, 0.0)
                rel_se.append(max(math.sqrt(spread / len(p)), MIN_RELATIVE_SE))
            else:
                rel_se.append(math.inf)
        finite = np.isfinite(log_shells)
        if finite.sum() < 3:
            # integrand vanishes on the deep shells
            return self._verdict(0.0, log_shells)
        j = self.shell_index[finite].astype(float)
        y = np.asarray(log_shells)[finite]
        w = 1.0 / np.asarray(rel_se)[finite]
        design = np.column_stack([np.ones_like(j), j, np.log(j + 0.5)])
        coef, *_ = np.linalg.lstsq(design * w[:, None], y * w, rcond=None)
        ratio = float(math.exp(min(coef[1], 700.0)))
        logger.debug("shell fit %s: slope %.5f, log term %.4f, ratio %.5f", self.geometry, coef[1], coef[2], ratio)
        return self._verdict(ratio, log_shells)

    def _verdict(self, ratio: float, log_shells: Sequence[float]) -> ShellVerdict:
        return ShellVerdict(
            convergent=ratio < ACCEPT_RATIO,
            ratio=ratio,
            inconclusive=ACCEPT_RATIO <= ratio < 1.0,
            geometry=str(self.geometry),
            log_shells=tuple(float(v) for v in log_shells),
            samples=self.n_samples,
        )


# ##################################################################
# integrability probe
# phi recentered at x and evaluated once on every shell; classify(c)
# then decides whether e^{-2 c phi} (times an optional extra weight)
# is integrable near x
class IntegrabilityProbe:
    def __init__(
        self,
        phi: PshExpr,
        x: Sequence[complex],
        geometry: ShellGeometry | str = ShellGeometry.AUTO,
        r0: float = 0.5,
        seed: int = 0,
        n_samples: int | None = None,
    ) -> None:
        geometry = ShellGeometry(geometry)
        if geometry == ShellGeometry.AUTO:
            geometry = choose_geometry(phi, x)
        self.phi = phi
        self.x = [complex(v) for v in x]
        self.sampler = ShellSampler(phi.dim, geometry, r0, seed, n_samples)
        shifted = phi.recentered(self.x)
        self.phi_values = self.sampler.evaluate(shifted.values)

    @property
    def geometry(self) -> ShellGeometry:
        return self.sampler.geometry

    def classify(self, c: float, extra: Sequence[np.ndarray] | None = None) -> ShellVerdict:
        logs = []
        for idx, values in enumerate(self.phi_values):
            with np.errstate(invalid="ignore"):
                # -2c * (-inf) is +inf: the point is a pole of the weight
                part = np.where(values == -np.inf, np.inf, -2.0 * c * values)
            if extra is not None:
                with np.errstate(invalid="ignore"):
                    part = np.where(extra[idx] == -np.inf, -np.inf, part + extra[idx])
            logs.append(part)
        return self.sampler.classify(logs)
