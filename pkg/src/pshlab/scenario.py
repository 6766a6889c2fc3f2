from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Annotated, Any, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from pshlab.counterexamples import WangFamily, li_example
from pshlab.errors import ScenarioError
from pshlab.families import GridSpec
from pshlab.poly import ComplexPoly
from pshlab.psh import (
    AnalyticSingularityPsh,
    ConstantPsh,
    Family,
    LogHoelderTerm,
    MaxPsh,
    Polydisc,
    PshExpr,
    SumPsh,
)
from pshlab.stability import RationalPowerIntegrand

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

# a complex number as a bare real or a [re, im] pair
ComplexIn = Union[float, tuple[float, float]]


def as_complex(value: ComplexIn) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    return complex(value[0], value[1])


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# ##################################################################
# polynomials
class PolyTermSpec(_Model):
    exp: list[int]
    coef: ComplexIn = 1.0


class PolySpec(_Model):
    dim: int = Field(ge=1)
    terms: list[PolyTermSpec]

    @model_validator(mode="after")
    def _exponents_fit(self) -> PolySpec:
        for t in self.terms:
            if len(t.exp) != self.dim or any(e < 0 for e in t.exp):
                raise ValueError(f"exponent {t.exp} is not a non-negative {self.dim}-tuple")
        return self

    def build(self) -> ComplexPoly:
        out: dict[tuple[int, ...], complex] = {}
        for t in self.terms:
            out[tuple(t.exp)] = out.get(tuple(t.exp), 0j) + as_complex(t.coef)
        return ComplexPoly(self.dim, out)


# ##################################################################
# expression trees
# discriminated on "kind"; the catalog kinds expand to the worked
# counterexample families
class LogSumSpec(_Model):
    kind: Literal["log-sum"]
    alpha: float = Field(gt=0)
    gens: list[PolySpec] = Field(min_length=1)

    def build(self) -> PshExpr:
        return AnalyticSingularityPsh(self.alpha, tuple(g.build() for g in self.gens))


class MaxSpec(_Model):
    kind: Literal["max"]
    args: list[ExprSpec] = Field(min_length=2)

    def build(self) -> PshExpr:
        return MaxPsh(tuple(a.build() for a in self.args))


class WeightedSpec(_Model):
    weight: float = Field(ge=0)
    expr: ExprSpec


class SumSpec(_Model):
    kind: Literal["sum"]
    terms: list[WeightedSpec] = Field(min_length=1)

    def build(self) -> PshExpr:
        return SumPsh(tuple((t.weight, t.expr.build()) for t in self.terms))


class LogHoelderSpec(_Model):
    kind: Literal["log-hoelder"]
    a: PolySpec
    b: PolySpec
    alpha: float = Field(gt=0)
    beta: float = Field(gt=0)

    def build(self) -> PshExpr:
        return LogHoelderTerm(self.a.build(), self.b.build(), self.alpha, self.beta)


class ConstSpec(_Model):
    kind: Literal["const"]
    dim: int = Field(ge=1)
    value: float

    def build(self) -> PshExpr:
        return ConstantPsh(self.dim, self.value)


class WangSpec(_Model):
    kind: Literal["wang"]
    c: float = Field(default=1.0, gt=0)
    K: int = Field(default=5, ge=1)

    def build(self) -> PshExpr:
        return WangFamily(self.c, self.K).phi


class LiSpec(_Model):
    kind: Literal["li"]
    depth: int = Field(default=20, ge=1)

    def build(self) -> PshExpr:
        return li_example(self.depth).phi


ExprSpec = Annotated[
    Union[LogSumSpec, MaxSpec, SumSpec, LogHoelderSpec, ConstSpec, WangSpec, LiSpec],
    Field(discriminator="kind"),
]

MaxSpec.model_rebuild()
WeightedSpec.model_rebuild()
SumSpec.model_rebuild()


class DomainSpec(_Model):
    center: list[ComplexIn]
    radii: list[float]

    def build(self) -> Polydisc:
        return Polydisc(tuple(as_complex(c) for c in self.center), tuple(self.radii))


class FamilySpec(_Model):
    phi: ExprSpec
    n: int = Field(ge=1)
    m: int = Field(default=0, ge=0)
    domain: DomainSpec | None = None

    def build(self, name: str) -> Family:
        phi = self.phi.build()
        domain = self.domain.build() if self.domain else Polydisc.unit(self.n + self.m)
        return Family(phi, self.n, self.m, domain, name)


class IntegrandSpec(_Model):
    F: list[PolySpec] = Field(min_length=1)
    G: list[PolySpec] = Field(min_length=1)
    eps: float = Field(default=2.0, ge=0)
    delta: float = Field(ge=0)
    n: int = Field(default=1, ge=1)
    m: int = Field(default=1, ge=0)

    def build(self) -> RationalPowerIntegrand:
        return RationalPowerIntegrand(
            tuple(f.build() for f in self.F), tuple(g.build() for g in self.G), self.eps, self.delta, self.n, self.m
        )


class GridSpecIn(_Model):
    axes: list[list[ComplexIn]] | None = None
    points: int = Field(default=41, ge=1)
    shrink: float = Field(default=0.95, gt=0, le=1)

    def build(self, domain: Polydisc) -> GridSpec:
        if self.axes is not None:
            return GridSpec(tuple(tuple(as_complex(v) for v in axis) for axis in self.axes))
        return GridSpec.box(domain, self.points, self.shrink)


# ##################################################################
# tasks
# discriminated on "op"; every task names a family or integrand
# declared at the top of the scenario
class _Task(_Model):
    label: str | None = None


class LelongTask(_Task):
    op: Literal["lelong"]
    family: str
    x: list[ComplexIn]
    method: Literal["auto", "radial"] = "auto"
    # largest slope uncertainty still reported as conclusive
    tol: float | None = Field(default=None, gt=0)
    options: dict[str, Any] = Field(default_factory=dict)


class CseTask(_Task):
    op: Literal["cse", "lct"]
    family: str
    x: list[ComplexIn]
    method: Literal["auto", "bisection"] = "auto"
    # bisection bracket width
    tol: float | None = Field(default=None, gt=0)
    options: dict[str, Any] = Field(default_factory=dict)


class HowaldTask(_Task):
    op: Literal["howald"]
    generators: list[list[int]] = Field(min_length=1)


class ReciprocityTask(_Task):
    op: Literal["reciprocity"]
    family: str
    x: list[ComplexIn]


class RestrictionTask(_Task):
    op: Literal["restriction"]
    family: str
    x: list[ComplexIn] | None = None
    # relative size below which a parameter coefficient counts as zero
    tol: float | None = Field(default=None, gt=0)


class ScanTask(_Task):
    op: Literal["scan"]
    family: str
    kind: Literal["E", "X", "F", "Y"]
    c: float = Field(gt=0)
    grid: GridSpecIn = Field(default_factory=GridSpecIn)
    options: dict[str, Any] = Field(default_factory=dict)


class ProbeTask(ScanTask):
    op: Literal["probe"]
    max_degree: int = Field(default=10, ge=1)


class ContainmentTask(_Task):
    op: Literal["containment"]
    family: str
    inner: Literal["E", "F"]
    c: float = Field(gt=0)
    grid: GridSpecIn = Field(default_factory=GridSpecIn)


class BergmanTask(_Task):
    op: Literal["bergman"]
    family: str
    c: float = Field(gt=0)
    points: list[tuple[list[ComplexIn], list[ComplexIn]]] = Field(default_factory=list)
    grid: GridSpecIn | None = None
    degree_cap: int = Field(default=8, ge=0)
    log_psh: list[tuple[list[ComplexIn], list[ComplexIn], float]] = Field(default_factory=list)


# ##################################################################
# approximation tasks
# phi_k is the ball supremum of the fiber function with k extra
# variables; z and w split a point into fiber and parameter coordinates
class _ApproxTask(_Task):
    family: str
    k: int = Field(default=1, ge=1)
    z: list[ComplexIn]
    w: list[ComplexIn] = Field(default_factory=list)
    options: dict[str, Any] = Field(default_factory=dict)


class SandwichTask(_ApproxTask):
    op: Literal["sandwich"]


class XcApproxTask(_ApproxTask):
    op: Literal["xc-approx"]
    c: float = Field(gt=0)


class HoelderTask(_ApproxTask):
    op: Literal["hoelder"]
    xi: float = Field(default=0.1, ge=0)
    pairs: list[tuple[list[ComplexIn], list[ComplexIn]]] = Field(min_length=1)
    alpha: float = Field(default=1.0, gt=0, le=1)


class MonotonicityTask(_Task):
    op: Literal["monotonicity"]
    family: str
    kind: Literal["E", "X", "F", "Y"]
    c: float = Field(gt=0)
    c2: float = Field(gt=0)
    grid: GridSpecIn = Field(default_factory=GridSpecIn)
    options: dict[str, Any] = Field(default_factory=dict)


class NonanalyticityTask(_Task):
    op: Literal["nonanalyticity"]
    depth: int = Field(default=20, ge=1)
    c: float | None = Field(default=None, gt=0)
    grid: list[float] | None = None


class StabilityTask(_Task):
    op: Literal["stability"]
    integrand: str | None = None
    check: Literal["nondeg", "eta", "hyp", "family", "siu", "nb"]
    params: dict[str, Any] = Field(default_factory=dict)


class CatalogTask(_Task):
    op: Literal["catalog"]
    example: Literal["wang", "li"]
    c: float | None = None
    depth: int | None = None
    grid: list[float] | None = None


TaskSpec = Annotated[
    Union[
        LelongTask,
        CseTask,
        HowaldTask,
        ReciprocityTask,
        RestrictionTask,
        ScanTask,
        ProbeTask,
        ContainmentTask,
        BergmanTask,
        SandwichTask,
        XcApproxTask,
        HoelderTask,
        MonotonicityTask,
        NonanalyticityTask,
        StabilityTask,
        CatalogTask,
    ],
    Field(discriminator="op"),
]


class OutputSpec(_Model):
    json_path: str | None = Field(default=None, alias="json")
    csv_path: str | None = Field(default=None, alias="csv")


# ##################################################################
# scenario
# families, integrands, tasks, seed and outputs; a scenario plus its
# seed reproduces every number in the report
class Scenario(_Model):
    schema_version: int
    seed: int = Field(default=0, ge=0)
    families: dict[str, FamilySpec] = Field(default_factory=dict)
    integrands: dict[str, IntegrandSpec] = Field(default_factory=dict)
    tasks: list[TaskSpec] = Field(default_factory=list)
    outputs: OutputSpec = Field(default_factory=OutputSpec)

    @field_validator("schema_version")
    @classmethod
    def _known_version(cls, version: int) -> int:
        if version != SCHEMA_VERSION:
            raise ValueError(f"schema version {version} is not supported (expected {SCHEMA_VERSION})")
        return version

    def family(self, name: str) -> Family:
        if name not in self.families:
            raise ScenarioError(f"unknown family {name!r}")
        return self.families[name].build(name)

    def integrand(self, name: str) -> RationalPowerIntegrand:
        if name not in self.integrands:
            raise ScenarioError(f"unknown integrand {name!r}")
        return self.integrands[name].build()


# ##################################################################
# parse scenario
# json syntax errors keep their line and column; schema errors name the
# offending field
def parse_scenario(text: str) -> Scenario:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ScenarioError(f"malformed JSON: {err.msg}", line=err.lineno, column=err.colno) from err
    try:
        return Scenario.model_validate(raw)
    except ValidationError as err:
        first = err.errors()[0]
        where = ".".join(str(p) for p in first["loc"])
        raise ScenarioError(f"invalid scenario at {where or '<root>'}: {first['msg']}") from err


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ScenarioError(f"cannot read scenario {path}: {err}") from err
    logger.debug("loaded scenario %s", path)
    return parse_scenario(text)
