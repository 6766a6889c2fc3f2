from __future__ import annotations

import asyncio
import hashlib
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

from pshlab.bergman import BergmanKernelField, kernel_at, log_psh_check, pole_scan
from pshlab.counterexamples import LI_C, WangFamily, li_catalog, li_example, nonanalyticity_demo, wang_catalog
from pshlab.errors import ScenarioError
from pshlab.families import (
    ApproxFamily,
    CloudKind,
    analyticity_probe,
    containment_check,
    hoelder_propagation,
    monotonicity_in_c,
    sandwich_check,
    scan_level_set,
    xc_via_approximation,
)
from pshlab.invariants import (
    cse_bisection,
    cse_estimate,
    dim1_reciprocity_check,
    generic_restriction_check,
    lct_monomial,
    lelong_estimate,
    lelong_radial,
)
from pshlab.newton import NewtonPolyhedron
from pshlab.psh import Polydisc
from pshlab.result import TaskResult, make_failure, make_success, to_plain
from pshlab.scenario import PolySpec, Scenario, as_complex, load_scenario
from pshlab.stability import (
    StabilityHypotheses,
    find_eta,
    hypothesis_check,
    integral_family,
    lemma_nb_check,
    nondegenerate_check,
    siu_limit_check,
)

logger = logging.getLogger(__name__)

THREADS_ENV = "PSHLAB_THREADS"
DEFAULT_THREADS = 4


# ##################################################################
# task outcome
# what a handler hands back to the runner before timing is attached
@dataclass(frozen=True)
class TaskOutcome:
    payload: dict[str, Any]
    method: str | None = None
    inconclusive: bool = False
    notes: list[str] = field(default_factory=list)


# ##################################################################
# report
# per-task results in declared order; exit code 0 when every task
# succeeded conclusively, 2 otherwise
@dataclass(frozen=True)
class Report:
    schema_version: int
    seed: int
    results: list[TaskResult]

    @property
    def exit_code(self) -> int:
        if all(r.success and not r.inconclusive for r in self.results):
            return 0
        return 2

    def to_dict(self, timings: bool = False) -> dict:
        return {
            "schema_version": self.schema_version,
            "seed": self.seed,
            "results": [r.to_dict(timings=timings) for r in self.results],
        }

    def to_json(self, timings: bool = False) -> str:
        return json.dumps(self.to_dict(timings=timings), ensure_ascii=False, sort_keys=True, indent=2)


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return DEFAULT_THREADS
    try:
        return max(1, int(raw))
    except ValueError:
        logger.warning("ignoring non-integer %s=%r", THREADS_ENV, raw)
        return DEFAULT_THREADS


# ##################################################################
# task seed
# scenario seed xor a hash of the task index, independent of the order
# in which tasks are scheduled
def task_seed(seed: int, index: int) -> int:
    digest = hashlib.blake2b(str(index).encode(), digest_size=8).digest()
    return seed ^ int.from_bytes(digest, "big")


# ##################################################################
# run scenario
# tasks run in a bounded thread pool and are gathered back in declared
# order; a failing task is recorded and the run continues
async def run_scenario(source: str | Path | Scenario, threads: int | None = None) -> Report:
    scenario = source if isinstance(source, Scenario) else load_scenario(source)
    threads = threads or thread_count()
    semaphore = asyncio.Semaphore(threads)
    logger.info("running %d tasks on %d threads", len(scenario.tasks), threads)
    with ThreadPoolExecutor(max_workers=threads) as executor:
        results = await asyncio.gather(
            *(_run_task(scenario, index, task, executor, semaphore) for index, task in enumerate(scenario.tasks))
        )
    return Report(schema_version=scenario.schema_version, seed=scenario.seed, results=list(results))


async def _run_task(
    scenario: Scenario, index: int, task: Any, executor: ThreadPoolExecutor, semaphore: asyncio.Semaphore
) -> TaskResult:
    seed = task_seed(scenario.seed, index)
    name = task.label or task.op
    async with semaphore:
        start = time.monotonic()
        loop = asyncio.get_running_loop()
        try:
            outcome = await loop.run_in_executor(executor, execute_task, scenario, task, seed)
        except Exception as err:
            logger.info("task %d (%s) failed: %s", index, name, err)
            return make_failure(
                task=name, index=index, error=f"{type(err).__name__}: {err}", seed=seed, elapsed_ms=_elapsed_ms(start)
            )
    logger.info("task %d (%s) finished", index, name)
    return make_success(
        task=name,
        index=index,
        payload=to_plain(outcome.payload),
        method=outcome.method,
        seed=seed,
        elapsed_ms=_elapsed_ms(start),
        inconclusive=outcome.inconclusive,
        notes=outcome.notes,
    )


def execute_task(scenario: Scenario, task: Any, seed: int) -> TaskOutcome:
    handler = _HANDLERS.get(task.op)
    if handler is None:
        raise ScenarioError(f"unknown task {task.op!r}")
    return handler(scenario, task, seed)


# ##################################################################
# handlers
# one per task op; each builds its objects from the scenario and
# returns plain payloads
def _estimate_outcome(est: Any, **extra: Any) -> TaskOutcome:
    return TaskOutcome(payload=est.to_dict() | extra, method=str(est.method), inconclusive=est.inconclusive)


def _lelong(scenario: Scenario, task: Any, seed: int) -> TaskOutcome:
    phi = scenario.family(task.family).phi
    x = [as_complex(v) for v in task.x]
    est = lelong_estimate(phi, x, **task.options) if task.method == "auto" else lelong_radial(phi, x, **task.options)
    if task.tol is not None and est.uncertainty > task.tol:
        note = f"slope uncertainty {est.uncertainty:.3g} exceeds tolerance {task.tol:.3g}"
        return TaskOutcome(est.to_dict(), method=str(est.method), inconclusive=True, notes=[note])
    return _estimate_outcome(est)


def _cse(scenario: Scenario, task: Any, seed: int) -> TaskOutcome:
    phi = scenario.family(task.family).phi
    x = [as_complex(v) for v in task.x]
    options = {"seed": seed} | task.options
    if task.tol is not None:
        options["tol"] = task.tol
    est = cse_estimate(phi, x, **options) if task.method == "auto" else cse_bisection(phi, x, **options)
    return _estimate_outcome(est)


def _howald(scenario: Scenario, task: Any, seed: int) -> TaskOutcome:
    gens = [tuple(g) for g in task.generators]
    return _estimate_outcome(lct_monomial(NewtonPolyhedron(len(gens[0]), tuple(gens))))


def _reciprocity(scenario: Scenario, task: Any, seed: int) -> TaskOutcome:
    phi = scenario.family(task.family).phi
    report = dim1_reciprocity_check(phi, [as_complex(v) for v in task.x], seed=seed)
    return TaskOutcome(report.to_dict(), method="reciprocity", inconclusive=report.c.inconclusive)


def _restriction(scenario: Scenario, task: Any, seed: int) -> TaskOutcome:
    family = scenario.family(task.family)
    x = None if task.x is None else [as_complex(v) for v in task.x]
    tol = {} if task.tol is None else {"zero_tol": task.tol}
    report = generic_restriction_check(family, x, **tol)
    return TaskOutcome(report.to_dict(), method="howald-lp", inconclusive=report.generic is None)


def _scan(scenario: Scenario, task: Any, seed: int) -> TaskOutcome:
    family = scenario.family(task.family)
    grid = task.grid.build(family.domain)
    cloud = scan_level_set(family, task.kind, task.c, grid, seed=seed, **task.options)
    unresolved = sum(p.unresolved for p in cloud.points)
    notes = [f"{unresolved} unresolved points"] if unresolved else []
    payload: dict[str, Any] = {"cloud": cloud.to_dict()}
    if task.op == "probe":
        payload["probe"] = analyticity_probe(cloud, max_degree=task.max_degree).to_dict()
    return TaskOutcome(payload, method=f"scan-{task.kind}", inconclusive=bool(unresolved), notes=notes)


def _containment(scenario: Scenario, task: Any, seed: int) -> TaskOutcome:
    family = scenario.family(task.family)
    grid = task.grid.build(family.domain)
    inner = CloudKind(task.inner)
    outer = CloudKind.X if inner == CloudKind.E else CloudKind.Y
    a = scan_level_set(family, inner, task.c, grid, seed=seed)
    b = scan_level_set(family, outer, task.c, grid, seed=seed)
    report = containment_check(a, b)
    return TaskOutcome(report.to_dict(), method="containment", inconclusive=not report.passed)


def _bergman(scenario: Scenario, task: Any, seed: int) -> TaskOutcome:
    family = scenario.family(task.family)
    kernel = BergmanKernelField(family, task.c, degree_cap=task.degree_cap, seed=seed)
    payload: dict[str, Any] = {"c": task.c, "degree_cap": task.degree_cap}
    payload["kernel"] = [
        {"z": [as_complex(v) for v in z], "w": [as_complex(v) for v in w], "K": kernel_at(kernel, _cx(z), _cx(w))}
        for z, w in task.points
    ]
    if task.grid is not None:
        payload["pole_scan"] = pole_scan(kernel, task.grid.build(family.domain)).to_dict()
    if task.log_psh:
        payload["log_psh"] = log_psh_check(kernel, [(_cx(z), _cx(w), r) for z, w, r in task.log_psh]).to_dict()
    return TaskOutcome(payload, method="weighted-bergman")


def _cx(values: list[Any]) -> list[complex]:
    return [as_complex(v) for v in values]


def _approx_family(scenario: Scenario, task: Any, seed: int) -> ApproxFamily:
    return ApproxFamily(scenario.family(task.family), k=task.k, seed=seed)


def _sandwich(scenario: Scenario, task: Any, seed: int) -> TaskOutcome:
    fam = _approx_family(scenario, task, seed)
    report = sandwich_check(fam, _cx(task.z), _cx(task.w), seed=seed, **task.options)
    inconclusive = report.c.inconclusive or not report.holds
    return TaskOutcome(report.to_dict(), method="integrability-bisection", inconclusive=inconclusive)


def _xc_approx(scenario: Scenario, task: Any, seed: int) -> TaskOutcome:
    fam = _approx_family(scenario, task, seed)
    result = xc_via_approximation(fam, task.c, _cx(task.z), _cx(task.w), seed=seed, **task.options)
    notes = [] if result["agree"] else ["approximation disagrees with the direct lelong test"]
    return TaskOutcome(result, method="integrability-bisection", inconclusive=not result["agree"], notes=notes)


def _hoelder(scenario: Scenario, task: Any, seed: int) -> TaskOutcome:
    fam = _approx_family(scenario, task, seed)
    pairs = [(_cx(w1), _cx(w2)) for w1, w2 in task.pairs]
    result = hoelder_propagation(fam, _cx(task.z), task.xi, pairs, task.alpha)
    payload = result | {"alpha": task.alpha, "xi": task.xi}
    return TaskOutcome(payload, method="ball-supremum", inconclusive=not result["holds"])


def _monotonicity(scenario: Scenario, task: Any, seed: int) -> TaskOutcome:
    family = scenario.family(task.family)
    grid = task.grid.build(family.domain)
    report = monotonicity_in_c(family, task.kind, task.c, task.c2, grid, seed=seed, **task.options)
    return TaskOutcome(report.to_dict(), method=f"scan-{task.kind}", inconclusive=not report.passed)


def _nonanalyticity(scenario: Scenario, task: Any, seed: int) -> TaskOutcome:
    report = nonanalyticity_demo(li_example(task.depth), task.c or LI_C, task.grid)
    return TaskOutcome(report.to_dict(), method="radial-slope")


def _stability(scenario: Scenario, task: Any, seed: int) -> TaskOutcome:
    params = dict(task.params)
    check = task.check
    if check in ("siu", "nb"):
        weight = scenario.family(params.pop("weight")).phi
        poly = PolySpec.model_validate(params.pop("F" if check == "siu" else "f")).build()
        if check == "siu":
            report = siu_limit_check(weight, poly, params.pop("r1", 0.5), params.pop("eps", [1e-1, 1e-2, 1e-3]))
            return TaskOutcome(report.to_dict(), method="siu-limit", inconclusive=not report.converging)
        report = lemma_nb_check(weight, poly, params.pop("eps"), params.pop("alpha"), radius=params.pop("radius", 1.0))
        return TaskOutcome(report.to_dict(), method="bound-quadrature", inconclusive=not report.holds)
    if task.integrand is None:
        raise ScenarioError(f"stability check {check!r} needs an integrand")
    R = scenario.integrand(task.integrand)
    if check == "nondeg":
        report = nondegenerate_check(R.eps, R.delta, params.get("M", 0), params.get("N", 0))
        return TaskOutcome(report.to_dict(), method="exact-rational")
    if check == "eta":
        grid = [Fraction(str(v)) for v in params.get("grid", [])]
        eta = find_eta(R.eps, R.delta, params.get("M", 0), params.get("N", 0), grid)
        return TaskOutcome({"eta": eta}, method="exact-rational")
    if check == "hyp":
        hyp = _hypotheses(R.n, params) if "beta" in params else None
        filled = hypothesis_check(R, hyp, seed=seed)
        inconclusive = any(r.inconclusive for r in filled.results.values())
        return TaskOutcome(filled.to_dict(), method="shell-test", inconclusive=inconclusive)
    if check == "family":
        samples = [as_complex(v) for v in params.get("w", [0.0])]
        report = integral_family(R, params.get("radius", 0.5), samples, params.get("threshold", 1e-2))
        return TaskOutcome(report.to_dict(), method="polar-quadrature")
    raise ScenarioError(f"unknown stability check {check!r}")


def _hypotheses(n: int, params: dict[str, Any]) -> StabilityHypotheses:
    beta = Fraction(str(params["beta"]))
    alpha = float(params.get("alpha", 1 - beta / 2))
    q1 = Polydisc((0j,) * n, (params.get("q1", 0.75),) * n)
    q2 = Polydisc((0j,) * n, (params.get("q2", 0.5),) * n)
    return StabilityHypotheses(beta=beta, alpha=alpha, q1=q1, q2=q2, eps_radius=params.get("eps_radius", 0.5))


def _catalog(scenario: Scenario, task: Any, seed: int) -> TaskOutcome:
    if task.example == "wang":
        fam = WangFamily(task.c or 1.0, task.depth or 5)
        return TaskOutcome({"family": fam.to_dict(), "rows": wang_catalog(fam)}, method="radial-slope")
    ex = li_example(task.depth or 20)
    rows = li_catalog(ex, task.grid, task.c or 3.0)
    return TaskOutcome({"depth": ex.spec.depth, "rows": rows}, method="radial-slope")


_HANDLERS: dict[str, Callable[[Scenario, Any, int], TaskOutcome]] = {
    "lelong": _lelong,
    "cse": _cse,
    "lct": _cse,
    "howald": _howald,
    "reciprocity": _reciprocity,
    "restriction": _restriction,
    "scan": _scan,
    "probe": _scan,
    "containment": _containment,
    "bergman": _bergman,
    "sandwich": _sandwich,
    "xc-approx": _xc_approx,
    "hoelder": _hoelder,
    "monotonicity": _monotonicity,
    "nonanalyticity": _nonanalyticity,
    "stability": _stability,
    "catalog": _catalog,
}


# ##################################################################
# elapsed ms
# compute milliseconds since a monotonic start time
def _elapsed_ms(start: float) -> int:
    return int((time.monotonic() - start) * 1000)
