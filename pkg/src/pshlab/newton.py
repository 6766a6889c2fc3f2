from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from pshlab.errors import DegenerateInputError, DimensionMismatchError

logger = logging.getLogger(__name__)

# float exponents (e.g. alpha = 1/9) are read back as the nearest small rational
RATIONAL_DENOMINATOR_LIMIT = 10**9


# ##################################################################
# newton polyhedron
# conv(generators) + non-negative orthant, kept as its generator list
@dataclass(frozen=True)
class NewtonPolyhedron:
    dim: int
    generators: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        gens = tuple(tuple(int(e) for e in g) for g in self.generators)
        if not gens:
            raise DegenerateInputError("newton polyhedron needs at least one generator")
        if any(len(g) != self.dim for g in gens):
            raise DimensionMismatchError(f"generator lengths differ from dim {self.dim}")
        if any(e < 0 for g in gens for e in g):
            raise DegenerateInputError("generator exponents must be non-negative")
        object.__setattr__(self, "generators", tuple(sorted(set(gens))))

    def to_dict(self) -> dict:
        return {"dim": self.dim, "generators": [list(g) for g in self.generators]}


# ##################################################################
# newton gauge
# exact 1/sup{lam : p in lam * Newt}; +inf (as None) when no positive
# multiple of the polyhedron contains p
def newton_gauge(newt: NewtonPolyhedron, p: Sequence[int | Fraction]) -> Fraction | None:
    target = [Fraction(v) for v in p]
    if len(target) != newt.dim:
        raise DimensionMismatchError(f"point has {len(target)} coordinates, polyhedron has dim {newt.dim}")
    if any(v < 0 for v in target):
        raise DegenerateInputError("gauge is defined for points of the closed orthant")
    if any(all(e == 0 for e in g) for g in newt.generators):
        return Fraction(0)
    best = _maximize_mass(newt.generators, target)
    if best == 0:
        return None
    return 1 / best


# ##################################################################
# lct value
# exact howald threshold of the monomial ideal: sup{lam : 1 in lam * Newt};
# None stands for +inf (unit ideal)
def lct_value(newt: NewtonPolyhedron) -> Fraction | None:
    gauge = newton_gauge(newt, [1] * newt.dim)
    if gauge == 0:
        return None
    return 1 / gauge


# ##################################################################
# multiplier contains
# z^k in J(c * ideal)  <=>  k + 1 in Int(c * Newt)  <=>  c * gauge(k + 1) < 1
def multiplier_contains(newt: NewtonPolyhedron, k: Sequence[int], c: float | Fraction) -> bool:
    gauge = newton_gauge(newt, [int(v) + 1 for v in k])
    if gauge is None:
        return False
    return as_fraction(c) * gauge < 1


def as_fraction(value: float | int | Fraction) -> Fraction:
    if isinstance(value, Fraction):
        return value
    return Fraction(value).limit_denominator(RATIONAL_DENOMINATOR_LIMIT)


# ##################################################################
# maximize mass
# max sum(u) s.t. sum_i u_i * g_i <= target, u >= 0, solved by an exact
# tableau simplex with bland's rule; the origin is feasible because the
# right-hand side is non-negative
def _maximize_mass(gens: Sequence[Sequence[int]], target: Sequence[Fraction]) -> Fraction:
    n_vars = len(gens)
    n_rows = len(target)
    # tableau rows: [coefficients of u | slack identity | rhs]
    tableau = []
    for j in range(n_rows):
        row = [Fraction(g[j]) for g in gens]
        row += [Fraction(1 if s == j else 0) for s in range(n_rows)]
        row.append(target[j])
        tableau.append(row)
    objective = [Fraction(-1)] * n_vars + [Fraction(0)] * n_rows + [Fraction(0)]
    basis = [n_vars + j for j in range(n_rows)]

    steps = 0
    while True:
        entering = next((col for col, v in enumerate(objective[:-1]) if v < 0), None)
        if entering is None:
            break
        ratios = [
            (row[-1] / row[entering], basis[idx], idx)
            for idx, row in enumerate(tableau)
            if row[entering] > 0
        ]
        if not ratios:
            raise DegenerateInputError("newton polyhedron LP is unbounded")
        _, _, pivot_row = min(ratios)
        _pivot(tableau, objective, pivot_row, entering)
        basis[pivot_row] = entering
        steps += 1
    logger.debug("newton LP solved in %d pivots, optimum %s", steps, objective[-1])
    return objective[-1]


# ##################################################################
# pivot
# gauss-jordan step on the tableau and the objective row
def _pivot(tableau: list[list[Fraction]], objective: list[Fraction], row: int, col: int) -> None:
    pivot = tableau[row][col]
    tableau[row] = [v / pivot for v in tableau[row]]
    for idx, other in enumerate(tableau):
        if idx != row and other[col] != 0:
            factor = other[col]
            tableau[idx] = [a - factor * b for a, b in zip(other, tableau[row])]
    factor = objective[col]
    objective[:] = [a - factor * b for a, b in zip(objective, tableau[row])]
