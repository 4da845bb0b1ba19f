"""Exact arithmetic on the resolution graphs of the ADE surface singularities.

Nodes are ordered chain first, then the branch node(s).  For D_n the chain is
v_1 .. v_{n-2} and the two fork tips come last; for E_n the chain has n - 1 nodes
and the branch node hangs off the third chain node.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from .variety import DuValType


@dataclass(frozen=True)
class Divisor:
    coefficients: tuple[int, ...]

    def __add__(self, other: "Divisor") -> "Divisor":
        return Divisor(tuple(a + b for a, b in zip(self.coefficients, other.coefficients)))

    def __sub__(self, other: "Divisor") -> "Divisor":
        return Divisor(tuple(a - b for a, b in zip(self.coefficients, other.coefficients)))

    def __rmul__(self, k: int) -> "Divisor":
        return Divisor(tuple(k * a for a in self.coefficients))

    def __len__(self) -> int:
        return len(self.coefficients)


@dataclass(frozen=True)
class ResolutionGraph:
    type: DuValType
    multiplicities: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]

    @property
    def size(self) -> int:
        return len(self.multiplicities)

    def pairing(self, i: int, j: int) -> int:
        if i == j:
            return -2
        return 1 if (i, j) in self.edges or (j, i) in self.edges else 0

    def matrix(self) -> list[list[int]]:
        return [[self.pairing(i, j) for j in range(self.size)] for i in range(self.size)]

    def node(self, i: int) -> Divisor:
        return Divisor(tuple(int(k == i) for k in range(self.size)))

    def reduced(self) -> Divisor:
        """E: every exceptional curve with multiplicity one."""
        return Divisor((1,) * self.size)


def _chain(n: int):
    return [(i, i + 1) for i in range(n - 1)]


_E_MULT = {6: (1, 2, 3, 2, 1, 2), 7: (2, 3, 4, 3, 2, 1, 2), 8: (2, 4, 6, 5, 4, 3, 2, 3)}

# star labelling of E_n: Z0 is the trivalent node, Z1, Z2 the short arm outward,
# Z3 the branch node, Z4 .. the long arm outward.  Maps label -> node position.
_E_STAR = {
    6: {0: 2, 1: 1, 2: 0, 3: 5, 4: 3, 5: 4},
    7: {0: 2, 1: 1, 2: 0, 3: 6, 4: 3, 5: 4, 6: 5},
    8: {0: 2, 1: 1, 2: 0, 3: 7, 4: 3, 5: 4, 6: 5, 7: 6},
}


def resolution_graph(t: DuValType | str) -> ResolutionGraph:
    if isinstance(t, str):
        t = DuValType.parse(t)
    n = t.n
    if t.family == "A":
        mult, edges = (1,) * n, _chain(n)
    elif t.family == "D":
        mult = (1,) + (2,) * (n - 3) + (1, 1)
        edges = _chain(n - 2) + [(n - 3, n - 2), (n - 3, n - 1)]
    else:
        mult = _E_MULT[n]
        edges = _chain(n - 1) + [(2, n - 1)]
    return ResolutionGraph(t, mult, tuple(edges))


def fundamental_cycle(t: DuValType | str) -> Divisor:
    return Divisor(resolution_graph(t).multiplicities)


def star_cycle(t: DuValType | str, coeffs: dict[int, int]) -> Divisor:
    """Divisor on an E_n graph given by star labels {label: coefficient}."""
    g = resolution_graph(t)
    if g.type.family != "E":
        raise ValueError("star labelling is defined for E types only")
    out = [0] * g.size
    for label, c in coeffs.items():
        out[_E_STAR[g.type.n][label]] = c
    return Divisor(tuple(out))


def intersect(g: ResolutionGraph, a: Divisor, b: Divisor) -> int:
    if len(a) != g.size or len(b) != g.size:
        raise ValueError("divisor length does not match the graph")
    total = 0
    for i, ai in enumerate(a.coefficients):
        if ai:
            for j, bj in enumerate(b.coefficients):
                if bj:
                    total += ai * bj * g.pairing(i, j)
    return total


def z_minus_e(t: DuValType | str) -> Divisor:
    g = resolution_graph(t)
    return fundamental_cycle(g.type) - g.reduced()


def z_minus_e_self_intersection(t: DuValType | str) -> int:
    g = resolution_graph(t)
    d = z_minus_e(g.type)
    return intersect(g, d, d)


def chi_offset(t: DuValType | str) -> int:
    """chi(O_M) - chi(O_M(Z - E)) by Riemann-Roch, using (Z - E).K = 0 on a crepant resolution."""
    s = z_minus_e_self_intersection(t)
    if s % 2:
        raise ArithmeticError("odd self-intersection on an even lattice")
    return -s // 2


def q_bound(t: DuValType | str) -> Fraction:
    """2 + 2/m with m the largest multiplicity of the fundamental cycle."""
    return 2 + Fraction(2, max(fundamental_cycle(t).coefficients))


def solvability_verdict(t: DuValType | str) -> str:
    return "obstructed" if chi_offset(t) != 0 else "unobstructed"


def leading_minors(g: ResolutionGraph) -> list[int]:
    """Leading principal minors of the intersection matrix, by exact Gaussian elimination."""
    m = [[Fraction(x) for x in row] for row in g.matrix()]
    n = len(m)
    minors, det = [], Fraction(1)
    for k in range(n):
        piv = m[k][k]
        if piv == 0:
            raise ArithmeticError("zero pivot")
        det *= piv
        minors.append(int(det))
        for i in range(k + 1, n):
            f = m[i][k] / piv
            if f:
                for j in range(k, n):
                    m[i][j] -= f * m[k][j]
    return minors


def is_negative_definite(g: ResolutionGraph) -> bool:
    return all((d < 0) if k % 2 == 0 else (d > 0) for k, d in enumerate(leading_minors(g)))


def report(t: DuValType | str) -> dict:
    g = resolution_graph(t)
    return {
        "type": str(g.type),
        "multiplicities": list(g.multiplicities),
        "z_minus_e_squared": z_minus_e_self_intersection(g.type),
        "chi_offset": chi_offset(g.type),
        "q_bound": str(q_bound(g.type)),
        "verdict": solvability_verdict(g.type),
    }


def report_json(types) -> str:
    return json.dumps([report(t) for t in types], indent=2)
