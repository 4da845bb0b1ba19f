"""Sparse multivariate polynomials with complex coefficients."""
from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np


class Polynomial:
    """Polynomial in ``nvars`` variables stored as {exponent tuple: coefficient}."""

    __slots__ = ("nvars", "coeffs")

    def __init__(self, nvars: int, coeffs: Mapping[tuple[int, ...], complex] | None = None):
        self.nvars = nvars
        self.coeffs: dict[tuple[int, ...], complex] = {}
        for e, c in (coeffs or {}).items():
            e = tuple(int(x) for x in e)
            if len(e) != nvars:
                raise ValueError("exponent length does not match nvars")
            if c != 0:
                self.coeffs[e] = self.coeffs.get(e, 0) + c
        self.coeffs = {e: c for e, c in self.coeffs.items() if c != 0}

    @classmethod
    def monomial(cls, exps: Sequence[int], coeff: complex = 1) -> "Polynomial":
        return cls(len(exps), {tuple(exps): coeff})

    def __add__(self, other: "Polynomial") -> "Polynomial":
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out.get(e, 0) + c
        return Polynomial(self.nvars, out)

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.nvars, {e: -c for e, c in self.coeffs.items()})

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def scale(self, c: complex) -> "Polynomial":
        return Polynomial(self.nvars, {e: c * v for e, v in self.coeffs.items()})

    def __eq__(self, other) -> bool:
        return isinstance(other, Polynomial) and self.nvars == other.nvars and self.coeffs == other.coeffs

    def __repr__(self) -> str:
        return f"Polynomial({self.nvars}, {self.coeffs!r})"

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.coeffs), default=0)

    @property
    def min_degree(self) -> int:
        return min((sum(e) for e in self.coeffs), default=0)

    def diff(self, var: int) -> "Polynomial":
        out = {}
        for e, c in self.coeffs.items():
            if e[var] == 0:
                continue
            ne = list(e)
            ne[var] -= 1
            out[tuple(ne)] = out.get(tuple(ne), 0) + c * e[var]
        return Polynomial(self.nvars, out)

    def __call__(self, *xs):
        """Evaluate at numbers or broadcastable arrays, one argument per variable."""
        if len(xs) != self.nvars:
            raise ValueError(f"expected {self.nvars} arguments")
        total = 0
        powers: dict[tuple[int, int], object] = {}
        for e, c in self.coeffs.items():
            term = c
            for i, k in enumerate(e):
                if k:
                    key = (i, k)
                    if key not in powers:
                        powers[key] = xs[i] ** k
                    term = term * powers[key]
            total = total + term
        if np.isscalar(total) and xs and not np.isscalar(xs[0]):
            total = np.full(np.broadcast(*xs).shape, total, dtype=complex)
        return total

    def embed(self, positions: Iterable[int], nvars: int) -> "Polynomial":
        """Re-index variables: variable i goes to positions[i] of an nvars-variable ring."""
        positions = list(positions)
        out = {}
        for e, c in self.coeffs.items():
            ne = [0] * nvars
            for i, k in enumerate(e):
                ne[positions[i]] += k
            out[tuple(ne)] = out.get(tuple(ne), 0) + c
        return Polynomial(nvars, out)


def divided_difference(f: Polynomial, j: int) -> Polynomial:
    """Exact quotient [f(z_1..z_{j-1}, zeta_j..) - f(z_1..z_j, zeta_{j+1}..)] / (zeta_j - z_j).

    Returns a polynomial in 2m variables ordered (zeta_1..zeta_m, z_1..z_m).
    """
    m = f.nvars
    out: dict[tuple[int, ...], complex] = {}
    for e, c in f.coeffs.items():
        k = e[j]
        if k == 0:
            continue
        base = [0] * (2 * m)
        for i in range(m):
            if i < j:
                base[m + i] = e[i]
            elif i > j:
                base[i] = e[i]
        # (x^k - y^k)/(x - y) = sum_{a+b=k-1} x^a y^b
        for a in range(k):
            ne = list(base)
            ne[j] += a
            ne[m + j] += k - 1 - a
            out[tuple(ne)] = out.get(tuple(ne), 0) + c
    return Polynomial(2 * m, out)
