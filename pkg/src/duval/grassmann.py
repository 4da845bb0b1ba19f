"""Pointwise exterior algebra over anticommuting differentials.

A :class:`Multivector` maps generator subsets (bit masks) to complex
coefficients.  Coefficients may be scalars or numpy arrays; arrays broadcast,
so one multivector can carry the values of a form at many points at once.

Generator bits follow the canonical order used for signs::

    0..2   dzeta_1..3        (holomorphic in zeta)
    3..5   dzetabar_1..3
    6..8   dzbar_1..3
    9..12  du, dv, dubar, dvbar   (chart differentials, for pullbacks)
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping

import numpy as np

HOLO = "holo"
ANTI_ZETA = "anti-zeta"
ANTI_Z = "anti-z"

_KIND_OFFSET = {HOLO: 0, ANTI_ZETA: 3, ANTI_Z: 6}

DU, DV, DUBAR, DVBAR = 9, 10, 11, 12

HOLO_MASK = 0b000_000_111
ANTI_ZETA_MASK = 0b000_111_000
ANTI_Z_MASK = 0b111_000_000
CHART_MASK = 0b1111 << 9


@dataclass(frozen=True, order=True)
class Generator:
    """One of the nine differentials dzeta_i, dzetabar_i, dzbar_i (i = 1, 2, 3)."""

    kind: str
    index: int

    def __post_init__(self):
        if self.kind not in _KIND_OFFSET:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.index not in (1, 2, 3):
            raise ValueError("generator index must be 1, 2 or 3")

    @property
    def bit(self) -> int:
        return _KIND_OFFSET[self.kind] + self.index - 1


def generators() -> list[Generator]:
    """All nine generators in canonical order."""
    return [Generator(k, i) for k in (HOLO, ANTI_ZETA, ANTI_Z) for i in (1, 2, 3)]


def popcount(mask: int) -> int:
    return bin(mask).count("1")


@lru_cache(maxsize=None)
def wedge_sign(a: int, b: int) -> int:
    """Sign of reordering the concatenation of sorted subsets a, b into canonical order."""
    if a & b:
        return 0
    swaps = 0
    bb = b
    while bb:
        low = bb & -bb
        # generators of a that sit after this generator of b
        swaps += popcount(a & ~((low << 1) - 1))
        bb ^= low
    return -1 if swaps & 1 else 1


def _is_zero(c) -> bool:
    if np.isscalar(c):
        return c == 0
    return not np.any(c)


class Multivector:
    """Element of the exterior algebra with (possibly batched) complex coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[int, object] | None = None):
        clean = {}
        for mask, c in (terms or {}).items():
            if not _is_zero(c):
                clean[int(mask)] = c
        self.terms: dict[int, object] = clean

    # construction helpers
    @classmethod
    def scalar(cls, c) -> "Multivector":
        return cls({0: c})

    @classmethod
    def gen(cls, bit: int, c=1.0) -> "Multivector":
        return cls({1 << bit: c})

    @classmethod
    def one_form(cls, coeffs, offset: int) -> "Multivector":
        """sum_j coeffs[j] * generator(offset + j)."""
        return cls({1 << (offset + j): c for j, c in enumerate(coeffs)})

    # algebra
    def __add__(self, other: "Multivector") -> "Multivector":
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out[m] + c if m in out else c
        return Multivector(out)

    def __neg__(self) -> "Multivector":
        return Multivector({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "Multivector") -> "Multivector":
        return self + (-other)

    def scale(self, c) -> "Multivector":
        return Multivector({m: c * v for m, v in self.terms.items()})

    def __mul__(self, c) -> "Multivector":
        return self.scale(c)

    __rmul__ = __mul__

    def __xor__(self, other: "Multivector") -> "Multivector":
        return wedge(self, other)

    def __repr__(self) -> str:
        parts = [f"{m:#b}: {c!r}" for m, c in sorted(self.terms.items())]
        return "Multivector({" + ", ".join(parts) + "})"

    def __getitem__(self, mask: int):
        return self.terms.get(mask, 0.0)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def degrees(self) -> set[int]:
        return {popcount(m) for m in self.terms}

    @property
    def degree(self) -> int:
        """Degree of a homogeneous element (0 for the zero element)."""
        d = self.degrees()
        if len(d) > 1:
            raise ValueError("multivector is not homogeneous")
        return d.pop() if d else 0

    def norm(self):
        """Pointwise norm with |dx_I|^2 = 2^|I| for every basis monomial."""
        total = 0.0
        for m, c in self.terms.items():
            total = total + (2.0 ** popcount(m)) * np.abs(c) ** 2
        return np.sqrt(total)

    def max_abs(self):
        out = 0.0
        for c in self.terms.values():
            out = np.maximum(out, np.abs(c))
        return out

    def take(self, index) -> "Multivector":
        """Select batch entries (coefficients that are scalars are kept as is)."""
        return Multivector(
            {m: (c if np.isscalar(c) else np.asarray(c)[index]) for m, c in self.terms.items()}
        )


def wedge(a: Multivector, b: Multivector) -> Multivector:
    out: dict[int, object] = {}
    for ma, ca in a.terms.items():
        for mb, cb in b.terms.items():
            s = wedge_sign(ma, mb)
            if s == 0:
                continue
            m = ma | mb
            v = ca * cb if s > 0 else -(ca * cb)
            out[m] = out[m] + v if m in out else v
    return Multivector(out)


def wedge_all(*items: Multivector) -> Multivector:
    out = Multivector.scalar(1.0)
    for x in items:
        out = wedge(out, x)
    return out


def contract(v, a: Multivector) -> Multivector:
    """Interior product with sum_i v_i d/dzeta_i (anti-derivation of degree -1)."""
    out: dict[int, object] = {}
    for m, c in a.terms.items():
        for i in range(3):
            bit = 1 << i
            if not m & bit:
                continue
            vi = v[i]
            if np.isscalar(vi) and vi == 0:
                continue
            sign = -1 if popcount(m & (bit - 1)) & 1 else 1
            nm = m ^ bit
            val = vi * c if sign > 0 else -(vi * c)
            out[nm] = out[nm] + val if nm in out else val
    return Multivector(out)


def substitute(a: Multivector, rules: Mapping[int, Multivector]) -> Multivector:
    """Algebra homomorphism sending generator bit -> degree-1 multivector.

    Generators without a rule are left unchanged.
    """
    out = Multivector()
    cache: dict[int, Multivector] = {}
    for m, c in a.terms.items():
        img = Multivector.scalar(c)
        bits = m
        while bits:
            low = bits & -bits
            bit = low.bit_length() - 1
            rule = rules.get(bit)
            if rule is None:
                rule = cache.setdefault(bit, Multivector.gen(bit))
            img = wedge(img, rule)
            if img.is_zero:
                break
            bits ^= low
        out = out + img
    return out


def tri_degree(mask: int) -> tuple[int, int, int]:
    return (
        popcount(mask & HOLO_MASK),
        popcount(mask & ANTI_ZETA_MASK),
        popcount(mask & ANTI_Z_MASK),
    )


def component(a: Multivector, p: int | None, q: int | None, r: int | None) -> Multivector:
    """Projection onto (zeta-holo, zeta-anti, z-anti) degree; ``None`` matches anything."""
    keep = {}
    for m, c in a.terms.items():
        d = tri_degree(m)
        if (p is None or d[0] == p) and (q is None or d[1] == q) and (r is None or d[2] == r):
            keep[m] = c
    return Multivector(keep)
