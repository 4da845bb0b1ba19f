"""du Val hypersurfaces in C^3: defining polynomials, charts, surface quadrature.

Integration over X = {f = 0} goes through a parametrisation p -> zeta(p) of C^2
onto (a dense open part of) X.  With J the 3x2 complex Jacobian, the induced
volume satisfies dV_X = det(J^H J) dV(p), and sums over a :class:`SampleCloud`
approximate integrals against dV_X.
"""
from __future__ import annotations

import json
import math
import os
import re
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .grassmann import Multivector, contract, wedge
from .polynomial import Polynomial

TWO_PI_I = 2j * math.pi
# |omega_X| * |df| in the induced metric (see omega_norm)
OMEGA_NORM_CONSTANT = 4 * math.pi
BRANCH_TOL = 1e-14


class SingularPointError(ValueError):
    """Raised when a quantity is requested at the singular point (df = 0)."""


class BranchLocusError(ValueError):
    """Raised when a graph chart is evaluated on its branch locus."""


@dataclass(frozen=True)
class DuValType:
    family: str
    n: int

    def __post_init__(self):
        ok = {
            "A": self.n >= 1,
            "D": self.n >= 4,
            "E": self.n in (6, 7, 8),
        }.get(self.family, False)
        if not ok:
            raise ValueError(f"invalid du Val type {self.family}{self.n}")

    @classmethod
    def parse(cls, text: str) -> "DuValType":
        m = re.fullmatch(r"\s*([ADEade])_?(\d+)\s*", text)
        if not m:
            raise ValueError(f"cannot parse du Val type {text!r}")
        return cls(m.group(1).upper(), int(m.group(2)))

    def __str__(self) -> str:
        return f"{self.family}{self.n}"


def _poly3(terms: dict[tuple[int, int, int], complex]) -> Polynomial:
    return Polynomial(3, terms)


@dataclass(frozen=True)
class Hypersurface:
    type: DuValType
    f: Polynomial
    grad: tuple[Polynomial, Polynomial, Polynomial]
    # quasi-homogeneous weights (w1, w2, w3) and degree d: f(l^w zeta) = l^d f(zeta)
    weights: tuple[int, int, int]
    qdegree: int

    def value(self, zeta):
        zeta = np.asarray(zeta)
        return self.f(zeta[..., 0], zeta[..., 1], zeta[..., 2])

    def gradient(self, zeta):
        zeta = np.asarray(zeta)
        cols = [g(zeta[..., 0], zeta[..., 1], zeta[..., 2]) for g in self.grad]
        return np.stack(np.broadcast_arrays(*cols), axis=-1).astype(complex)

    def hessian_norm(self, zeta):
        """Frobenius norm of the complex Hessian of f."""
        zeta = np.asarray(zeta)
        args = (zeta[..., 0], zeta[..., 1], zeta[..., 2])
        total = 0.0
        for i in range(3):
            for j in range(3):
                total = total + np.abs(self.grad[i].diff(j)(*args)) ** 2
        return np.sqrt(total)

    def residual_scale(self, zeta):
        return (1.0 + np.linalg.norm(np.asarray(zeta), axis=-1)) ** self.f.degree


def defining_poly(t: DuValType) -> Hypersurface:
    """Classical normal form of the du Val singularity of type ``t``."""
    n = t.n
    if t.family == "A":
        f = _poly3({(1, 1, 0): 1, (0, 0, n + 1): -1})
        w, d = (n + 1, n + 1, 2), 2 * n + 2
    elif t.family == "D":
        f = _poly3({(2, 0, 0): 1, (0, 2, 1): 1, (0, 0, n - 1): 1})
        w, d = (n - 1, n - 2, 2), 2 * n - 2
    elif n == 6:
        f = _poly3({(2, 0, 0): 1, (0, 3, 0): 1, (0, 0, 4): 1})
        w, d = (6, 4, 3), 12
    elif n == 7:
        f = _poly3({(2, 0, 0): 1, (0, 3, 0): 1, (0, 1, 3): 1})
        w, d = (9, 6, 4), 18
    else:
        f = _poly3({(2, 0, 0): 1, (0, 3, 0): 1, (0, 0, 5): 1})
        w, d = (15, 10, 6), 30
    return Hypersurface(t, f, (f.diff(0), f.diff(1), f.diff(2)), w, d)


def weighted_threshold(t: DuValType) -> Fraction:
    """Exact L^q threshold of omega_X from quasi-homogeneous scaling.

    With |omega_X| = c/|df|, a dyadic quasi-shell at scale l carries
    |omega|^2 dV ~ l^(2(sum w - d)) and |df| ~ l^(d - max w), so the integral of
    |omega|^q converges iff q < 2 + 2(sum w - d)/(d - max w).
    """
    h = defining_poly(t)
    excess = sum(h.weights) - h.qdegree
    return 2 + Fraction(2 * excess, h.qdegree - max(h.weights))


@dataclass
class SurfacePoint:
    zeta: np.ndarray
    gradient: np.ndarray
    chart_id: str
    params: np.ndarray
    weight: float = 0.0
    sheet: int = 1


def make_point(h: Hypersurface, zeta, chart_id: str = "ambient", params=None,
               weight: float = 0.0, sheet: int = 1) -> SurfacePoint:
    zeta = np.asarray(zeta, dtype=complex)
    if params is None:
        params = zeta[1:].copy()
    return SurfacePoint(zeta, h.gradient(zeta), chart_id, np.asarray(params, dtype=complex),
                        weight, sheet)


# ---------------------------------------------------------------------------
# charts

def _unit_sphere_c2(rng, size):
    x = rng.standard_normal((size, 4))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return np.stack([x[:, 0] + 1j * x[:, 1], x[:, 2] + 1j * x[:, 3]], axis=1)


def _gram_det(jac):
    a, b = jac[..., 0], jac[..., 1]
    aa = np.sum(np.abs(a) ** 2, axis=-1)
    bb = np.sum(np.abs(b) ** 2, axis=-1)
    ab = np.sum(a * np.conj(b), axis=-1)
    return aa * bb - np.abs(ab) ** 2


class CoveringChart:
    """Branched (n+1):1 covering (s, t) -> (s^(n+1), t^(n+1), s t) of A_n."""

    sheets = 1

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("A_n needs n >= 1")
        self.n = n
        self.name = f"cover-A{n}"
        self.multiplicity = n + 1

    def embed(self, p, sheet=1):
        s, t = p[..., 0], p[..., 1]
        m = self.n + 1
        zeta = np.stack([s ** m, t ** m, s * t], axis=-1)
        return zeta, np.ones(zeta.shape[:-1], dtype=bool)

    def jacobian(self, p, sheet=1):
        s, t = p[..., 0], p[..., 1]
        m = self.n + 1
        zero = np.zeros_like(s)
        ds = np.stack([m * s ** self.n, zero, t], axis=-1)
        dt = np.stack([zero, m * t ** self.n, s], axis=-1)
        return np.stack([ds, dt], axis=-1)

    def density(self, p, sheet=1):
        return (self.n + 1) ** 2 * pulled_back_grad_norm_sq(self.n, p[..., 0], p[..., 1])

    def _zeta_range(self, rho):
        """(min, max) of |zeta| over |(s, t)| = rho: |zeta|^2 = x^m + y^m + x y, x + y = rho^2."""
        m = self.n + 1
        x = np.linspace(0.0, 1.0, 2001) * rho * rho
        y = rho * rho - x
        v = np.sqrt(x ** m + y ** m + x * y)
        return float(v.min()) * (1 - 1e-6), float(v.max()) * (1 + 1e-6)

    def _solve_rho(self, target, which):
        lo, up = 0.0, 2.0
        while self._zeta_range(up)[which] < target:
            up *= 2
        for _ in range(100):
            mid = 0.5 * (lo + up)
            if self._zeta_range(mid)[which] < target:
                lo = mid
            else:
                up = mid
        return up

    def radius_bounds(self, r_in, r_out):
        """Parameter radii bracketing every preimage of r_in <= |zeta| < r_out."""
        hi = self._solve_rho(r_out, 0)
        if r_in <= 0:
            return hi * 2.0 ** -24, hi
        return min(self._solve_rho(r_in, 1) * (1 - 1e-9), hi), hi

    def orbit(self, p, sheet=1):
        m = self.n + 1
        out = []
        for k in range(m):
            lam = np.exp(2j * math.pi * k / m)
            out.append((np.array([lam * p[0], p[1] / lam]), sheet))
        return out

    def locate(self, zeta, near, sheet=1):
        """Preimage of zeta closest to ``near`` (continuation along a path)."""
        m = self.n + 1
        z1, z2, z3 = zeta
        if abs(z1) >= abs(z2):
            base = z1 ** (1.0 / m) if z1 != 0 else 0j
            cands = [base * np.exp(2j * math.pi * k / m) for k in range(m)]
            pts = [np.array([s, (z3 / s) if s != 0 else 0j]) for s in cands]
        else:
            base = z2 ** (1.0 / m)
            cands = [base * np.exp(2j * math.pi * k / m) for k in range(m)]
            pts = [np.array([(z3 / t) if t != 0 else 0j, t]) for t in cands]
        best = min(pts, key=lambda q: np.linalg.norm(q - near))
        return best, sheet


class GraphChart:
    """zeta_1 as a function of (u, v) = (zeta_2, zeta_3).

    ``kind='root'`` handles f = zeta_1^2 + g(zeta_2, zeta_3) (two sheets,
    zeta_1 = sheet * sqrt(-g)); ``kind='rational'`` handles A_n written as
    zeta_1 = zeta_3^(n+1) / zeta_2 (one sheet, singular on zeta_2 = 0).
    """

    multiplicity = 1

    def __init__(self, h: Hypersurface, kind: str | None = None):
        self.h = h
        t = h.type
        if kind is None:
            kind = "rational" if t.family == "A" else "root"
        self.kind = kind
        self.name = f"graph-{kind}-{t}"
        if kind == "root":
            if t.family == "A" or h.f.coeffs.get((2, 0, 0)) != 1:
                raise ValueError("root graph chart needs f = zeta_1^2 + g(zeta_2, zeta_3)")
            g = Polynomial(2, {(e[1], e[2]): c for e, c in h.f.coeffs.items() if e[0] == 0})
            self.g = g
            self.gu, self.gv = g.diff(0), g.diff(1)
            self.sheets = 2
        elif kind == "rational":
            if t.family != "A":
                raise ValueError("rational graph chart is for A_n")
            self.sheets = 1
        else:
            raise ValueError(kind)

    def solve(self, p, sheet=1):
        u, v = p[..., 0], p[..., 1]
        if self.kind == "root":
            gval = self.g(u, v) + 0j
            # relative to the size of g at this radius, so deep shells are not rejected
            rad = np.sqrt(np.abs(u) ** 2 + np.abs(v) ** 2)
            valid = np.abs(gval) > BRANCH_TOL * rad ** self.g.min_degree
            z1 = sheet * np.sqrt(-gval)
            safe = np.where(valid, z1, 1.0)
            du = -self.gu(u, v) / (2 * safe)
            dv = -self.gv(u, v) / (2 * safe)
            return z1, du, dv, valid
        m = self.h.type.n + 1
        valid = np.abs(u) >= BRANCH_TOL * np.sqrt(np.abs(u) ** 2 + np.abs(v) ** 2)
        su = np.where(valid, u, 1.0)
        z1 = v ** m / su
        return z1, -z1 / su, m * v ** (m - 1) / su, valid

    def embed(self, p, sheet=1):
        z1, _, _, valid = self.solve(p, sheet)
        return np.stack([z1, p[..., 0], p[..., 1]], axis=-1), valid

    def jacobian(self, p, sheet=1):
        _, du, dv, _ = self.solve(p, sheet)
        one, zero = np.ones_like(du), np.zeros_like(du)
        return np.stack([np.stack([du, one, zero], -1), np.stack([dv, zero, one], -1)], -1)

    def density(self, p, sheet=1):
        _, du, dv, _ = self.solve(p, sheet)
        return 1.0 + np.abs(du) ** 2 + np.abs(dv) ** 2

    def radius_bounds(self, r_in, r_out):
        hi = r_out
        if self.kind == "rational" or r_in <= 0:
            return hi * 2.0 ** -24, hi
        terms = [(abs(c), sum(e)) for e, c in self.g.coeffs.items()]
        bound = lambda r: r * r + sum(a * r ** k for a, k in terms) - r_in ** 2
        lo, up = 0.0, hi
        for _ in range(200):
            mid = 0.5 * (lo + up)
            if bound(mid) < 0:
                lo = mid
            else:
                up = mid
        return lo, hi

    def orbit(self, p, sheet=1):
        return [(np.asarray(p), sheet)]

    def locate(self, zeta, near=None, sheet=None):
        p = np.array([zeta[1], zeta[2]], dtype=complex)
        if self.kind == "rational":
            return p, 1
        z1, _, _, _ = self.solve(p, 1)
        return p, (1 if abs(zeta[0] - z1) <= abs(zeta[0] + z1) else -1)


def default_chart(h: Hypersurface):
    if h.type.family == "A":
        return CoveringChart(h.type.n)
    return GraphChart(h, "root")


# ---------------------------------------------------------------------------
# A_n covering

def pulled_back_grad_norm_sq(n: int, s, t):
    """pi^*|df|^2 = |s|^(2n+2) + |t|^(2n+2) + (n+1)^2 |st|^(2n)."""
    a, b = np.abs(s), np.abs(t)
    return a ** (2 * n + 2) + b ** (2 * n + 2) + (n + 1) ** 2 * (a * b) ** (2 * n)


def pullback_volume_An(n: int, s, t):
    """Density of pi^* beta^2 against dV(s,t), beta = (i/2) sum dzeta_j ^ dzetabar_j.

    beta^2 = 2 dV on a surface, so the induced dV_X pulls back to half of this.
    """
    return 2 * (n + 1) ** 2 * pulled_back_grad_norm_sq(n, s, t)


def covering_An(n: int, s: complex, t: complex) -> SurfacePoint:
    if n < 1:
        raise ValueError("A_n needs n >= 1")
    chart = CoveringChart(n)
    p = np.array([s, t], dtype=complex)
    zeta, _ = chart.embed(p)
    h = defining_poly(DuValType("A", n))
    return SurfacePoint(zeta, h.gradient(zeta), chart.name, p, float(chart.density(p)))


def graph_chart(h: Hypersurface, sheet: int, u: complex, v: complex) -> SurfacePoint:
    if h.type.family == "A":
        raise ValueError("graph_chart is for D and E types")
    chart = GraphChart(h, "root")
    p = np.array([u, v], dtype=complex)
    zeta, valid = chart.embed(p, sheet)
    if not bool(valid):
        raise BranchLocusError(f"(u, v) = ({u}, {v}) is on the branch locus")
    return SurfacePoint(zeta, h.gradient(zeta), chart.name, p, float(chart.density(p, sheet)), sheet)


# ---------------------------------------------------------------------------
# sample clouds

@dataclass
class SampleCloud:
    type: DuValType
    chart: object
    zeta: np.ndarray
    gradient: np.ndarray
    params: np.ndarray
    sheet: np.ndarray
    weight: np.ndarray
    region: tuple[float, float]
    seed: int
    drawn: int
    strata: np.ndarray = field(default=None)

    def __len__(self) -> int:
        return len(self.weight)

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weight))

    def estimate(self, values):
        """Weighted sum of per-point values and its stratified standard error.

        ``values`` has shape (N,) or (N, k); complex is fine.
        """
        values = np.asarray(values)
        w = self.weight.reshape((-1,) + (1,) * (values.ndim - 1))
        terms = w * values
        total = terms.sum(axis=0)
        var = np.zeros(total.shape)
        for s, n_s in enumerate(self._stratum_sizes()):
            if n_s < 2:
                continue
            sel = terms[self.strata == s]
            i_s = sel.sum(axis=0)
            sq = (np.abs(sel * n_s) ** 2).sum(axis=0)
            var = var + np.maximum(sq - n_s * np.abs(i_s) ** 2, 0.0) / (n_s * (n_s - 1))
        return total, np.sqrt(var)

    def _stratum_sizes(self):
        return self._sizes

    def subset(self, mask) -> "SampleCloud":
        out = SampleCloud(self.type, self.chart, self.zeta[mask], self.gradient[mask],
                          self.params[mask], self.sheet[mask], self.weight[mask],
                          self.region, self.seed, self.drawn, self.strata[mask])
        out._sizes = self._sizes
        return out

    def points(self):
        for i in range(len(self)):
            yield SurfacePoint(self.zeta[i], self.gradient[i], self.chart.name, self.params[i],
                               float(self.weight[i]), int(self.sheet[i]))


N_STRATA = 16


def _strata_edges(chart, r_in, r_out, n_strata):
    lo, hi = chart.radius_bounds(r_in, r_out)
    return np.linspace(math.log(lo), math.log(hi), n_strata + 1)


def _stratum_counts(count, n_strata):
    base, rem = divmod(count, n_strata)
    return [base + (1 if s < rem else 0) for s in range(n_strata)]


def sample_annulus(h: Hypersurface, r_inner: float, r_outer: float, count: int, seed: int,
                   chart=None, n_strata: int = N_STRATA) -> SampleCloud:
    """Weighted points on X with r_inner <= |zeta| < r_outer.

    The chart parameter radius is stratified in log scale; within a stratum the
    direction is uniform on S^3.  Weights are importance ratios
    det(J^H J) / (proposal density * draws), divided by the covering degree.
    Stratum s draws from ``default_rng([seed, s])`` so strata are independent.
    """
    if not 0 <= r_inner <= r_outer:
        raise ValueError("need 0 <= r_inner <= r_outer")
    if count < 1:
        raise ValueError("count must be positive")
    chart = chart or default_chart(h)
    n_strata = max(1, min(n_strata, count))
    if r_inner == r_outer:
        return _empty_cloud(h, chart, (r_inner, r_outer), seed, count, n_strata)
    edges = _strata_edges(chart, r_inner, r_outer, n_strata)
    counts = _stratum_counts(count, n_strata)
    chunks = []
    for s, n_s in enumerate(counts):
        if n_s == 0:
            continue
        rng = np.random.default_rng([seed, s])
        logr = rng.uniform(edges[s], edges[s + 1], n_s)
        rho = np.exp(logr)
        p = _unit_sphere_c2(rng, n_s) * rho[:, None]
        sheet = rng.choice([1, -1], n_s) if chart.sheets == 2 else np.ones(n_s, dtype=int)
        zeta = np.empty((n_s, 3), dtype=complex)
        valid = np.empty(n_s, dtype=bool)
        dens = np.empty(n_s)
        for sg in (1, -1) if chart.sheets == 2 else (1,):
            sel = sheet == sg
            zeta[sel], valid[sel] = chart.embed(p[sel], sg)
            dens[sel] = chart.density(p[sel], sg)
        r = np.linalg.norm(zeta, axis=1)
        keep = valid & (r >= r_inner) & (r < r_outer)
        q_inv = 2 * math.pi ** 2 * rho ** 4 * (edges[s + 1] - edges[s])
        w = dens * q_inv * chart.sheets / (n_s * chart.multiplicity)
        chunks.append((zeta[keep], p[keep], sheet[keep], w[keep], np.full(keep.sum(), s)))
    zeta = np.concatenate([c[0] for c in chunks])
    cloud = SampleCloud(h.type, chart, zeta, h.gradient(zeta),
                        np.concatenate([c[1] for c in chunks]),
                        np.concatenate([c[2] for c in chunks]).astype(np.int8),
                        np.concatenate([c[3] for c in chunks]),
                        (float(r_inner), float(r_outer)), int(seed), int(count),
                        np.concatenate([c[4] for c in chunks]))
    cloud._sizes = counts
    return cloud


def _empty_cloud(h, chart, region, seed, count, n_strata):
    c = SampleCloud(h.type, chart, np.zeros((0, 3), complex), np.zeros((0, 3), complex),
                    np.zeros((0, 2), complex), np.zeros(0, np.int8), np.zeros(0), region,
                    int(seed), int(count), np.zeros(0, int))
    c._sizes = _stratum_counts(count, n_strata)
    return c


# ---------------------------------------------------------------------------
# columnar cache file: magic, u32 header length, JSON header, 17 float64 columns

_MAGIC = b"DUVALSC1"


def save_cloud(cloud: SampleCloud, path) -> Path:
    path = Path(path)
    header = {
        "type": str(cloud.type),
        "chart": cloud.chart.name,
        "region": list(cloud.region),
        "seed": cloud.seed,
        "count": len(cloud),
        "drawn": cloud.drawn,
        "strata": list(cloud._sizes),
    }
    raw = json.dumps(header).encode()
    cols = [cloud.zeta.real[:, i] for i in range(3)] + [cloud.zeta.imag[:, i] for i in range(3)]
    cols += [cloud.gradient.real[:, i] for i in range(3)] + [cloud.gradient.imag[:, i] for i in range(3)]
    cols += [cloud.params.real[:, i] for i in range(2)] + [cloud.params.imag[:, i] for i in range(2)]
    cols.append(cloud.weight)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(raw)))
        fh.write(raw)
        for c in cols:
            fh.write(np.ascontiguousarray(c, dtype="<f8").tobytes())
    return path


def load_cloud(path) -> SampleCloud:
    with open(path, "rb") as fh:
        if fh.read(8) != _MAGIC:
            raise ValueError(f"{path} is not a sample-cloud cache file")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen))
        n = header["count"]
        data = np.frombuffer(fh.read(17 * 8 * n), dtype="<f8").reshape(17, n)
    t = DuValType.parse(header["type"])
    h = defining_poly(t)
    chart = default_chart(h) if header["chart"] == default_chart(h).name else GraphChart(h, "rational")
    zeta = data[0:3].T + 1j * data[3:6].T
    grad = data[6:9].T + 1j * data[9:12].T
    params = data[12:14].T + 1j * data[14:16].T
    if chart.sheets == 2:
        z1, _, _, _ = chart.solve(params, 1)
        sheet = np.where(np.abs(zeta[:, 0] - z1) <= np.abs(zeta[:, 0] + z1), 1, -1).astype(np.int8)
    else:
        sheet = np.ones(n, np.int8)
    r_in, r_out = header["region"]
    sizes = header["strata"]
    edges = _strata_edges(chart, r_in, r_out, len(sizes)) if r_out > r_in else np.zeros(2)
    strata = np.clip(np.searchsorted(edges, np.log(np.abs(np.linalg.norm(params, axis=1)) + 1e-300)) - 1,
                     0, len(sizes) - 1)
    cloud = SampleCloud(t, chart, zeta, grad, params, sheet, data[16].copy(), (r_in, r_out),
                        header["seed"], header["drawn"], strata)
    cloud._sizes = sizes
    return cloud


def cached_sample_annulus(h: Hypersurface, r_inner, r_outer, count, seed, cache_dir=None):
    """``sample_annulus`` backed by a file cache in ``cache_dir`` or $DUVAL_CACHE_DIR; uncached when neither is set."""
    cache_dir = cache_dir or os.environ.get("DUVAL_CACHE_DIR")
    if not cache_dir:
        return sample_annulus(h, r_inner, r_outer, count, seed)
    key = f"{h.type}_{r_inner:.6g}_{r_outer:.6g}_{count}_{seed}.cloud"
    path = Path(cache_dir) / key
    if path.exists():
        return load_cloud(path)
    cloud = sample_annulus(h, r_inner, r_outer, count, seed)
    path.parent.mkdir(parents=True, exist_ok=True)
    save_cloud(cloud, path)
    return cloud


# ---------------------------------------------------------------------------
# pointwise geometry

def _gradient_of(point):
    return np.asarray(point.gradient if hasattr(point, "gradient") else point)


def structure_form(h: Hypersurface, point) -> Multivector:
    """omega_X = theta _| dzeta_1^dzeta_2^dzeta_3 with theta = 2 pi i conj(df)/|df|^2 d/dzeta."""
    grad = _gradient_of(point)
    nsq = np.sum(np.abs(grad) ** 2, axis=-1)
    if np.any(nsq == 0):
        raise SingularPointError("structure form requested at a zero of df")
    theta = [TWO_PI_I * np.conj(grad[..., l]) / nsq for l in range(3)]
    return contract(theta, Multivector.gen(0) ^ Multivector.gen(1) ^ Multivector.gen(2))


def theta_field(grad):
    nsq = np.sum(np.abs(grad) ** 2, axis=-1)
    return [TWO_PI_I * np.conj(grad[..., l]) / nsq for l in range(3)]


def df_form(point) -> Multivector:
    grad = _gradient_of(point)
    return Multivector.one_form([grad[..., j] for j in range(3)], 0)


def omega_norm(h: Hypersurface, point):
    """Pointwise |omega_X| as |omega ^ df| / |df| (norms with |dzeta_I|^2 = 2^|I|).

    This reproduces the i^(n^2) omega ^ conj(omega) = |omega|^2 dV_X convention
    and equals OMEGA_NORM_CONSTANT / |df|.
    """
    om = structure_form(h, point)
    df = df_form(point)
    return wedge(om, df).norm() / df.norm()


def tangent_frame(h: Hypersurface, point):
    """Orthonormal (Hermitian) basis t1, t2 of T_p X = {v : sum f'_j v_j = 0}."""
    grad = _gradient_of(point)
    if np.any(np.linalg.norm(grad, axis=-1) == 0):
        raise SingularPointError("tangent frame requested at the singular point")
    nvec = np.conj(grad) / np.linalg.norm(grad, axis=-1, keepdims=True)
    k = np.argmin(np.abs(nvec), axis=-1)
    e = np.zeros(nvec.shape, dtype=complex)
    np.put_along_axis(e, k[..., None], 1.0, axis=-1)
    t1 = e - np.sum(e * np.conj(nvec), axis=-1, keepdims=True) * nvec
    t1 /= np.linalg.norm(t1, axis=-1, keepdims=True)
    t2 = np.conj(np.cross(nvec, t1))
    t2 /= np.linalg.norm(t2, axis=-1, keepdims=True)
    return t1, t2


def unit_normal(point):
    grad = _gradient_of(point)
    return np.conj(grad) / np.linalg.norm(grad, axis=-1, keepdims=True)


def project_along(h: Hypersurface, x, direction, iters: int = 30):
    """Solve f(x + lam * direction) = 0 for lam by Newton's method, starting at lam = 0."""
    x = np.asarray(x, dtype=complex)
    lam = np.zeros(x.shape[:-1], dtype=complex)
    for _ in range(iters):
        y = x + lam[..., None] * direction
        fv = h.value(y)
        deriv = np.sum(h.gradient(y) * direction, axis=-1)
        step = fv / deriv
        lam = lam - step
        if np.all(np.abs(step) < 1e-17 * (1 + np.abs(lam))):
            break
    return x + lam[..., None] * direction


def tangent_chart(h: Hypersurface, base, t1, t2, w):
    """Holomorphic chart w -> zeta(w) = base + w1 t1 + w2 t2 + lam(w) n around a point of X.

    n = conj(df(base))/|df(base)| is fixed and lam is found by Newton's method.
    ``base``, ``t1`` and ``t2`` may also be batches of shape (M, 3), one per row of w.
    Returns (zeta, gradient, dzeta/dw) with dzeta/dw of shape (M, 3, 2).
    """
    base = np.asarray(base, dtype=complex)
    w = np.atleast_2d(np.asarray(w, dtype=complex))
    nvec = unit_normal(h.gradient(base))
    x = base + w[:, :1] * t1 + w[:, 1:2] * t2
    zeta = project_along(h, x, nvec)
    grad = h.gradient(zeta)
    dn = np.sum(grad * nvec, axis=-1)
    cols = []
    for t in (t1, t2):
        dlam = -np.sum(grad * t, axis=-1) / dn
        cols.append(t + dlam[:, None] * nvec)
    return zeta, grad, np.stack(cols, axis=-1)
