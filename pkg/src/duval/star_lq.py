"""Cut-off family mu_k, the boundary integrals I_k, L^q thresholds of omega_X, scaling fits."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .grassmann import Multivector, wedge
from .operators import (FormField, QuadratureConfig, choose_local_radius, restrict_top,
                        singular_parts)
from .variety import (OMEGA_NORM_CONSTANT, DuValType, Hypersurface, SampleCloud,
                      sample_annulus, structure_form, tangent_frame, weighted_threshold)

# |dbar mu_k| <= DBAR_MU_CONSTANT / (|zeta| |log |zeta||) in the 2^r-weighted norm:
# |rho'| <= 2, |r'| <= 1 and |dbar |zeta|| = 1/sqrt(2).
DBAR_MU_CONSTANT = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# cut-off family

def _quintic(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10 - 15 * t + 6 * t * t)


def _quintic_d(t):
    inside = (t > 0) & (t < 1)
    t = np.clip(t, 0.0, 1.0)
    return np.where(inside, 30 * t * t * (1 - t) ** 2, 0.0)


def _cubic(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3 - 2 * t)


def _cubic_d(t):
    inside = (t > 0) & (t < 1)
    t = np.clip(t, 0.0, 1.0)
    return np.where(inside, 6 * t * (1 - t), 0.0)


_PROFILES = {"quintic": (_quintic, _quintic_d), "cubic": (_cubic, _cubic_d)}


def radial_r(x):
    """Smooth increasing r(x): x on [0, 1/4], 1/2 on [3/4, inf), with r' = 1 - S((x - 1/4)/(1/2))."""
    x = np.asarray(x, dtype=float)
    t = np.clip((x - 0.25) / 0.5, 0.0, 1.0)
    tail = 0.25 + 0.5 * (t - 2.5 * t ** 4 + 3 * t ** 5 - t ** 6)
    val = np.where(x <= 0.25, x, tail)
    der = np.where(x <= 0.25, 1.0, 1.0 - _quintic(t))
    return val, der


@dataclass(frozen=True)
class CutoffFamily:
    """mu_k(zeta) = rho_k(log(-log r(|zeta|))), rho_k = 1 - S(x - k) with S a smoothstep.

    ``profile`` selects S: 'quintic' (|rho'| <= 15/8) or 'cubic' (|rho'| <= 3/2);
    both are admissible (|rho'| <= 2).
    """

    k: int
    profile: str = "quintic"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        if self.profile not in _PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}")

    def rho(self, x):
        s, ds = _PROFILES[self.profile]
        # the polynomial overshoots 1 by an ulp near the inner edge
        return np.clip(1.0 - s(np.asarray(x) - self.k), 0.0, 1.0), -ds(np.asarray(x) - self.k)

    @property
    def shell(self) -> tuple[float, float]:
        """[exp(-e^(k+1)), exp(-e^k)]: the only place where dbar mu_k is nonzero."""
        return math.exp(-math.exp(self.k + 1)), math.exp(-math.exp(self.k))


def mu_k(c: CutoffFamily, zeta):
    """(mu_k, ambient dbar coefficients) at zeta of shape (..., 3)."""
    zeta = np.asarray(zeta, dtype=complex)
    x = np.linalg.norm(zeta, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        r, dr = radial_r(x)
        lg = np.where(x > 0, -np.log(np.where(r > 0, r, 1.0)), np.inf)
        L = np.log(lg)
        val, drho = c.rho(L)
        val = np.where(x > 0, val, 0.0)
        dL = np.where(x > 0, -dr / (np.where(r > 0, r, 1.0) * lg), 0.0)
        # dbar |zeta| = sum_j zeta_j dzetabar_j / (2 |zeta|)
        scale = np.where(x > 0, drho * dL / (2 * np.where(x > 0, x, 1.0)), 0.0)
    return val, scale[..., None] * zeta


def dbar_mu_norm(c: CutoffFamily, zeta):
    _, d = mu_k(c, zeta)
    return np.sqrt(2.0 * np.sum(np.abs(d) ** 2, axis=-1))


def dbar_bound_ratio(c: CutoffFamily, zeta):
    """|dbar mu_k| |zeta| |log |zeta|| on the shell (zero outside it)."""
    x = np.linalg.norm(np.asarray(zeta), axis=-1)
    return dbar_mu_norm(c, zeta) * x * np.abs(np.log(x))


# ---------------------------------------------------------------------------
# condition (*)

@dataclass
class StarResult:
    k: int
    value: complex
    error: float
    samples: int
    inconclusive: bool = False


def shell_cloud(h: Hypersurface, k: int, count: int, seed: int) -> SampleCloud:
    lo, hi = CutoffFamily(k).shell
    return sample_annulus(h, lo, hi, count, seed)


def star_integral(h: Hypersurface, phi: FormField, k: int, cloud: SampleCloud,
                  alpha: FormField | None = None, profile: str = "quintic",
                  min_samples: int = 100) -> StarResult:
    """I_k = integral over X of omega_X ^ dbar mu_k ^ phi (^ alpha when phi is a function).

    The boundary term in condition (*) with chi_k = 1 near 0 equals -I_k.
    """
    c = CutoffFamily(k, profile)
    if phi.degree == 0 and alpha is None:
        raise ValueError("the function variant needs a dbar-closed (0,1)-form alpha")
    if phi.degree not in (0, 1):
        raise ValueError("phi must be a function or a (0,1)-form")
    lo, hi = c.shell
    if cloud.region[0] > lo * (1 + 1e-12) or cloud.region[1] < hi * (1 - 1e-12):
        raise ValueError("cloud does not cover the k-th shell")
    zeta, grad = cloud.zeta, cloud.gradient
    if len(zeta) == 0:
        return StarResult(k, 0j, 0.0, 0, True)
    _, dmu = mu_k(c, zeta)
    dmu_form = Multivector.one_form([dmu[:, j] for j in range(3)], 3)
    if phi.degree == 1:
        rest = phi.multivector(zeta)
    else:
        rest = alpha.multivector(zeta).scale(phi.values(zeta))
    form = wedge(wedge(structure_form(h, grad), dmu_form), rest)
    t1, t2 = tangent_frame(h, grad)
    dens = restrict_top(form, t1, t2).get(0, np.zeros(len(zeta), complex))
    val, err = cloud.estimate(dens)
    used = int(np.count_nonzero(dmu.any(axis=1)))
    return StarResult(k, complex(val), float(err), used, used < min_samples)


def i1k_integral(n: int, k: int, grid: int = 2000) -> float:
    """The A_n shell integral over pi^-1(D_k) of dV(s,t) / (Q log^2 Q).

    Q = |s|^(2n+2) + |t|^(2n+2) + |st|^2 and D_k = {exp(-e^(k+1)) < |zeta| < exp(-e^k)}.
    The integrand is radial in s and t separately, so with a = log|s|,
    b = log|t| the integral is 4 pi^2 times the (a, b) integral of
    exp(2a + 2b) / (Q log^2 Q) over the preimage region, done by the midpoint
    rule on a uniform grid (values far from the region are exponentially small).
    """
    m = n + 1
    lo, hi = -math.exp(k + 1), -math.exp(k)
    # s^(2m) <= Q bounds log|s| above by hi/m; tiny |s| contributes exp(2 log|s|)
    amin = lo - 40.0
    amax = hi / m + 1.0
    edges = np.linspace(amin, amax, grid + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    da = edges[1] - edges[0]
    a, b = np.meshgrid(mid, mid, indexing="ij")
    # on the covering Q is exactly |zeta|^2
    logq = np.logaddexp(np.logaddexp(2 * m * a, 2 * m * b), 2 * (a + b))
    inside = (logq > 2 * lo) & (logq < 2 * hi)
    vals = np.where(inside, np.exp(2 * a + 2 * b - logq) / logq ** 2, 0.0)
    return float(4 * math.pi ** 2 * vals.sum() * da * da)


# ---------------------------------------------------------------------------
# L^q threshold

@dataclass
class ShellMasses:
    r_lo: np.ndarray
    r_hi: np.ndarray
    q: float
    mass: np.ndarray
    error: np.ndarray


def dyadic_shells(j_min: int = 3, j_max: int = 14):
    radii = 2.0 ** -np.arange(j_min, j_max + 1, dtype=float)
    return list(zip(radii[1:], radii[:-1]))


class ShellSampler:
    """One cloud per shell, reused for every exponent q."""

    def __init__(self, h: Hypersurface, shells, samples: int, seed: int = 0):
        self.h = h
        self.shells = list(shells)
        per = max(1, samples // len(self.shells))
        self.clouds = [sample_annulus(h, lo, hi, per, seed * 1000 + i)
                       for i, (lo, hi) in enumerate(self.shells)]
        self._omega = [OMEGA_NORM_CONSTANT / np.linalg.norm(c.gradient, axis=1) for c in self.clouds]

    def masses(self, q: float) -> ShellMasses:
        m, e = [], []
        for c, om in zip(self.clouds, self._omega):
            val, err = c.estimate(om ** q)
            m.append(float(np.real(val)))
            e.append(float(err))
        lo = np.array([s[0] for s in self.shells])
        hi = np.array([s[1] for s in self.shells])
        return ShellMasses(lo, hi, q, np.array(m), np.array(e))


def _coeffs_in(f, k: int):
    """Coefficients of f as a polynomial in variable k: {power: [(exps of others, c)]}."""
    out: dict[int, list] = {}
    for e, c in f.coeffs.items():
        out.setdefault(e[k], []).append((e, c))
    return out


def _solve_coordinate(h: Hypersurface, k: int, zeta, rng):
    """Fill zeta[:, k] with a uniformly chosen root of f = 0; returns the number of roots."""
    groups = _coeffs_in(h.f, k)
    deg = max(groups)
    coef = np.zeros((len(zeta), deg + 1), complex)
    for p, terms in groups.items():
        for e, c in terms:
            term = np.full(len(zeta), c, complex)
            for v in range(3):
                if v != k and e[v]:
                    term = term * zeta[:, v] ** e[v]
            coef[:, p] += term
    if deg == 1:
        zeta[:, k] = -coef[:, 0] / coef[:, 1]
        return 1
    comp = np.zeros((len(zeta), deg, deg), complex)
    comp[:, 1:, :-1] = np.eye(deg - 1)
    comp[:, :, -1] = -coef[:, :deg] / coef[:, deg:deg + 1]
    roots = np.linalg.eigvals(comp)
    pick = rng.integers(0, deg, len(zeta))
    zeta[:, k] = roots[np.arange(len(zeta)), pick]
    return deg


class QuasiShellSampler:
    """Shell masses from quasi-homogeneously scaled samples of X.

    Each coordinate pair (zeta_i, zeta_j) gives a graph chart whose parameters are drawn as
    (l^w_i a, l^w_j b) with l log-uniform and a, b uniform in the unit disc; the three
    charts are combined with the balance heuristic.  Euclidean-radial sampling misses
    the thin region zeta_i ~ |zeta|^(w_i / w_min) that carries the mass near the threshold
    when the weights are unequal.
    """

    def __init__(self, h: Hypersurface, shells, samples: int, seed: int = 0):
        self.h = h
        self.shells = list(shells)
        w = h.weights
        r_min = min(s[0] for s in self.shells)
        self.log_lmin = 1.05 * math.log(r_min / math.sqrt(3)) / min(w)
        rng = np.random.default_rng([seed, 4099])
        per = max(1, samples // 3)
        zs, owner = [], []
        self.sheets = []
        for k in range(3):
            i, j = [v for v in range(3) if v != k]
            lam = np.exp(rng.uniform(self.log_lmin, 0.0, per))
            zeta = np.zeros((per, 3), complex)
            for v in (i, j):
                rad = np.sqrt(rng.uniform(0, 1, per))
                zeta[:, v] = lam ** w[v] * rad * np.exp(2j * np.pi * rng.uniform(0, 1, per))
            self.sheets.append(_solve_coordinate(h, k, zeta, rng))
            zs.append(zeta)
            owner.append(np.full(per, k))
        self.zeta = np.concatenate(zs)
        self.owner = np.concatenate(owner)
        self.count = per
        self.gradient = h.gradient(self.zeta)
        g2 = np.sum(np.abs(self.gradient) ** 2, axis=1)
        mix = np.zeros(len(self.zeta))
        for k in range(3):
            i, j = [v for v in range(3) if v != k]
            mix += per * self._param_density(i, j) * np.abs(self.gradient[:, k]) ** 2 / (self.sheets[k] * g2)
        with np.errstate(divide="ignore"):
            self.weight = np.where(mix > 0, 1.0 / mix, 0.0)
        self.radius = np.linalg.norm(self.zeta, axis=1)
        self._omega = OMEGA_NORM_CONSTANT / np.sqrt(g2)

    def _param_density(self, i: int, j: int):
        w = self.h.weights
        span = -self.log_lmin
        with np.errstate(divide="ignore"):
            l0 = np.maximum.reduce([np.full(len(self.zeta), self.log_lmin),
                                    np.log(np.abs(self.zeta[:, i])) / w[i],
                                    np.log(np.abs(self.zeta[:, j])) / w[j]])
        W = w[i] + w[j]
        dens = np.expm1(-2 * W * l0) / (2 * W * span * np.pi ** 2)
        return np.where(l0 < 0, dens, 0.0)

    def masses(self, q: float) -> ShellMasses:
        y = self._omega ** q * self.weight
        m, e = [], []
        for lo, hi in self.shells:
            yy = np.where((self.radius >= lo) & (self.radius < hi), y, 0.0)
            m.append(float(yy.sum()))
            var = sum(self.count * np.var(yy[self.owner == k]) for k in range(3))
            e.append(float(np.sqrt(var)))
        lo = np.array([s[0] for s in self.shells])
        hi = np.array([s[1] for s in self.shells])
        return ShellMasses(lo, hi, q, np.array(m), np.array(e))


def shell_mass(h: Hypersurface, q: float, shells, samples: int = 200000, seed: int = 0) -> ShellMasses:
    """Monte-Carlo integrals of |omega_X|^q dV_X over each shell (r_lo, r_hi)."""
    return QuasiShellSampler(h, shells, samples, seed).masses(q)


def fit_slope(r_lo, r_hi, mass, error):
    """Weighted least-squares slope of log(mass) against log(geometric mean radius)."""
    x = 0.5 * (np.log(r_lo) + np.log(r_hi))
    y = np.log(mass)
    w = (mass / np.maximum(error, 1e-300 * mass)) ** 2
    W = w.sum()
    xm, ym = (w * x).sum() / W, (w * y).sum() / W
    sxx = (w * (x - xm) ** 2).sum()
    slope = (w * (x - xm) * (y - ym)).sum() / sxx
    # standard error scaled by the reduced chi^2 when the fit is worse than the error bars
    resid = y - ym - slope * (x - xm)
    dof = max(len(x) - 2, 1)
    chi2 = (w * resid ** 2).sum() / dof
    se = math.sqrt(max(chi2, 1.0) / sxx)
    return float(slope), float(se)


@dataclass
class QThreshold:
    estimate: float
    uncertainty: float
    slopes: list = field(default_factory=list)


def detect_qX(h: Hypersurface, samples: int = 10 ** 6, seed: int = 0, j_range=(8, 30),
              q_range=(2.0, 4.5), tol: float = 1e-4) -> QThreshold:
    """Exponent q where the shell-mass slope of |omega_X|^q crosses zero (bisection)."""
    sampler = QuasiShellSampler(h, dyadic_shells(*j_range), samples, seed)
    history = []

    def slope(q):
        sm = sampler.masses(q)
        s, se = fit_slope(sm.r_lo, sm.r_hi, sm.mass, sm.error)
        history.append((q, s, se))
        return s, se

    lo, hi = q_range
    s_lo, _ = slope(lo)
    s_hi, _ = slope(hi)
    if s_lo <= 0:
        return QThreshold(lo, float("nan"), history)
    if s_hi > 0:
        return QThreshold(hi, float("nan"), history)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if slope(mid)[0] > 0:
            lo = mid
        else:
            hi = mid
    q0 = 0.5 * (lo + hi)
    _, se = slope(q0)
    dq = 0.02
    ds = (slope(q0 + dq)[0] - slope(q0 - dq)[0]) / (2 * dq)
    unc = se / abs(ds) if ds != 0 else float("inf")
    return QThreshold(q0, float(unc), history)


# ---------------------------------------------------------------------------
# appendix scaling experiments

@dataclass
class ScalingFit:
    mode: str
    exponent: float
    error: float
    xs: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    bounded: bool | None = None


def _loglog(xs, vals, errs):
    x = np.log(xs)
    y = np.log(vals)
    w = (vals / np.maximum(errs, 1e-300 * vals)) ** 2
    coef, cov = np.polyfit(x, y, 1, w=np.sqrt(w), cov="unscaled")
    return float(coef[0]), float(math.sqrt(cov[0, 0]))


def appendix_scaling(h: Hypersurface, alpha: float, mode: str = "radial", beta: float | None = None,
                     samples: int = 200000, seed: int = 0, radii=None,
                     quad: QuadratureConfig | None = None) -> ScalingFit:
    """Scaling fits for radial and two-point integrals of |zeta - z|^-alpha around z = 0.

    radial: integral over X cap B_r(0) of |zeta|^-alpha against r (law r^(4 - alpha)).
    two-point: integral over X cap B_1 of |zeta|^-alpha |zeta - w|^-beta against
      d = |w| along a ray of X (law d^(4 - alpha - beta) when alpha + beta > 4).
    log-weighted: per-shell contributions c_j of |zeta|^-4 log^-2|zeta| over the
      dyadic shells 2^-(j+1) < |zeta| < 2^-j; the integral is bounded iff they
      are summable, reported via the decay exponent of c_j in j.
    """
    if mode == "radial":
        if not alpha < 4:
            raise ValueError("radial law needs alpha < 4")
        radii = np.asarray(radii if radii is not None else 2.0 ** -np.arange(1, 9), float)
        vals, errs = [], []
        for i, r in enumerate(radii):
            c = sample_annulus(h, 0.0, r, samples, seed + i)
            v, e = c.estimate(np.linalg.norm(c.zeta, axis=1) ** -alpha)
            vals.append(float(np.real(v)))
            errs.append(float(e))
        vals, errs = np.array(vals), np.array(errs)
        slope, se = _loglog(radii, vals, errs)
        return ScalingFit(mode, slope, se, radii, vals, errs)

    if mode == "two-point":
        beta = alpha if beta is None else beta
        if h.type.family != "A" or h.type.n != 1:
            raise ValueError("two-point scaling along a ray needs the homogeneous A1 cone")
        quad = quad or QuadratureConfig(local_samples=40000, seed=seed)
        ds = np.asarray(radii if radii is not None else 2.0 ** -np.arange(4, 10), float)
        cloud = sample_annulus(h, 0.0, 1.0, samples, seed)
        # a fixed unit point of the cone, scaled along its ray
        from .variety import covering_An
        base = covering_An(1, 0.8 + 0.1j, 0.45 - 0.3j).zeta
        base = base / np.linalg.norm(base)
        vals, errs = [], []
        for d in ds:
            w = d * base

            def integrand(zeta, grad, w=w):
                return (np.linalg.norm(zeta, axis=1) ** -alpha *
                        np.linalg.norm(zeta - w, axis=1) ** -beta + 0j)
            rho0 = choose_local_radius(h, w, None)
            parts, _ = singular_parts(h, w, cloud, integrand, quad, rho0)
            v, e = parts.estimate()
            vals.append(float(np.real(v)))
            errs.append(float(e))
        vals, errs = np.array(vals), np.array(errs)
        slope, se = _loglog(ds, vals, errs)
        return ScalingFit(mode, slope, se, ds, vals, errs)

    if mode == "log-weighted":
        js = np.arange(1, 41)
        vals, errs = [], []
        per = max(1000, samples // len(js))
        for j in js:
            c = sample_annulus(h, 2.0 ** -(j + 1), 2.0 ** -j, per, seed + int(j))
            x = np.linalg.norm(c.zeta, axis=1)
            v, e = c.estimate(x ** -4.0 / np.log(x) ** 2)
            vals.append(float(np.real(v)))
            errs.append(float(e))
        vals, errs = np.array(vals), np.array(errs)
        slope, se = _loglog(js.astype(float), vals, errs)
        # summable iff c_j decays faster than 1/j
        return ScalingFit(mode, slope, se, js.astype(float), vals, errs, bounded=slope + 2 * se < -1)

    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# exponent table

COROLLARY_Q = {"A": Fraction(4), "D": Fraction(3), "E6": Fraction(8, 3), "E7": Fraction(5, 2),
               "E8": Fraction(7, 3)}


@dataclass(frozen=True)
class ExponentRow:
    q: Fraction
    p: Fraction
    p_hat: Fraction
    holder_cap: Fraction
    q_quasihomogeneous: Fraction

    @classmethod
    def from_q(cls, q: Fraction, q_sharp: Fraction) -> "ExponentRow":
        p = q / (q - 1)
        return cls(q, p, 4 * p / (4 - p), 4 / p - 2, q_sharp)

    def lam(self, p: Fraction | None = None) -> Fraction:
        return lam(self.p if p is None else Fraction(p))


def lam(p) -> Fraction:
    """lambda with 1/lambda = 1/p + 1/4."""
    p = Fraction(p)
    return 1 / (1 / p + Fraction(1, 4))


@dataclass
class ExponentTable:
    rows: dict

    def __getitem__(self, key) -> ExponentRow:
        return self.rows[str(key)]


def corollary_q(t: DuValType) -> Fraction:
    return COROLLARY_Q["A" if t.family == "A" else "D" if t.family == "D" else str(t)]


def exponent_table(types=None) -> ExponentTable:
    """Exact (q, p, p_hat, Hoelder cap) per type from the per-family q bounds.

    ``q_quasihomogeneous`` records the threshold obtained from the weights of
    the normal form, which is the value the shell-mass detector measures.
    """
    if types is None:
        types = ([DuValType("A", n) for n in range(1, 11)] + [DuValType("D", n) for n in range(4, 11)]
                 + [DuValType("E", n) for n in (6, 7, 8)])
    rows = {}
    for t in types:
        t = DuValType.parse(t) if isinstance(t, str) else t
        rows[str(t)] = ExponentRow.from_q(corollary_q(t), weighted_threshold(t))
    return ExponentTable(rows)


def qX_for(t) -> Fraction:
    t = DuValType.parse(t) if isinstance(t, str) else t
    return corollary_q(t)


__all__ = [
    "CutoffFamily", "DBAR_MU_CONSTANT", "ExponentRow", "ExponentTable", "QThreshold", "ScalingFit",
    "QuasiShellSampler", "ShellMasses", "ShellSampler", "StarResult", "appendix_scaling", "dbar_bound_ratio",
    "dbar_mu_norm", "detect_qX", "dyadic_shells", "exponent_table", "fit_slope", "i1k_integral",
    "lam", "mu_k", "radial_r", "shell_cloud", "shell_mass", "star_integral",
]
