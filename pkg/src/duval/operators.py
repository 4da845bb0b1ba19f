"""K and P as integral operators over sample clouds, numerical dbar, homotopy checks.

Singular integrals over X are split with a smooth partition psi(|zeta - z|/rho0):
the far part uses the global cloud, the near part uses a co-moving local
stratum drawn in the holomorphic tangent chart at z with log-uniform radius.
The local random offsets depend only on the seed, so evaluations at nearby z
share random numbers and finite differences of operator values stay smooth.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .grassmann import ANTI_Z_MASK, HOLO_MASK, ANTI_ZETA_MASK, Multivector, popcount, wedge
from .kernels import BallWeight, HeferForm, hefer, kernel_forms, smoothstep5
from .polynomial import Polynomial
from .variety import (Hypersurface, SampleCloud, SurfacePoint, defining_poly, make_point,
                      sample_annulus, structure_form, tangent_chart, tangent_frame)

PAIRS = ((0, 1), (0, 2), (1, 2))

# Global orientation factors fixed once by the reproducing checks: with the
# restriction convention dw1^dw2^dwbar1^dwbar2 = 4 dV the kernels as built
# integrate with these signs (see tests/test_operators.py).
K_SIGN = 1.0
P_SIGN = 1.0


# ---------------------------------------------------------------------------
# forms on X

@dataclass
class FormField:
    """A smooth (0, r)-form on X given by an ambient representative.

    ``ambient(zeta)`` returns, for zeta of shape (N, 3): shape (N,) when r = 0,
    (N, 3) coefficients of dzetabar_j when r = 1, and (N, 3) coefficients of
    dzetabar_j ^ dzetabar_k over the pairs (12, 13, 23) when r = 2.
    ``dbar_ambient`` optionally gives the ambient dbar in the same layout;
    otherwise it is taken by central differences in zetabar.
    """

    degree: int
    ambient: Callable[[np.ndarray], np.ndarray]
    dbar_ambient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    smoothness_tag: str = "smooth"

    def __post_init__(self):
        if self.degree not in (0, 1, 2):
            raise ValueError("form degree must be 0, 1 or 2")

    def values(self, zeta):
        return np.asarray(self.ambient(np.atleast_2d(np.asarray(zeta, dtype=complex))))

    def multivector(self, zeta, offset: int = 3) -> Multivector:
        v = self.values(zeta)
        if self.degree == 0:
            return Multivector.scalar(v)
        if self.degree == 1:
            return Multivector.one_form([v[:, j] for j in range(3)], offset)
        return Multivector({(1 << (offset + j)) | (1 << (offset + k)): v[:, p]
                            for p, (j, k) in enumerate(PAIRS)})

    def eval(self, point) -> np.ndarray:
        """Coefficients in the minimal tangent-frame representation at a point of X."""
        zeta = np.atleast_2d(point.zeta)
        grad = np.atleast_2d(point.gradient)
        t1, t2 = tangent_frame(None, grad)
        return frame_coefficients(self.degree, self.values(zeta), t1, t2)[0]

    def dbar(self, eps: float = 1e-6) -> "FormField":
        if self.degree == 2:
            return FormField(2, lambda z: np.zeros((len(z), 3), complex), smoothness_tag="zero")
        if self.dbar_ambient is not None:
            return FormField(self.degree + 1, self.dbar_ambient, smoothness_tag=self.smoothness_tag)
        return FormField(self.degree + 1, lambda z: ambient_dbar(self, z, eps),
                         smoothness_tag=self.smoothness_tag)

    def scaled(self, c) -> "FormField":
        d = None if self.dbar_ambient is None else (lambda z: c * self.dbar_ambient(z))
        return FormField(self.degree, lambda z: c * self.ambient(z), d, self.smoothness_tag)

    def __add__(self, other: "FormField") -> "FormField":
        if other.degree != self.degree:
            raise ValueError("degree mismatch")
        d = None
        if self.dbar_ambient is not None and other.dbar_ambient is not None:
            d = lambda z: self.dbar_ambient(z) + other.dbar_ambient(z)
        return FormField(self.degree, lambda z: self.ambient(z) + other.ambient(z), d)


def zero_form(degree: int) -> FormField:
    shape = (lambda n: (n,)) if degree == 0 else (lambda n: (n, 3))
    return FormField(degree, lambda z: np.zeros(shape(len(z)), complex),
                     (lambda z: np.zeros((len(z), 3), complex)), "zero")


def holomorphic_function(p: Polynomial) -> FormField:
    return FormField(0, lambda z: p(z[:, 0], z[:, 1], z[:, 2]) + 0j,
                     lambda z: np.zeros((len(z), 3), complex), "holomorphic")


def ambient_dbar(form: FormField, zeta, eps: float = 1e-6):
    """Central-difference ambient dbar of a degree 0 or 1 form, in FormField layout."""
    zeta = np.atleast_2d(np.asarray(zeta, dtype=complex))
    grads = []
    for j in range(3):
        e = np.zeros(3, complex)
        e[j] = eps
        dx = (form.values(zeta + e) - form.values(zeta - e)) / (2 * eps)
        dy = (form.values(zeta + 1j * e) - form.values(zeta - 1j * e)) / (2 * eps)
        grads.append(0.5 * (dx + 1j * dy))
    if form.degree == 0:
        return np.stack(grads, axis=-1)
    # dbar(sum_k phi_k dzbar_k) = sum_{j<k} (d_j phi_k - d_k phi_j) dzbar_j ^ dzbar_k
    return np.stack([grads[j][:, k] - grads[k][:, j] for j, k in PAIRS], axis=-1)


def _alpha(t1, t2):
    return np.stack([t1[..., j] * t2[..., k] - t1[..., k] * t2[..., j] for j, k in PAIRS], axis=-1)


def frame_coefficients(degree: int, values, t1, t2):
    """Minimal representation of ambient coefficients in the frame (t1, t2)."""
    values = np.asarray(values)
    if degree == 0:
        return values
    if degree == 1:
        return np.stack([np.sum(values * np.conj(t), axis=-1) for t in (t1, t2)], axis=-1)
    return np.sum(values * np.conj(_alpha(t1, t2)), axis=-1)[..., None]


def form_norm(degree: int, coeffs):
    """|phi|^2 = 2^r sum |phi_I|^2 over the minimal coefficients."""
    coeffs = np.asarray(coeffs)
    if degree == 0:
        return np.abs(coeffs)
    return np.sqrt(2.0 ** degree * np.sum(np.abs(coeffs) ** 2, axis=-1))


def restrict_top(form: Multivector, t1, t2) -> dict[int, np.ndarray]:
    """Densities against dV_X of the zeta-(2,2) part, keyed by the dzbar mask.

    dzeta_I restricts to alpha_I dw1^dw2 and dzetabar_J to conj(alpha_J)
    dwbar1^dwbar2 for an orthonormal frame; dw1^dw2^dwbar1^dwbar2 = 4 dV.
    """
    alpha = _alpha(t1, t2)
    index = {(1 << j) | (1 << k): p for p, (j, k) in enumerate(PAIRS)}
    out: dict[int, np.ndarray] = {}
    for m, c in form.terms.items():
        hol, anti = m & HOLO_MASK, (m & ANTI_ZETA_MASK) >> 3
        if popcount(hol) != 2 or popcount(anti) != 2:
            continue
        dens = 4 * c * alpha[..., index[hol]] * np.conj(alpha[..., index[anti]])
        key = m & ANTI_Z_MASK
        out[key] = out[key] + dens if key in out else dens
    return out


# ---------------------------------------------------------------------------
# quadrature

@dataclass
class QuadratureConfig:
    local_samples: int = 20000
    local_fraction: float = 0.25
    eps_diag: float = 1e-6
    seed: int = 0
    chunk: int = 40000


@dataclass
class OperatorResult:
    value: np.ndarray
    mc_error: float
    samples_used: int
    ambient: dict = field(default_factory=dict)
    inconclusive: bool = False


def partition(d, rho0):
    """Smooth psi: 1 for d <= rho0/2, 0 for d >= rho0."""
    return 1.0 - smoothstep5(2.0 * np.asarray(d) / rho0 - 1.0)


def local_radius(h: Hypersurface, z, fraction: float) -> float:
    """Conservative radius fraction * min(|z|, |df|/|Hess f|) for the tangent chart."""
    z = np.asarray(z)
    scale = min(np.linalg.norm(z), np.linalg.norm(h.gradient(z)) / max(h.hessian_norm(z), 1e-300))
    return fraction * float(scale)


def chart_covers(h: Hypersurface, z, rho0: float, points) -> bool:
    """True if every given point of X within rho0 of z lies on the tangent-chart sheet through z.

    A point zeta is on the sheet iff projecting zeta - z to the tangent plane
    and running the chart's Newton step from there returns zeta.
    """
    z = np.asarray(z, dtype=complex)
    points = np.asarray(points)
    near = points[np.linalg.norm(points - z, axis=1) < rho0]
    if len(near) == 0:
        return True
    t1, t2 = tangent_frame(h, h.gradient(z))
    w = np.stack([np.sum((near - z) * np.conj(t), axis=1) for t in (t1, t2)], axis=1)
    back, _, _ = tangent_chart(h, z, t1, t2, w)
    return bool(np.all(np.linalg.norm(back - near, axis=1) <= 1e-8 * max(rho0, 1e-300)))


def choose_local_radius(h: Hypersurface, z, cloud: SampleCloud | None = None,
                        fractions=(0.6, 0.45, 0.3, 0.2, 0.12), probe: int = 4000,
                        seed: int = 0) -> float:
    """Largest rho0 = fraction * |z| whose ball meets X only in the tangent-chart sheet.

    Coverage is checked on the cloud points near z plus a dedicated probe
    cloud on the shell |z| - rho0 <= |zeta| <= |z| + rho0.
    """
    z = np.asarray(z, dtype=complex)
    r = float(np.linalg.norm(z))
    floor = local_radius(h, z, 0.25)
    for frac in fractions:
        rho0 = frac * r
        if rho0 <= floor:
            break
        pts = [] if cloud is None else [cloud.zeta]
        pc = sample_annulus(h, max(r - rho0, 0.0), r + rho0, probe, seed)
        pts.append(pc.zeta)
        if chart_covers(h, z, rho0, np.concatenate(pts)):
            return rho0
    return floor


def _local_offsets(count: int, seed: int, lo: float, hi: float, uniform_share: float = 0.8):
    """Offsets w in C^2 with |w| from a uniform/log-uniform mixture on [lo, hi].

    A kernel of order |eta|^-3 against the area element rho^3 d rho is flat in
    rho, so most draws are uniform in rho; the log-uniform share guards the
    small-rho tail.  Returns (w, weight per draw before the Jacobian).
    """
    rng = np.random.default_rng([seed, 7919])
    n_uni = int(round(uniform_share * count))
    span = math.log(hi) - math.log(lo)
    rho = np.concatenate([rng.uniform(lo, hi, n_uni),
                          np.exp(rng.uniform(math.log(lo), math.log(hi), count - n_uni))])
    x = rng.standard_normal((count, 4))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    w = np.stack([x[:, 0] + 1j * x[:, 1], x[:, 2] + 1j * x[:, 3]], axis=1) * rho[:, None]
    q = uniform_share / (hi - lo) + (1 - uniform_share) / (rho * span)
    base = 2 * math.pi ** 2 * rho ** 3 / (q * count)
    return w, base


@dataclass
class LocalStratum:
    zeta: np.ndarray
    gradient: np.ndarray
    weight: np.ndarray

    def __len__(self):
        return len(self.weight)


def local_stratum(h: Hypersurface, z, rho0: float, cfg: QuadratureConfig) -> LocalStratum:
    """Weighted points psi(|zeta - z|/rho0) dV_X near z from the tangent chart."""
    z = np.asarray(z, dtype=complex)
    t1, t2 = tangent_frame(h, h.gradient(z))
    w, base = _local_offsets(cfg.local_samples, cfg.seed, cfg.eps_diag, rho0)
    zeta, grad, jac = tangent_chart(h, z, t1, t2, w)
    a, b = jac[..., 0], jac[..., 1]
    gram = (np.sum(np.abs(a) ** 2, -1) * np.sum(np.abs(b) ** 2, -1)
            - np.abs(np.sum(a * np.conj(b), -1)) ** 2)
    d = np.linalg.norm(zeta - z, axis=1)
    ok = np.abs(h.value(zeta)) <= 1e-9 * h.residual_scale(zeta)
    if not np.all(ok):
        warnings.warn(f"{np.sum(~ok)} local samples failed to project onto X")
    weight = np.where(ok, base * gram * partition(d, rho0), 0.0)
    return LocalStratum(zeta, grad, weight)


@dataclass
class SingularParts:
    """Per-sample pieces of a split singular integral (for error propagation)."""

    cloud: SampleCloud
    far: np.ndarray      # integrand * (1 - psi) at cloud points
    near: np.ndarray     # local-stratum draws scaled so that their mean is the near integral

    def combine(self, coeffs, others=()):
        """Estimate and error of sum_i coeffs[i] * parts_i with shared random numbers."""
        parts = [self] + list(others)
        far = sum(c * p.far for c, p in zip(coeffs, parts))
        near = sum(c * p.near for c, p in zip(coeffs, parts))
        return _estimate(self.cloud, far, near)

    def estimate(self):
        return _estimate(self.cloud, self.far, self.near)

    def map(self, fn) -> "SingularParts":
        return SingularParts(self.cloud, fn(self.far), fn(self.near))


def _estimate(cloud, far, near):
    total, var = 0.0, 0.0
    if len(far):
        f, fe = cloud.estimate(far)
        total, var = f, np.asarray(fe) ** 2
    m = len(near)
    mean = near.mean(axis=0)
    var = var + np.maximum((np.abs(near) ** 2).mean(axis=0) - np.abs(mean) ** 2, 0) / (m - 1)
    return np.asarray(total + mean), float(np.sqrt(np.max(np.atleast_1d(var))))


def singular_parts(h: Hypersurface, z, cloud: SampleCloud, integrand, cfg: QuadratureConfig,
                   rho0: float | None = None) -> tuple[SingularParts, int]:
    z = np.asarray(z, dtype=complex)
    rho0 = rho0 if rho0 is not None else choose_local_radius(h, z, cloud)
    n, used = len(cloud), 0
    probe = np.shape(integrand(cloud.zeta[:1], cloud.gradient[:1]))[1:] if n else ()
    far = np.zeros((n,) + probe, complex)
    for start in range(0, n, cfg.chunk):
        sl = slice(start, min(n, start + cfg.chunk))
        d = np.linalg.norm(cloud.zeta[sl] - z, axis=1)
        # psi = 1 on d <= rho0/2, so those points carry no far weight
        keep = (d > cfg.eps_diag) & (d >= rho0 / 2)
        idx = np.arange(sl.start, sl.stop)[keep]
        if len(idx):
            far[idx] = integrand(cloud.zeta[idx], cloud.gradient[idx]) * \
                _bcast(1.0 - partition(d[keep], rho0), len(probe) + 1)
        used += len(idx)
    loc = local_stratum(h, z, rho0, cfg)
    sel = loc.weight > 0
    lv = integrand(loc.zeta[sel], loc.gradient[sel])
    near = np.zeros((cfg.local_samples,) + lv.shape[1:], complex)
    near[sel] = lv * _bcast(loc.weight[sel], lv.ndim) * cfg.local_samples
    used += int(sel.sum())
    return SingularParts(cloud, far, near), used


def singular_integral(h: Hypersurface, z, cloud: SampleCloud, integrand, cfg: QuadratureConfig,
                      rho0: float | None = None):
    """Integral of integrand(zeta, grad) (per-point densities, shape (M,) or (M, k)) over X.

    Returns (value, standard error, samples used).
    """
    parts, used = singular_parts(h, z, cloud, integrand, cfg, rho0)
    val, err = parts.estimate()
    return val, err, used


def _bcast(a, ndim):
    a = np.asarray(a)
    return a.reshape(a.shape + (1,) * (ndim - a.ndim))


def _shape_of(integrand, zeta, grad):
    return np.shape(integrand(zeta, grad))[1:]


# ---------------------------------------------------------------------------
# operators

class KoppelmanOperator:
    """K and P for one hypersurface and weight."""

    def __init__(self, h: Hypersurface, weight: BallWeight | None = None,
                 quad: QuadratureConfig | None = None):
        self.h = h
        self.hef: HeferForm = hefer(h)
        self.weight = weight or BallWeight()
        self.quad = quad or QuadratureConfig()

    def _density(self, phi: FormField, z, which: str, zdeg: int):
        keys = {0: [0], 1: [1 << (6 + j) for j in range(3)],
                2: [(1 << (6 + j)) | (1 << (6 + k)) for j, k in PAIRS]}[zdeg]

        def integrand(zeta, grad):
            k_val, p_val = kernel_forms(self.h, self.hef, self.weight, zeta, grad, z,
                                        want_k=which == "K", want_p=which == "P")
            ker = k_val if which == "K" else p_val
            ker = Multivector({m: c for m, c in ker.terms.items() if popcount(m & ANTI_Z_MASK) == zdeg})
            t1, t2 = tangent_frame(self.h, grad)
            dens = restrict_top(wedge(ker, phi.multivector(zeta)), t1, t2)
            cols = [dens.get(k, np.zeros(len(zeta), complex)) for k in keys]
            return cols[0] if zdeg == 0 else np.stack(cols, axis=-1)
        return integrand

    def _apply(self, phi: FormField, z, cloud, which, rho0=None) -> OperatorResult:
        zp = z if isinstance(z, SurfacePoint) else make_point(self.h, z)
        zvec = np.asarray(zp.zeta, dtype=complex)
        if which == "K":
            if phi.degree not in (1, 2):
                raise ValueError("K acts on (0,1)- and (0,2)-forms")
            zdeg, sign = phi.degree - 1, K_SIGN
        else:
            if phi.degree not in (0, 2):
                raise ValueError("P acts on functions and (0,2)-forms")
            zdeg, sign = phi.degree, P_SIGN
        integrand = self._density(phi, zvec, which, zdeg)
        parts = None
        if which == "K":
            # K is singular on the diagonal; P is smooth there
            parts, used = singular_parts(self.h, zvec, cloud, integrand, self.quad, rho0)
            parts = parts.map(lambda a: sign * a)
            val, err = parts.estimate()
        else:
            val, err, used = np.zeros(() if zdeg == 0 else (3,), complex), 0.0, 0
            if len(cloud):
                v = sign * integrand(cloud.zeta, cloud.gradient)
                val, e = cloud.estimate(v)
                err, used = float(np.max(np.atleast_1d(e))), len(cloud)
        t1, t2 = tangent_frame(self.h, zp.gradient)
        coeffs = frame_coefficients(zdeg, np.asarray(val), t1, t2)
        amb = {0: "scalar", 1: "dzbar", 2: "dzbar2"}[zdeg]
        res = OperatorResult(np.atleast_1d(coeffs), err, used, {amb: np.asarray(val)})
        res.parts = parts
        return res

    def apply_K(self, phi: FormField, z, cloud: SampleCloud, rho0=None) -> OperatorResult:
        return self._apply(phi, z, cloud, "K", rho0)

    def apply_P(self, phi: FormField, z, cloud: SampleCloud) -> OperatorResult:
        return self._apply(phi, z, cloud, "P")

    def K_field(self, phi: FormField, cloud: SampleCloud, rho0: float) -> FormField:
        """K phi as an ambient-coefficient field on X (evaluated pointwise with shared randomness)."""
        deg = phi.degree - 1

        def amb(zeta):
            out = []
            for zrow in np.atleast_2d(zeta):
                r = self.apply_K(phi, make_point(self.h, zrow), cloud, rho0)
                out.append(r.ambient["scalar"] if deg == 0 else r.ambient["dzbar"])
            return np.array(out)
        return FormField(deg, amb, smoothness_tag="operator")


def apply_K(phi: FormField, z: SurfacePoint, cloud: SampleCloud, op: KoppelmanOperator | None = None):
    op = op or KoppelmanOperator(defining_poly(cloud.type))
    return op.apply_K(phi, z, cloud)


def apply_P(phi: FormField, z: SurfacePoint, cloud: SampleCloud, op: KoppelmanOperator | None = None):
    op = op or KoppelmanOperator(defining_poly(cloud.type))
    return op.apply_P(phi, z, cloud)


# ---------------------------------------------------------------------------
# numerical dbar on X

def dbar_numeric(h: Hypersurface, u: FormField, p: SurfacePoint, eps: float = 1e-3):
    """Central-difference dbar of a degree 0 or 1 field at p, in the frame at p.

    Differences are taken along the holomorphic tangent chart
    w -> p + w1 t1 + w2 t2 + lam(w) n (Newton-projected onto X).  For degree 1
    the field is pulled back through dzeta/dw before differencing.
    """
    if u.degree not in (0, 1):
        raise ValueError("dbar_numeric handles functions and (0,1)-forms")
    zeta0 = np.asarray(p.zeta, dtype=complex)
    if np.linalg.norm(zeta0) <= 10 * eps:
        raise ValueError("point too close to the singular point for this step size")
    t1, t2 = tangent_frame(h, h.gradient(zeta0))
    steps = []
    for a in range(2):
        for s in (eps, -eps, 1j * eps, -1j * eps):
            w = np.zeros(2, complex)
            w[a] = s
            steps.append(w)
    zeta, grad, jac = tangent_chart(h, zeta0, t1, t2, np.array(steps))
    vals = u.values(zeta)
    if u.degree == 1:
        # c_b(w) = sum_j phi_j conj(dzeta_j/dw_b)
        vals = np.einsum("mj,mjb->mb", vals, np.conj(jac))
    vals = vals.reshape((2, 4) + vals.shape[1:])
    dwbar = 0.5 * ((vals[:, 0] - vals[:, 1]) + 1j * (vals[:, 2] - vals[:, 3])) / (2 * eps)
    if u.degree == 0:
        return dwbar
    return np.array([dwbar[0, 1] - dwbar[1, 0]])


# ---------------------------------------------------------------------------
# identities

@dataclass
class ResidualReport:
    residual: float
    mc_error: float
    inconclusive: bool
    lhs: np.ndarray
    parts: dict


def dbar_of_K(op: KoppelmanOperator, phi: FormField, z: SurfacePoint, cloud: SampleCloud,
              rho0: float, eps: float = 1e-3):
    """dbar (K phi) at z by central differences with common random numbers.

    Returns (frame coefficients, standard error of the difference quotient).
    The same cloud and local offsets are used at every stencil point, so the
    error is computed from the per-sample differences.
    """
    h = op.h
    zeta0 = np.asarray(z.zeta, dtype=complex)
    t1, t2 = tangent_frame(h, h.gradient(zeta0))
    steps = []
    for a in range(2):
        for s_ in (eps, -eps, 1j * eps, -1j * eps):
            w = np.zeros(2, complex)
            w[a] = s_
            steps.append(w)
    pts, _, jac = tangent_chart(h, zeta0, t1, t2, np.array(steps))
    parts = [op.apply_K(phi, make_point(h, p), cloud, rho0).parts for p in pts]
    if phi.degree == 2:
        # pull the ambient dzbar coefficients back to the chart: c_b = sum_j v_j conj(dzeta_j/dw_b)
        parts = [pr.map(lambda v, J=jac[i]: v @ np.conj(J)) for i, pr in enumerate(parts)]
    c = 1.0 / (4 * eps)
    # d/dwbar_a = ((f(+e) - f(-e)) + i (f(+ie) - f(-ie))) / (4 eps)
    stencil = lambda a: [0.0] * (4 * a) + [c, -c, 1j * c, -1j * c] + [0.0] * (4 * (1 - a))
    if phi.degree == 1:
        vals, errs = [], []
        for a in range(2):
            v, e = parts[0].combine(stencil(a), parts[1:])
            vals.append(complex(v))
            errs.append(e)
        return np.array(vals), float(np.hypot(*errs))
    # (0,1)-form K phi: dbar = d c_2/d wbar_1 - d c_1/d wbar_2
    sel = lambda b: [pr.map(lambda v: v[..., b]) for pr in parts]
    p2, p1 = sel(1), sel(0)
    coeffs = stencil(0) + [-x for x in stencil(1)]
    v, e = p2[0].combine(coeffs, p2[1:] + p1)
    return np.array([complex(v)]), e


def homotopy_residual(op: KoppelmanOperator, phi: FormField, z: SurfacePoint, cloud: SampleCloud,
                      eps: float = 1e-3, tolerance: float = 0.05, rho0: float | None = None,
                      cloud_dbar: SampleCloud | None = None) -> ResidualReport:
    """|phi - dbar K phi - K dbar phi| / |phi| at z (degree 1) or |phi - dbar K phi - P phi| (degree 2).

    ``cloud`` must cover supp phi; ``cloud_dbar`` (default ``cloud``) covers
    supp dbar phi (degree 1) or the cut-off annulus of P (degree 2).  The
    result is flagged inconclusive when the MC error exceeds ``tolerance``.
    """
    h = op.h
    zvec = np.asarray(z.zeta, dtype=complex)
    rho0 = rho0 if rho0 is not None else choose_local_radius(h, zvec, cloud)
    t1, t2 = tangent_frame(h, h.gradient(zvec))
    target = frame_coefficients(phi.degree, phi.values(zvec)[0], t1, t2)
    scale = float(form_norm(phi.degree, target))
    if scale == 0:
        scale = 1.0
    if not np.any(phi.values(cloud.zeta)) and not np.any(target):
        return ResidualReport(0.0, 0.0, False, target, {})
    dk, dk_err = dbar_of_K(op, phi, z, cloud, rho0, eps)
    if phi.degree == 1:
        second = op.apply_K(phi.dbar(), z, cloud_dbar or cloud, rho0)
    else:
        second = op.apply_P(phi, z, cloud_dbar or cloud)
    lhs = target - dk - second.value
    res = float(form_norm(phi.degree, lhs)) / scale
    mc = float(np.sqrt(2.0 ** phi.degree * (dk_err ** 2 + second.mc_error ** 2))) / scale
    return ResidualReport(res, mc, mc > tolerance, lhs,
                          {"phi": target, "dbar_K": dk, "second": second.value})


def moment_test(h: Hypersurface, phi: FormField, hol: Polynomial, cloud: SampleCloud):
    """Monte-Carlo value of the integral of phi ^ hol omega_X over X, with its standard error."""
    if phi.degree != 2:
        raise ValueError("moment_test pairs (0,2)-forms with holomorphic functions")
    if not hol.coeffs or len(cloud) == 0:
        return 0j, 0.0
    zeta, grad = cloud.zeta, cloud.gradient
    om = structure_form(h, grad).scale(hol(zeta[:, 0], zeta[:, 1], zeta[:, 2]))
    t1, t2 = tangent_frame(h, grad)
    dens = restrict_top(wedge(om, phi.multivector(zeta)), t1, t2).get(0, np.zeros(len(zeta), complex))
    val, err = cloud.estimate(dens)
    return complex(val), float(err)


@dataclass
class HolderReport:
    alphas: np.ndarray
    quotient_growth: np.ndarray
    fitted_exponent: float
    best_alpha: float
    distances: np.ndarray
    differences: np.ndarray


def holder_probe(op: KoppelmanOperator, phi: FormField, pairs, cloud: SampleCloud,
                 alphas=None, growth_tol: float = 1.5, rho0: float | None = None) -> HolderReport:
    """Hoelder quotients |K phi(z) - K phi(w)| / |z - w|^alpha along pairs of shrinking distance.

    The fitted exponent is the log-log slope of the difference against the
    distance; ``best_alpha`` is the largest grid value whose quotient does not
    grow by more than ``growth_tol`` from the widest to the closest pair.
    """
    alphas = np.linspace(0, 1, 21) if alphas is None else np.asarray(alphas, float)
    dists, diffs = [], []
    for zp, wp in pairs:
        r0 = rho0 if rho0 is not None else choose_local_radius(op.h, np.asarray(zp.zeta), cloud)
        a = op.apply_K(phi, zp, cloud, r0).value
        b = op.apply_K(phi, wp, cloud, r0).value
        dists.append(np.linalg.norm(np.asarray(zp.zeta) - np.asarray(wp.zeta)))
        diffs.append(np.abs(a[0] - b[0]))
    dists, diffs = np.array(dists), np.array(diffs)
    order = np.argsort(-dists)
    dists, diffs = dists[order], diffs[order]
    slope = float(np.polyfit(np.log(dists), np.log(np.maximum(diffs, 1e-300)), 1)[0])
    growth = np.array([np.max(diffs / dists ** a) / (diffs[0] / dists[0] ** a) for a in alphas])
    ok = alphas[growth <= growth_tol]
    return HolderReport(alphas, growth, slope, float(ok.max()) if len(ok) else 0.0, dists, diffs)


def lp_ratio(op: KoppelmanOperator, phi: FormField, p: float, z_points, cloud_phi: SampleCloud,
             cloud_z: SampleCloud, rho0_fraction: float | None = None):
    """Empirical ||K phi||_p / ||phi||_p with K phi sampled at the given z points.

    ``z_points`` are taken from ``cloud_z`` (a cloud on the evaluation region);
    the L^p norm of K phi is the cloud-weighted sum over those points.
    """
    t1, t2 = tangent_frame(op.h, cloud_phi.gradient)
    phi_c = frame_coefficients(1, phi.values(cloud_phi.zeta), t1, t2)
    num_phi, _ = cloud_phi.estimate(form_norm(1, phi_c) ** p)
    vals = []
    for i in z_points:
        zp = make_point(op.h, cloud_z.zeta[i])
        vals.append(abs(op.apply_K(phi, zp, cloud_phi).value[0]) ** p)
    sub = cloud_z.subset(np.asarray(z_points))
    # reweight the subset so that it still estimates the region integral
    scale = cloud_z.total_weight / max(sub.total_weight, 1e-300)
    num_k = float(np.sum(sub.weight * np.array(vals))) * scale
    return (num_k / max(float(np.real(num_phi)), 1e-300)) ** (1 / p)
