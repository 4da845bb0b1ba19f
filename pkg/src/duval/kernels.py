"""Pointwise kernel ingredients: Bochner-Martinelli forms, Hefer form, weights, K and P.

Every evaluator is batched: ``zeta`` has shape (N, 3) (or (3,)), ``z`` is
either a single point (3,) or a matching (N, 3) array, and the returned
:class:`~duval.grassmann.Multivector` carries (N,)-shaped coefficients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grassmann import (ANTI_Z_MASK, Multivector, contract, popcount,
                        wedge)
from .polynomial import Polynomial, divided_difference
from .variety import Hypersurface, SingularPointError, theta_field

TWO_PI_I = 2j * math.pi
DEN_TOL = 1e-12


class CoincidentPointsError(ValueError):
    """Raised when a kernel singular on the diagonal is evaluated at zeta = z."""


def _as_batch(zeta, z):
    zeta = np.asarray(zeta, dtype=complex)
    z = np.asarray(z, dtype=complex)
    return zeta, z


def _cols(a):
    return [a[..., j] for j in range(3)]


def _holo(coeffs) -> Multivector:
    return Multivector.one_form(coeffs, 0)


def _anti_zeta(coeffs) -> Multivector:
    return Multivector.one_form(coeffs, 3)


def _anti_z(coeffs) -> Multivector:
    return Multivector.one_form(coeffs, 6)


def _sum_dbar_wedge_dzeta(anti_offsets) -> Multivector:
    """sum_j (sum over offsets of sign * d<offset>_j) ^ dzeta_j, as a constant multivector."""
    out = Multivector()
    for off, sign in anti_offsets:
        for j in range(3):
            out = out + (Multivector.gen(off + j, sign) ^ Multivector.gen(j))
    return out


# d(etabar) ^ dzeta summed over j, with d(etabar) = dzetabar - dzbar
_DETA_DZETA = _sum_dbar_wedge_dzeta([(3, 1.0), (6, -1.0)])
_DZETABAR_DZETA = _sum_dbar_wedge_dzeta([(3, 1.0)])
_DZBAR_DZETA = _sum_dbar_wedge_dzeta([(6, 1.0)])


def _power_forms(lead: Multivector, step: Multivector, denom, kmax: int):
    """[(2 pi i)^-k lead ^ step^(k-1) / denom^k for k = 1..kmax]."""
    out = []
    cur = lead
    for k in range(1, kmax + 1):
        out.append(cur.scale(1.0 / (TWO_PI_I * denom) ** k))
        cur = wedge(cur, step)
    return out


def bm_components(zeta, z, kmax: int = 3) -> list[Multivector]:
    """[B_1, ..., B_kmax] with B_k = (2 pi i)^-k etabar.dzeta ^ (detabar ^ dzeta)^(k-1) / |eta|^(2k)."""
    zeta, z = _as_batch(zeta, z)
    eta = zeta - z
    nsq = np.sum(np.abs(eta) ** 2, axis=-1)
    if np.any(nsq == 0):
        raise CoincidentPointsError("Bochner-Martinelli form evaluated at zeta = z")
    lead = _holo(_cols(np.conj(eta)))
    return _power_forms(lead, _DETA_DZETA, nsq, kmax)


def bm_form(zeta, z) -> Multivector:
    """B = B_1 + B_2 + B_3."""
    b1, b2, b3 = bm_components(zeta, z, 3)
    return b1 + b2 + b3


def delta_eta(form: Multivector, zeta, z) -> Multivector:
    """Interior product with 2 pi i sum_j eta_j d/dzeta_j."""
    zeta, z = _as_batch(zeta, z)
    eta = zeta - z
    return contract([TWO_PI_I * eta[..., j] for j in range(3)], form)


# ---------------------------------------------------------------------------
# Hefer form

@dataclass(frozen=True)
class HeferForm:
    """h = sum_j h_j(zeta, z) dzeta_j with 2 pi i sum_j (zeta_j - z_j) h_j = f(zeta) - f(z)."""

    components: tuple[Polynomial, Polynomial, Polynomial]

    def values(self, zeta, z):
        zeta, z = _as_batch(zeta, z)
        args = _cols(zeta) + _cols(z)
        cols = [c(*args) for c in self.components]
        return np.stack(np.broadcast_arrays(*cols), axis=-1).astype(complex)

    def form(self, zeta, z) -> Multivector:
        return _holo(_cols(self.values(zeta, z)))

    def delta(self, zeta, z):
        zeta, z = _as_batch(zeta, z)
        return TWO_PI_I * np.sum((zeta - z) * self.values(zeta, z), axis=-1)


def hefer(h: Hypersurface | Polynomial) -> HeferForm:
    f = h.f if isinstance(h, Hypersurface) else h
    if f.nvars != 3:
        raise ValueError("Hefer forms are built for trivariate polynomials")
    comps = tuple(divided_difference(f, j).scale(1 / TWO_PI_I) for j in range(3))
    return HeferForm(comps)


# ---------------------------------------------------------------------------
# weights

def smoothstep5(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * x * (10 - 15 * x + 6 * x * x)


def smoothstep5_deriv(x):
    inside = (x > 0) & (x < 1)
    x = np.clip(x, 0.0, 1.0)
    return np.where(inside, 30 * x * x * (1 - x) ** 2, 0.0)


@dataclass(frozen=True)
class BallWeight:
    """Cut-off weight g = chi - dbar(chi) ^ (s_1 + s_2 + s_3) on the unit ball.

    chi is 1 - S((|x|^2 - R2^2)/(R3^2 - R2^2)) with S the quintic smoothstep, so
    chi = 1 on |x| <= R2 and 0 on |x| >= R3.  With ``role_swap`` the cut-off and
    the section s live in z rather than zeta (compactly supported in z).
    """

    radii: tuple[float, float, float] = (0.5, 0.7, 0.9)
    role_swap: bool = False

    def __post_init__(self):
        r1, r2, r3 = self.radii
        if not 0 < r1 < r2 < r3 <= 1:
            raise ValueError("need 0 < R1 < R2 < R3 <= 1")

    def chi(self, x):
        """chi and its derivative with respect to |x|^2, for points x of shape (..., 3)."""
        _, r2, r3 = self.radii
        span = r3 * r3 - r2 * r2
        t = (np.sum(np.abs(x) ** 2, axis=-1) - r2 * r2) / span
        return 1.0 - smoothstep5(t), -smoothstep5_deriv(t) / span

    def parts(self, zeta, z, kmax: int = 3):
        """(chi, dbar chi, [s_1..s_kmax]); s_k is zero wherever dbar chi vanishes."""
        zeta, z = _as_batch(zeta, z)
        zeta, z = np.broadcast_arrays(zeta, z)
        base = z if self.role_swap else zeta
        chi, dchi = self.chi(base)
        dbar_chi = Multivector.one_form(_cols(dchi[..., None] * base), 6 if self.role_swap else 3)
        active = dchi != 0
        a = np.conj(base)
        den = np.sum(a * (zeta - z), axis=-1)
        if np.any(active & (np.abs(den) < DEN_TOL)):
            raise ValueError("weight section denominator vanishes on the cut-off annulus")
        den = np.where(active, den, 1.0)
        lead = _holo(_cols(np.where(active[..., None], a, 0.0)))
        step = _DZBAR_DZETA if self.role_swap else _DZETABAR_DZETA
        return chi, dbar_chi, _power_forms(lead, step, den, kmax)

    def section(self, zeta, z, kmax: int = 3) -> list[Multivector]:
        """[s_1..s_kmax] evaluated without masking (for identity checks)."""
        zeta, z = _as_batch(zeta, z)
        zeta, z = np.broadcast_arrays(zeta, z)
        base = z if self.role_swap else zeta
        a = np.conj(base)
        den = np.sum(a * (zeta - z), axis=-1)
        if np.any(np.abs(den) < DEN_TOL):
            raise ValueError("weight section denominator vanishes")
        step = _DZBAR_DZETA if self.role_swap else _DZETABAR_DZETA
        return _power_forms(_holo(_cols(a)), step, den, kmax)


def weight_g(w: BallWeight, zeta, z) -> Multivector:
    zeta_a, z_a = _as_batch(zeta, z)
    if not w.role_swap and np.any(np.linalg.norm(z_a, axis=-1) > w.radii[0] + 1e-12):
        raise ValueError("the zeta-cut-off weight needs |z| <= R1")
    chi, dbar_chi, s = w.parts(zeta_a, z_a)
    g = Multivector.scalar(chi)
    for sk in s:
        g = g - wedge(dbar_chi, sk)
    return g


def dbar_numeric_ambient(fn, zeta, z, eps: float = 1e-5) -> Multivector:
    """Central-difference dbar in both zeta and z of a multivector-valued fn(zeta, z)."""
    zeta, z = _as_batch(zeta, z)
    zeta, z = np.broadcast_arrays(zeta, z)
    out = Multivector()
    for which, off in ((0, 3), (1, 6)):
        for j in range(3):
            e = np.zeros(3, dtype=complex)
            e[j] = 1.0
            def at(shift):
                args = [zeta, z]
                args[which] = args[which] + shift * e
                return fn(*args)
            dx = (at(eps) - at(-eps)).scale(1 / (2 * eps))
            dy = (at(1j * eps) - at(-1j * eps)).scale(1 / (2 * eps))
            deriv = (dx + dy.scale(1j)).scale(0.5)
            out = out + wedge(Multivector.gen(off + j), deriv)
    return out


# ---------------------------------------------------------------------------
# kernels

@dataclass
class KernelValue:
    value: Multivector
    omega_factor_norm: np.ndarray


def _point_arrays(point):
    zeta = np.asarray(point.zeta if hasattr(point, "zeta") else point, dtype=complex)
    grad = np.asarray(point.gradient, dtype=complex)
    if np.any(np.linalg.norm(grad, axis=-1) == 0):
        raise SingularPointError("kernel evaluated at the singular point")
    return zeta, grad


def kernel_forms(h: Hypersurface, hef: HeferForm, w: BallWeight, zeta, grad, z,
                 want_k: bool = True, want_p: bool = True):
    """K = theta _| (h ^ (g ^ B)_2) and P = theta _| (h ^ g_2) at batched (zeta, z).

    Only the zeta-holomorphic degree 2 pieces of g ^ B matter: chi B_2 and
    -dbar(chi) ^ s_1 ^ B_1.  P comes from g_2 = -dbar(chi) ^ s_2.
    """
    theta = theta_field(grad)
    hf = hef.form(zeta, z)
    chi, dbar_chi, (s1, s2) = w.parts(zeta, z, kmax=2)
    k_val = p_val = None
    if want_k:
        b1, b2 = bm_components(zeta, z, 2)
        gb = b2.scale(chi) - wedge(wedge(dbar_chi, s1), b1)
        k_val = contract(theta, wedge(hf, gb))
    if want_p:
        p_val = contract(theta, wedge(hf, -wedge(dbar_chi, s2)))
    return k_val, p_val


def assemble_K(h: Hypersurface, hef: HeferForm, w: BallWeight, zeta_point, z) -> KernelValue:
    """Koppelman kernel K(zeta, z), a (2, *) form in zeta.

    Its part of zetabar-degree 1 (no dzbar) pairs with (0,1)-forms and yields
    functions; the part with one dzbar pairs with (0,2)-forms.
    """
    zeta, grad = _point_arrays(zeta_point)
    if np.any(np.linalg.norm(zeta - np.asarray(z), axis=-1) == 0):
        raise CoincidentPointsError("K evaluated on the diagonal")
    k_val, _ = kernel_forms(h, hef, w, zeta, grad, z, want_p=False)
    return KernelValue(k_val, 4 * math.pi / np.linalg.norm(grad, axis=-1))


def assemble_P(h: Hypersurface, hef: HeferForm, w: BallWeight, zeta_point, z) -> KernelValue:
    """Projection kernel P(zeta, z), a (2, 2) form in zeta supported where dbar chi != 0."""
    zeta, grad = _point_arrays(zeta_point)
    _, p_val = kernel_forms(h, hef, w, zeta, grad, z, want_k=False)
    return KernelValue(p_val, 4 * math.pi / np.linalg.norm(grad, axis=-1))


def split_by_z_degree(form: Multivector) -> dict[int, Multivector]:
    out: dict[int, Multivector] = {}
    for m, c in form.terms.items():
        r = popcount(m & ANTI_Z_MASK)
        out.setdefault(r, Multivector())
        out[r] = out[r] + Multivector({m: c})
    return out


def kernel_bound_ratio(value: KernelValue, zeta, z):
    """|K| / (|eta|^-3 + |omega_X(zeta)| |eta|^-2), the quantity bounded by the K1 + K2 split."""
    eta = np.linalg.norm(np.asarray(zeta) - np.asarray(z), axis=-1)
    return value.value.norm() / (eta ** -3.0 + value.omega_factor_norm * eta ** -2.0)


__all__ = [
    "BallWeight", "CoincidentPointsError", "HeferForm", "KernelValue", "assemble_K", "assemble_P",
    "bm_components", "bm_form", "dbar_numeric_ambient", "delta_eta", "hefer", "kernel_bound_ratio",
    "kernel_forms", "split_by_z_degree", "weight_g",
]
