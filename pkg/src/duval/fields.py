"""Smooth ambient test forms with analytic dbar, used by experiments and tests."""
from __future__ import annotations

import numpy as np

from .operators import FormField, PAIRS


def bump(x, a: float, b: float):
    """C^3 bump in x = |zeta|^2 supported in (a, b), with value and x-derivative.

    Normalized so the maximum is 1.
    """
    x = np.asarray(x, dtype=float)
    inside = (x > a) & (x < b)
    mid = 0.5 * (a + b)
    norm = ((mid - a) * (b - mid)) ** 4
    p, q = np.where(inside, x - a, 0.0), np.where(inside, b - x, 0.0)
    val = (p * q) ** 4 / norm
    der = 4 * (p * q) ** 3 * (q - p) / norm
    return val, der


def plateau(x, a: float, b: float):
    """C^2 profile equal to 1 for x <= a and 0 for x >= b, with x-derivative."""
    x = np.asarray(x, dtype=float)
    t = np.clip((x - a) / (b - a), 0.0, 1.0)
    s = t * t * t * (10 - 15 * t + 6 * t * t)
    ds = np.where((t > 0) & (t < 1), 30 * t * t * (1 - t) ** 2 / (b - a), 0.0)
    return 1.0 - s, -ds


def _sq(z):
    return np.sum(np.abs(z) ** 2, axis=-1)


def bump_function(r_lo: float, r_hi: float, holo=None) -> FormField:
    """u = bump(|zeta|^2) q(zeta) with q holomorphic (default 1), supported in r_lo < |zeta| < r_hi."""
    a, b = r_lo ** 2, r_hi ** 2
    q = holo or (lambda z: np.ones(len(z), complex))

    def amb(z):
        return bump(_sq(z), a, b)[0] * q(z)

    def dbar(z):
        _, d = bump(_sq(z), a, b)
        return (d * q(z))[:, None] * z

    return FormField(0, amb, dbar, "C3-bump")


def exact_bump_form(r_lo: float, r_hi: float, holo=None) -> FormField:
    """phi = dbar u for u = bump_function(r_lo, r_hi, holo); dbar phi = 0."""
    u = bump_function(r_lo, r_hi, holo)
    return FormField(1, u.dbar_ambient, lambda z: np.zeros((len(z), 3), complex), "C3-exact")


def twisted_bump_form(r_lo: float, r_hi: float, i: int = 0, j: int = 1) -> FormField:
    """phi = bump(|zeta|^2) conj(zeta_i) dzetabar_j, not dbar-closed (for i = j it is)."""
    a, b = r_lo ** 2, r_hi ** 2

    def amb(z):
        v, _ = bump(_sq(z), a, b)
        out = np.zeros((len(z), 3), complex)
        out[:, j] = v * np.conj(z[:, i])
        return out

    def dbar(z):
        v, d = bump(_sq(z), a, b)
        # dbar(c dzbar_j) = sum_k d_k c dzbar_k ^ dzbar_j, d_k c = d z_k conj(z_i) + v [k == i]
        grads = d[:, None] * z * np.conj(z[:, i])[:, None]
        grads[:, i] += v
        out = np.zeros((len(z), 3), complex)
        for p, (k, l) in enumerate(PAIRS):
            if l == j:
                out[:, p] += grads[:, k]
            elif k == j:
                out[:, p] -= grads[:, l]
        return out

    return FormField(1, amb, dbar, "C3-bump")


def constant_form(coeffs) -> FormField:
    """sum_j c_j dzetabar_j; smooth and dbar-closed across the singular point."""
    c = np.asarray(coeffs, dtype=complex)
    return FormField(1, lambda z: np.broadcast_to(c, (len(z), 3)).copy(),
                     lambda z: np.zeros((len(z), 3), complex), "polynomial")


def radial_closed_form(scale: complex = 1.0) -> FormField:
    """scale * dbar |zeta|^2 = scale * sum_j zeta_j dzetabar_j."""
    return FormField(1, lambda z: scale * z, lambda z: np.zeros((len(z), 3), complex), "polynomial")


def cutoff_constant_form(coeffs, r_in: float, r_out: float) -> FormField:
    """plateau(|zeta|^2) * sum_j c_j dzetabar_j: bounded, equal to the constant form near 0."""
    c = np.asarray(coeffs, dtype=complex)
    a, b = r_in ** 2, r_out ** 2

    def amb(z):
        v, _ = plateau(_sq(z), a, b)
        return v[:, None] * c[None, :]

    def dbar(z):
        _, d = plateau(_sq(z), a, b)
        grads = d[:, None] * z
        out = np.zeros((len(z), 3), complex)
        for p, (k, l) in enumerate(PAIRS):
            out[:, p] = grads[:, k] * c[l] - grads[:, l] * c[k]
        return out

    return FormField(1, amb, dbar, "C2-cutoff")


def bump_top_form(r_lo: float, r_hi: float, coeffs=(1.0, 0.0, 0.0)) -> FormField:
    """(0,2)-form bump(|zeta|^2) * sum over pairs c_p dzetabar_I_p."""
    c = np.asarray(coeffs, dtype=complex)
    a, b = r_lo ** 2, r_hi ** 2
    return FormField(2, lambda z: bump(_sq(z), a, b)[0][:, None] * c[None, :],
                     smoothness_tag="C3-bump")


def exact_top_form(r_lo: float, r_hi: float, i: int = 0, j: int = 1) -> FormField:
    """dbar of the compactly supported (0,1)-form twisted_bump_form(r_lo, r_hi, i, j)."""
    return FormField(2, twisted_bump_form(r_lo, r_hi, i, j).dbar_ambient, smoothness_tag="C3-exact")
