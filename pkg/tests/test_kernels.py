"""Algebraic identities of the kernel ingredients, checked pointwise."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from duval.grassmann import Multivector, component
from duval.kernels import (
    BallWeight, CoincidentPointsError, assemble_K, assemble_P, bm_components, dbar_numeric_ambient,
    delta_eta, hefer, kernel_bound_ratio, split_by_z_degree, weight_g,
)
from duval.variety import DuValType, defining_poly, make_point, sample_annulus, structure_form

TYPES = ["A1", "A3", "D4", "D6", "E6", "E7", "E8"]
seeds = st.integers(min_value=0, max_value=2 ** 31)


def ball(rng, n, radius=1.0):
    x = rng.normal(size=(n, 6))
    x *= (radius * rng.uniform(size=(n, 1)) ** (1 / 6)) / np.linalg.norm(x, axis=1, keepdims=True)
    return x[:, :3] + 1j * x[:, 3:]


class TestHefer:
    @given(st.sampled_from(TYPES), seeds)
    @settings(max_examples=30, deadline=5000)
    def test_division_identity(self, t, seed):
        h = defining_poly(DuValType.parse(t))
        rng = np.random.default_rng(seed)
        zeta, z = ball(rng, 200), ball(rng, 200)
        lhs = hefer(h).delta(zeta, z)
        rhs = h.value(zeta) - h.value(z)
        assert np.max(np.abs(lhs - rhs)) < 1e-12

    @pytest.mark.parametrize("t", TYPES)
    def test_diagonal(self, t):
        h = defining_poly(DuValType.parse(t))
        zeta = ball(np.random.default_rng(0), 100)
        np.testing.assert_allclose(hefer(h).values(zeta, zeta), h.gradient(zeta) / (2j * math.pi), atol=1e-13)


class TestBochnerMartinelli:
    @given(seeds)
    @settings(max_examples=30, deadline=5000)
    def test_contraction_normalisation(self, seed):
        rng = np.random.default_rng(seed)
        zeta, z = ball(rng, 100), ball(rng, 100)
        b1 = bm_components(zeta, z, 1)[0]
        np.testing.assert_allclose(delta_eta(b1, zeta, z)[0], 1.0, atol=1e-11)

    def test_recursion(self):
        """delta_eta B_2 = dbar B_1 away from the diagonal."""
        rng = np.random.default_rng(3)
        zeta, z = ball(rng, 50), ball(rng, 50)
        z = z + 0.5 * (z - zeta)  # keep pairs apart
        lhs = delta_eta(bm_components(zeta, z, 2)[1], zeta, z)
        rhs = dbar_numeric_ambient(lambda a, b: bm_components(a, b, 1)[0], zeta, z, 1e-5)
        scale = float(np.max(lhs.max_abs()))
        assert float(np.max((lhs - rhs).max_abs())) < 1e-6 * scale

    def test_degrees(self):
        zeta, z = np.array([0.3, 0.1j, 0.0]), np.array([0.0, 0.2, 0.1])
        for k, b in enumerate(bm_components(zeta, z, 3), start=1):
            assert component(b, k, None, None).terms.keys() == b.terms.keys()
            assert b.degree == 2 * k - 1


class TestWeight:
    def test_section(self):
        rng = np.random.default_rng(1)
        zeta, z = ball(rng, 300), ball(rng, 300, 0.5)
        s1 = BallWeight().section(zeta, z, 1)[0]
        np.testing.assert_allclose(delta_eta(s1, zeta, z)[0], 1.0, atol=1e-11)

    def test_closed(self):
        """(delta_eta - dbar) g = 0."""
        rng = np.random.default_rng(2)
        w = BallWeight()
        zeta, z = ball(rng, 400), ball(rng, 400, 0.5)
        fn = lambda a, b: weight_g(w, a, b)
        resid = delta_eta(fn(zeta, z), zeta, z) - dbar_numeric_ambient(fn, zeta, z, 1e-5)
        assert float(np.max(resid.max_abs())) < 1e-6

    def test_plateau(self):
        g = weight_g(BallWeight(), np.array([0.2, 0.1, 0.0]), np.array([0.0, 0.1, 0.3]))
        assert set(g.terms) == {0} and g[0] == 1.0

    def test_radii_validation(self):
        with pytest.raises(ValueError):
            BallWeight((0.5, 0.4, 0.9))
        with pytest.raises(ValueError):
            weight_g(BallWeight(), np.zeros(3), np.array([0.6, 0, 0]))


class TestStructureFormExample:
    @pytest.mark.parametrize("c", [1.0, 2.5 - 1j, 1j])
    def test_single_partial(self, c):
        h = defining_poly(DuValType.parse("A1"))
        om = structure_form(h, np.array([c, 0, 0]))
        assert set(om.terms) == {0b110}
        assert om[0b110] == pytest.approx(2j * math.pi / c)


class TestKernels:
    h = defining_poly(DuValType.parse("D4"))

    def cloud(self):
        return sample_annulus(self.h, 0.05, 0.95, 3000, seed=7)

    def test_diagonal_raises(self):
        c = self.cloud()
        p = make_point(self.h, c.zeta[0])
        with pytest.raises(CoincidentPointsError):
            assemble_K(self.h, hefer(self.h), BallWeight(), p, p.zeta)

    def test_p_supported_on_cutoff_annulus(self):
        c = self.cloud()
        z = c.zeta[np.argmin(np.linalg.norm(c.zeta, axis=1) - 0.3 + 10 * (np.linalg.norm(c.zeta, axis=1) > 0.5))]
        pv = assemble_P(self.h, hefer(self.h), BallWeight(), c, z).value.norm()
        r = np.linalg.norm(c.zeta, axis=1)
        assert np.all(pv[(r < 0.7) | (r > 0.9)] == 0)
        assert np.any(pv[(r > 0.72) & (r < 0.88)] > 0)

    def test_k_bidegree(self):
        """K is of holomorphic degree 2 in zeta and carries at most one dzbar."""
        c = self.cloud()
        zp = c.zeta[np.linalg.norm(c.zeta, axis=1) < 0.5][0]
        sub = c.subset(np.arange(100, 200))
        kv = assemble_K(self.h, hefer(self.h), BallWeight(), sub, zp)
        parts = split_by_z_degree(kv.value)
        assert set(parts) <= {0, 1}
        total = sum(parts.values(), Multivector())
        assert float(np.max((total - kv.value).max_abs())) == 0
        for m in kv.value.terms:
            assert bin(m & 0b111).count("1") == 2

    def test_bound_ratio_finite(self):
        c = self.cloud()
        zp = c.zeta[np.linalg.norm(c.zeta, axis=1) < 0.5][0]
        keep = np.linalg.norm(c.zeta - zp, axis=1) > 0
        sub = c.subset(keep)
        kv = assemble_K(self.h, hefer(self.h), BallWeight(), sub, zp)
        ratio = kernel_bound_ratio(kv, sub.zeta, zp)
        assert np.all(np.isfinite(ratio)) and np.max(ratio) < 1.0


class TestDocumentedExamples:
    def test_bm_unit_displacement_bounded(self):
        rng = np.random.default_rng(4)
        zeta = ball(rng, 10_000)
        d = rng.normal(size=(10_000, 6))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        z = zeta + d[:, :3] + 1j * d[:, 3:]
        b1 = bm_components(zeta, z, 1)[0]
        assert np.max(b1.norm()) <= np.sqrt(2) / (2 * math.pi) + 1e-12

    @given(st.floats(0.1, 10.0), seeds)
    @settings(max_examples=30, deadline=5000)
    def test_bm_homogeneity(self, lam, seed):
        rng = np.random.default_rng(seed)
        zeta, z = ball(rng, 20), ball(rng, 20)
        for k, (a, b) in enumerate(zip(bm_components(zeta, z, 3), bm_components(lam * zeta, lam * z, 3)), 1):
            for m, c in a.terms.items():
                np.testing.assert_allclose(b[m], lam ** (1 - 2 * k) * c, rtol=1e-9)

    def test_hefer_linear(self):
        from duval.polynomial import Polynomial
        hf = hefer(Polynomial(3, {(1, 0, 0): 1}))
        v = hf.values(np.array([0.3, 0.2j, 0.1]), np.array([0.1, 0.0, 0.5]))
        np.testing.assert_allclose(v, [1 / (2j * math.pi), 0, 0])

    def test_a1_hefer_diagonal(self):
        h = defining_poly(DuValType.parse("A1"))
        z = np.array([0.3 + 0.1j, -0.2, 0.5j])
        np.testing.assert_allclose(hefer(h).values(z, z), np.array([z[1], z[0], -2 * z[2]]) / (2j * math.pi))

    def test_weight_outside(self):
        g = weight_g(BallWeight(), np.array([0.95, 0, 0]), np.array([0.1, 0, 0]))
        assert g.is_zero

    def test_weight_diagonal(self):
        """g_00(z, z) = 1 for |z| <= R1."""
        z = ball(np.random.default_rng(5), 200, 0.5)
        np.testing.assert_allclose(weight_g(BallWeight(), z, z)[0], 1.0)

    def test_k_reduces_inside(self):
        """Inside R2 the weight is 1, so K only sees the B_2 term: no dzetabar-free dzbar-free part."""
        h = defining_poly(DuValType.parse("A1"))
        c = sample_annulus(h, 0.2, 0.6, 500, 1)
        kv = assemble_K(h, hefer(h), BallWeight(), c, np.array([0.05, 0.05, 0.05]))
        for m in kv.value.terms:
            # every term carries exactly one antiholomorphic differential from dbar b
            assert bin(m & 0b111111000).count("1") == 1

    def test_p_properties(self):
        h = defining_poly(DuValType.parse("E6"))
        c = sample_annulus(h, 0.6, 0.95, 5000, 2)
        sups = []
        for z in ball(np.random.default_rng(6), 8, 0.5):
            pv = assemble_P(h, hefer(h), BallWeight(), c, z)
            assert all(m & 0b111000000 == 0 for m in pv.value.terms)
            sups.append(np.max(pv.value.norm() / pv.omega_factor_norm))
        # one constant serves every z in the inner ball
        assert max(sups) < 1.0

    def test_k_bound_single_constant(self):
        """|K| / (|eta|^-3 + |omega| |eta|^-2) is bounded by one constant over 10^4 A1 pairs."""
        h = defining_poly(DuValType.parse("A1"))
        c = sample_annulus(h, 0.01, 0.9, 10_000, 3)
        rng = np.random.default_rng(0)
        zs = c.zeta[rng.permutation(len(c))]
        inner = np.linalg.norm(zs, axis=1) <= 0.5
        zeta, zz = c.zeta[inner], zs[inner]
        keep = np.linalg.norm(zeta - zz, axis=1) > 0
        pts = c.subset(np.flatnonzero(inner)[keep])
        kv = assemble_K(h, hefer(h), BallWeight(), pts, zz[keep])
        ratio = kernel_bound_ratio(kv, pts.zeta, zz[keep])
        assert np.max(ratio) < 0.2
