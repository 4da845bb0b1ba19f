"""Normal forms, charts, structure form and the annulus sampler."""
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from duval.grassmann import DU, DV, Multivector, substitute, wedge
from duval.variety import (
    BranchLocusError, CoveringChart, DuValType, GraphChart, SingularPointError, covering_An,
    cached_sample_annulus, defining_poly, df_form, graph_chart, load_cloud, omega_norm,
    pullback_volume_An, sample_annulus, save_cloud, structure_form, tangent_chart,
    tangent_frame, weighted_threshold,
)

ALL = ["A1", "A2", "A3", "D4", "D5", "E6", "E7", "E8"]
unit = st.complex_numbers(min_magnitude=0.05, max_magnitude=1.0, allow_nan=False, allow_infinity=False)


class TestTypes:
    @pytest.mark.parametrize("bad", ["A0", "D3", "E9", "F4", "", "A-1"])
    def test_reject(self, bad):
        with pytest.raises(ValueError):
            DuValType.parse(bad)

    def test_parse(self):
        assert str(DuValType.parse(" e_8 ")) == "E8"

    @pytest.mark.parametrize("t", ALL)
    def test_quasi_homogeneous(self, t):
        h = defining_poly(DuValType.parse(t))
        rng = np.random.default_rng(1)
        z = rng.normal(size=3) + 1j * rng.normal(size=3)
        lam = 0.7
        scaled = z * lam ** np.array(h.weights)
        assert abs(h.value(scaled) - lam ** h.qdegree * h.value(z)) < 1e-10 * (1 + abs(h.value(z)))

    @pytest.mark.parametrize("t,q", [("A1", 4), ("A2", Fraction(10, 3)), ("D4", Fraction(8, 3)),
                                     ("E6", Fraction(7, 3)), ("E8", Fraction(32, 15))])
    def test_threshold(self, t, q):
        assert weighted_threshold(DuValType.parse(t)) == q


class TestStructureForm:
    @pytest.mark.parametrize("t", ALL)
    def test_omega_df(self, t):
        """omega ^ df is 2 pi i dzeta_123 on X and |omega| = 4 pi / |df|."""
        h = defining_poly(DuValType.parse(t))
        cloud = sample_annulus(h, 0.3, 0.9, 200, seed=3)
        om = structure_form(h, cloud)
        top = wedge(om, df_form(cloud))
        np.testing.assert_allclose(top[0b111], 2j * math.pi, atol=1e-12)
        gn = np.linalg.norm(cloud.gradient, axis=1)
        np.testing.assert_allclose(omega_norm(h, cloud), 4 * math.pi / gn, rtol=1e-12)

    def test_singular(self):
        h = defining_poly(DuValType.parse("A1"))
        with pytest.raises(SingularPointError):
            structure_form(h, np.zeros(3, complex))


class TestCharts:
    @given(st.integers(1, 5), unit, unit)
    @settings(max_examples=40, deadline=5000)
    def test_covering_lands_on_x(self, n, s, t):
        p = covering_An(n, s, t)
        h = defining_poly(DuValType("A", n))
        assert abs(h.value(p.zeta)) < 1e-12

    @given(st.integers(1, 4), unit, unit)
    @settings(max_examples=40, deadline=5000)
    def test_structure_form_pullback(self, n, s, t):
        """Substituting the covering differentials gives a constant multiple of ds ^ dt."""
        p = covering_An(n, s, t)
        h = defining_poly(DuValType("A", n))
        ds, dt = Multivector.gen(DU), Multivector.gen(DV)
        rules = {0: ds * ((n + 1) * s ** n), 1: dt * ((n + 1) * t ** n), 2: ds * t + dt * s}
        out = substitute(structure_form(h, p.gradient), rules)
        assert set(out.terms) == {(1 << DU) | (1 << DV)}
        assert abs(out[(1 << DU) | (1 << DV)]) == pytest.approx(2 * math.pi * (n + 1), rel=1e-8)

    @given(st.integers(1, 4), unit, unit)
    @settings(max_examples=40, deadline=5000)
    def test_pullback_density(self, n, s, t):
        p = covering_An(n, s, t)
        gn2 = float(np.sum(np.abs(p.gradient) ** 2))
        assert pullback_volume_An(n, s, t) == pytest.approx(2 * (n + 1) ** 2 * gn2, rel=1e-10)

    def test_pullback_density_example(self):
        assert pullback_volume_An(1, 1, 0) == 8
        assert pullback_volume_An(1, 0, 0) == 0

    @pytest.mark.parametrize("t", ["D4", "D6", "E6", "E7", "E8"])
    def test_graph_chart(self, t):
        h = defining_poly(DuValType.parse(t))
        for sheet in (1, -1):
            p = graph_chart(h, sheet, 0.3 + 0.1j, -0.2 + 0.25j)
            assert abs(h.value(p.zeta)) < 1e-12

    def test_graph_chart_rejects_a(self):
        with pytest.raises(ValueError):
            graph_chart(defining_poly(DuValType.parse("A2")), 1, 0.1, 0.1)

    def test_branch_locus(self):
        h = defining_poly(DuValType.parse("E6"))
        with pytest.raises(BranchLocusError):
            graph_chart(h, 1, -1.0, 1.0)
        with pytest.raises(BranchLocusError):
            graph_chart(h, 1, 0.0, 0.0)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_covering_radius_bounds_are_tight(self, n):
        chart = CoveringChart(n)
        lo, hi = chart.radius_bounds(0.5, 0.9)
        rng = np.random.default_rng(0)
        d = rng.normal(size=(4000, 4))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        p = (d[:, :2] + 1j * d[:, 2:])
        inner = np.linalg.norm(chart.embed(p * lo)[0], axis=1)
        outer = np.linalg.norm(chart.embed(p * hi)[0], axis=1)
        # below lo every image is inside r_in, beyond hi every image is outside r_out
        assert inner.max() <= 0.5 * (1 + 1e-5) and inner.max() > 0.49
        assert outer.min() >= 0.9 * (1 - 1e-5) and outer.min() < 0.92

    def test_tangent_chart(self):
        h = defining_poly(DuValType.parse("D4"))
        base = graph_chart(h, 1, 0.3, 0.2)
        t1, t2 = tangent_frame(h, base.gradient)
        w = np.array([[1e-3, 2e-3j], [0, 0]])
        zeta, grad, jac = tangent_chart(h, base.zeta, t1, t2, w)
        assert np.max(np.abs(h.value(zeta))) < 1e-12
        np.testing.assert_allclose(zeta[1], base.zeta, atol=1e-14)
        np.testing.assert_allclose(jac[1][:, 0], t1, atol=1e-12)


class TestSampler:
    @pytest.mark.parametrize("r_in,r_out", [(0.2, 0.5), (0.5, 1.0)])
    def test_cone_volume(self, r_in, r_out):
        """The A1 cone has degree 2, so its annulus volume is pi^2 (R^4 - r^4)."""
        h = defining_poly(DuValType.parse("A1"))
        cloud = sample_annulus(h, r_in, r_out, 100_000, seed=5)
        vol, err = cloud.estimate(np.ones(len(cloud)))
        exact = math.pi ** 2 * (r_out ** 4 - r_in ** 4)
        assert abs(vol - exact) < 4 * err + 1e-12
        assert err / exact < 0.01

    def test_chart_kinds_agree(self):
        h = defining_poly(DuValType.parse("A2"))
        a = sample_annulus(h, 0.4, 0.8, 100_000, seed=1, chart=CoveringChart(2))
        b = sample_annulus(h, 0.4, 0.8, 100_000, seed=2, chart=GraphChart(h, "rational"))
        va, ea = a.estimate(np.ones(len(a)))
        vb, eb = b.estimate(np.ones(len(b)))
        assert abs(va - vb) < 4 * math.hypot(ea, eb)

    def test_reproducible(self):
        h = defining_poly(DuValType.parse("A2"))
        a = sample_annulus(h, 0.3, 0.6, 5000, seed=9)
        b = sample_annulus(h, 0.3, 0.6, 5000, seed=9)
        np.testing.assert_array_equal(a.zeta, b.zeta)
        np.testing.assert_array_equal(a.weight, b.weight)

    def test_points_in_region(self):
        h = defining_poly(DuValType.parse("E7"))
        c = sample_annulus(h, 0.3, 0.6, 5000, seed=0)
        r = np.linalg.norm(c.zeta, axis=1)
        assert len(c) > 0 and np.all((r >= 0.3) & (r < 0.6))
        assert np.max(np.abs(h.value(c.zeta))) < 1e-12

    def test_bad_region(self):
        h = defining_poly(DuValType.parse("A1"))
        with pytest.raises(ValueError):
            sample_annulus(h, 0.5, 0.4, 10, 0)
        assert len(sample_annulus(h, 0.5, 0.5, 10, 0)) == 0

    @pytest.mark.parametrize("t", ["A3", "D5"])
    def test_save_load_roundtrip(self, t, tmp_path):
        h = defining_poly(DuValType.parse(t))
        c = sample_annulus(h, 0.3, 0.7, 3000, seed=4)
        d = load_cloud(save_cloud(c, tmp_path / "c.cloud"))
        np.testing.assert_array_equal(c.zeta, d.zeta)
        np.testing.assert_array_equal(c.weight, d.weight)
        np.testing.assert_array_equal(c.sheet, d.sheet)
        np.testing.assert_array_equal(c.strata, d.strata)
        vals = np.abs(c.zeta[:, 0]) ** 2
        assert c.estimate(vals) == d.estimate(vals)

    def test_cache_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("DUVAL_CACHE_DIR", str(tmp_path))
        h = defining_poly(DuValType.parse("A1"))
        a = cached_sample_annulus(h, 0.3, 0.6, 2000, 1)
        assert len(list(tmp_path.iterdir())) == 1
        b = cached_sample_annulus(h, 0.3, 0.6, 2000, 1)
        np.testing.assert_array_equal(a.weight, b.weight)

    def test_not_a_cache_file(self, tmp_path):
        p = tmp_path / "x.cloud"
        p.write_bytes(b"garbage!")
        with pytest.raises(ValueError):
            load_cloud(p)


class TestDocumentedExamples:
    def test_defining_poly(self):
        a1 = defining_poly(DuValType.parse("A1"))
        assert a1.value(np.array([1, 1, 1])) == 0
        np.testing.assert_array_equal(a1.gradient(np.array([1, 0, 0])), [0, 1, 0])
        e8 = defining_poly(DuValType.parse("E8"))
        assert e8.value(np.zeros(3)) == 0 and not np.any(e8.gradient(np.zeros(3)))

    def test_covering(self):
        np.testing.assert_allclose(covering_An(1, 1, 2).zeta, [1, 4, 2])
        np.testing.assert_allclose(covering_An(2, 1, 1).zeta, [1, 1, 1])
        p = covering_An(1, 1j, 1)
        np.testing.assert_allclose(p.zeta, [-1, 1, 1j])

    def test_graph_chart_examples(self):
        d4 = defining_poly(DuValType.parse("D4"))
        p = graph_chart(d4, 1, 1.0, 1.0)
        assert abs(p.zeta[0] ** 2 + 2) < 1e-12 and abs(d4.value(p.zeta)) < 1e-12
        e6 = defining_poly(DuValType.parse("E6"))
        q = graph_chart(e6, 1, 1.0, 0.0)
        assert abs(abs(q.zeta[0]) - 1) < 1e-12 and abs(e6.value(q.zeta)) < 1e-12

    def test_graph_density(self):
        """density = 1 + |dzeta_1/du|^2 + |dzeta_1/dv|^2; on E6 at (0, 1) only the v-slope survives."""
        e6 = defining_poly(DuValType.parse("E6"))
        chart = GraphChart(e6, "root")
        # g = u^3 + v^4: g_u = 0, g_v = 4 and zeta_1 = i, so |dzeta_1/dv| = 2
        assert chart.density(np.array([[0j, 1 + 0j]]), 1)[0] == pytest.approx(5.0, rel=1e-12)

    @pytest.mark.parametrize("t", ["A1", "D4", "D5", "E6", "E7", "E8"])
    def test_ball_volume_slope(self, t):
        """Vol(X cap B_r) ~ pi^2 r^4 as r -> 0 (every du Val point has multiplicity 2)."""
        h = defining_poly(DuValType.parse(t))
        radii = 10.0 ** -np.arange(1, 5)
        vols = np.array([sample_annulus(h, 0.0, r, 40_000, 3).total_weight for r in radii])
        assert abs(np.polyfit(np.log(radii), np.log(vols), 1)[0] - 4) < 0.1
        assert abs(vols[-1] / (math.pi ** 2 * radii[-1] ** 4) - 1) < 0.02

    def test_seed_agreement(self):
        h = defining_poly(DuValType.parse("A1"))
        a = sample_annulus(h, 0.5, 1.0, 50_000, 1)
        b = sample_annulus(h, 0.5, 1.0, 50_000, 2)
        va, ea = a.estimate(np.ones(len(a)))
        vb, eb = b.estimate(np.ones(len(b)))
        assert abs(va - vb) < 3 * math.hypot(ea, eb)

    def test_covering_agrees_with_graph_chart(self):
        """A radial test function integrated through both parametrisations of A2."""
        h = defining_poly(DuValType.parse("A2"))
        g = lambda c: np.exp(-4 * np.linalg.norm(c.zeta, axis=1) ** 2)
        a = sample_annulus(h, 0.1, 0.9, 100_000, 7, chart=CoveringChart(2))
        b = sample_annulus(h, 0.1, 0.9, 100_000, 8, chart=GraphChart(h, "rational"))
        va, ea = a.estimate(g(a))
        vb, eb = b.estimate(g(b))
        assert abs(va - vb) < 3 * math.hypot(ea, eb)

    def test_omega_norm(self):
        h = defining_poly(DuValType.parse("A1"))
        c = sample_annulus(h, 0.05, 1.0, 1000, 2)
        ratio = omega_norm(h, c) * np.linalg.norm(c.gradient, axis=1)
        assert np.ptp(ratio) / ratio.mean() < 1e-8
        small = [omega_norm(h, covering_An(1, x, x).gradient) for x in (1e-1, 1e-2, 1e-3)]
        assert small[0] < small[1] < small[2]

    @pytest.mark.parametrize("t", ["A1", "D5", "E8"])
    def test_tangent_frame(self, t):
        h = defining_poly(DuValType.parse(t))
        c = sample_annulus(h, 0.2, 0.8, 500, 1)
        t1, t2 = tangent_frame(h, c.gradient)
        for a in (t1, t2):
            assert np.max(np.abs(np.sum(a * c.gradient, axis=1))) < 1e-12
        assert np.max(np.abs(np.sum(t1 * np.conj(t2), axis=1))) < 1e-12
        np.testing.assert_allclose(np.linalg.norm(t1, axis=1), 1, atol=1e-12)
        np.testing.assert_allclose(np.linalg.norm(t2, axis=1), 1, atol=1e-12)

    def test_tangent_frame_axis(self):
        t1, t2 = tangent_frame(None, np.array([[1.0, 0, 0]]))
        assert abs(t1[0, 0]) < 1e-15 and abs(t2[0, 0]) < 1e-15

    def test_tangent_frame_rotation(self):
        """The tangent plane rotates with the ambient coordinates (compare projectors)."""
        rng = np.random.default_rng(3)
        grad = rng.normal(size=3) + 1j * rng.normal(size=3)
        u, _ = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
        proj = lambda g: (lambda f: np.outer(f[0][0], np.conj(f[0][0])) + np.outer(f[1][0], np.conj(f[1][0])))(
            tangent_frame(None, g[None]))
        # tangent vectors satisfy sum g_j v_j = 0, so they rotate by u when g rotates by conj(u)
        rotated = u @ proj(grad) @ np.conj(u.T)
        np.testing.assert_allclose(proj(grad @ np.conj(u.T)), rotated, atol=1e-12)
