"""Cut-off family, condition (*) integrals, shell masses and exponent bookkeeping."""
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from duval.dynkin import q_bound
from duval.experiments import closed_test_form
from duval.operators import zero_form
from duval.star_lq import (
    DBAR_MU_CONSTANT, CutoffFamily, QuasiShellSampler, appendix_scaling, dbar_bound_ratio,
    detect_qX, dyadic_shells, exponent_table, fit_slope, i1k_integral, lam, mu_k, shell_cloud,
    shell_mass, star_integral,
)
from duval.variety import DuValType, defining_poly, weighted_threshold

A1 = defining_poly(DuValType.parse("A1"))


def radial(x):
    return np.array([[x, 0, 0]], dtype=complex)


class TestCutoff:
    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_outside_shell(self, k):
        v, d = mu_k(CutoffFamily(k), radial(0.5))
        assert v[0] == 1.0 and np.all(d == 0)
        lo, _ = CutoffFamily(k).shell
        v, d = mu_k(CutoffFamily(k), radial(lo / 2))
        assert v[0] == 0.0 and np.all(d == 0)

    @given(st.integers(1, 4), st.floats(0.0, 1.0), st.sampled_from(["quintic", "cubic"]))
    @settings(max_examples=80, deadline=2000)
    def test_values_and_bound(self, k, t, profile):
        c = CutoffFamily(k, profile)
        lo, hi = c.shell
        x = math.exp(math.log(lo) + t * (math.log(hi) - math.log(lo)))
        v, _ = mu_k(c, radial(x))
        assert 0.0 <= v[0] <= 1.0
        assert dbar_bound_ratio(c, radial(x))[0] <= DBAR_MU_CONSTANT

    def test_derivative_matches_difference(self):
        c = CutoffFamily(1)
        lo, hi = c.shell
        z = np.array([[math.sqrt(lo * hi) * 0.6, math.sqrt(lo * hi) * 0.8j, 0]])
        _, d = mu_k(c, z)
        eps = 1e-8 * np.linalg.norm(z)
        e = np.array([[eps, 0, 0]])
        fx = (mu_k(c, z + e)[0] - mu_k(c, z - e)[0]) / (2 * eps)
        fy = (mu_k(c, z + 1j * e)[0] - mu_k(c, z - 1j * e)[0]) / (2 * eps)
        assert abs(0.5 * (fx + 1j * fy)[0] - d[0, 0]) < 1e-5 * abs(d[0, 0])

    def test_invalid(self):
        with pytest.raises(ValueError):
            CutoffFamily(0)
        with pytest.raises(ValueError):
            CutoffFamily(1, "linear")


class TestStar:
    def test_zero_form(self):
        cloud = shell_cloud(A1, 1, 5000, 0)
        res = star_integral(A1, zero_form(1), 1, cloud)
        assert res.value == 0

    def test_decay_a1(self):
        phi = closed_test_form()
        vals = [abs(star_integral(A1, phi, k, shell_cloud(A1, k, 40_000, k)).value) for k in (1, 2, 3)]
        assert vals[0] > vals[1] > vals[2]

    def test_i1k_bounded(self):
        v1 = [i1k_integral(1, k, 800) for k in (1, 2, 3)]
        v2 = [i1k_integral(2, k, 800) for k in (1, 2, 3)]
        assert v1[0] > v1[1] > v1[2]
        assert max(v2) <= 1.01 * v2[0]


class TestShellMass:
    shells = dyadic_shells(3, 14)

    @pytest.mark.parametrize("t", ["A1", "D4", "E6"])
    def test_volume_slope(self, t):
        h = defining_poly(DuValType.parse(t))
        sm = shell_mass(h, 0.0, self.shells, 100_000, 1)
        s, se = fit_slope(sm.r_lo, sm.r_hi, sm.mass, sm.error)
        assert abs(s - 4.0) < 0.1

    def test_a1_cone_volume(self):
        sm = shell_mass(A1, 0.0, self.shells, 100_000, 2)
        exact = math.pi ** 2 * (sm.r_hi ** 4 - sm.r_lo ** 4)
        assert np.all(np.abs(sm.mass - exact) < 5 * sm.error + 1e-3 * exact)

    @pytest.mark.parametrize("q,slope", [(2.0, 2.0), (4.0, 0.0)])
    def test_a1_slopes(self, q, slope):
        sm = shell_mass(A1, q, self.shells, 100_000, 3)
        s, _ = fit_slope(sm.r_lo, sm.r_hi, sm.mass, sm.error)
        assert abs(s - slope) < 0.15

    def test_slope_monotone_in_q(self):
        sampler = QuasiShellSampler(defining_poly(DuValType.parse("D5")), self.shells, 50_000, 4)
        slopes = [fit_slope(*(lambda m: (m.r_lo, m.r_hi, m.mass, m.error))(sampler.masses(q)))[0]
                  for q in (0.0, 1.0, 2.0, 3.0, 4.0)]
        assert all(a > b for a, b in zip(slopes, slopes[1:]))

    def test_seeded(self):
        a = shell_mass(A1, 2.0, self.shells[:3], 2000, 5)
        b = shell_mass(A1, 2.0, self.shells[:3], 2000, 5)
        np.testing.assert_array_equal(a.mass, b.mass)

    @pytest.mark.parametrize("t", ["A1", "A3", "E6"])
    def test_detect_quick(self, t):
        """A small run lands near the weighted threshold and below the multiplicity bound."""
        h = defining_poly(DuValType.parse(t))
        res = detect_qX(h, 200_000, 0, j_range=(3, 14))
        assert abs(res.estimate - float(weighted_threshold(h.type))) < 0.1
        assert res.estimate <= float(q_bound(h.type)) + 3 * res.uncertainty + 1e-9


class TestAppendix:
    def test_radial(self):
        assert abs(appendix_scaling(A1, 2.0, "radial", samples=100_000).exponent - 2.0) < 0.1
        assert abs(appendix_scaling(A1, 0.0, "radial", samples=100_000).exponent - 4.0) < 0.1

    def test_log_weighted_bounded(self):
        assert appendix_scaling(A1, 4.0, "log-weighted", samples=100_000).bounded


class TestExponents:
    def test_a_row(self):
        row = exponent_table(["A3"])["A3"]
        assert (row.q, row.p, row.p_hat, row.holder_cap) == (4, Fraction(4, 3), 2, 1)

    def test_e7_row(self):
        row = exponent_table()["E7"]
        assert (row.q, row.p, row.p_hat, row.holder_cap) == (
            Fraction(5, 2), Fraction(5, 3), Fraction(20, 7), Fraction(2, 5))
        assert row.q_quasihomogeneous == Fraction(20, 9)

    def test_lam(self):
        assert lam(2) == Fraction(4, 3)

    @pytest.mark.parametrize("t", ["A1", "A5", "D4", "D7", "E6", "E7", "E8"])
    def test_table_matches_dynkin_bound(self, t):
        row = exponent_table([t])[t]
        assert row.q == q_bound(t)
        assert row.q_quasihomogeneous <= row.q
