import math

import numpy as np
import pytest

from sel_lab.karamata import KFunction, analyze_nonlinearity, analyze_singular_term
from sel_lab.profile import (
    VARIANT_K,
    VARIANT_SQRT_K,
    build_profile,
    predicted_rate,
    profile_ode_g,
    tail_map,
)


@pytest.fixture(scope="module")
def cubic_profile():
    f = analyze_nonlinearity("t^3")
    k = KFunction.power(1.0, nu=1.0)
    return build_profile(f, k, variant=VARIANT_K, c=1.0,
                         t_grid=2.0 ** (-np.arange(1, 21, dtype=float)))


class TestTailMap:
    def test_cubic_closed_form(self):
        # F = t^4/4 gives Phi(y) = sqrt(2)/y
        phi = tail_map(analyze_nonlinearity("t^3"))
        for y in (0.5, 1.0, 10.0, 250.0):
            assert phi(y) == pytest.approx(math.sqrt(2.0) / y, rel=1e-9)

    def test_square_closed_form(self):
        # F = t^3/3 gives Phi(y) = sqrt(6)/sqrt(y)
        phi = tail_map(analyze_nonlinearity("t^2"))
        for y in (1.0, 4.0, 100.0):
            assert phi(y) == pytest.approx(math.sqrt(6.0 / y), rel=1e-8)


class TestBuildProfile:
    def test_closed_form_inversion(self, cubic_profile):
        # Phi(h) = sqrt2/h and int_0^t k = t^2/2 invert to h = 2 sqrt2/t^2
        assert cubic_profile.h_at(0.1) == pytest.approx(282.842712474619, rel=1e-9)

    def test_roundtrip_identity(self, cubic_profile):
        assert cubic_profile.roundtrip_err <= 1e-8
        phi = tail_map(cubic_profile.f)
        for t in (0.25, 0.0625, 2.0 ** -10):
            assert phi(cubic_profile.h_at(t)) == pytest.approx(t * t / 2.0, rel=1e-8)

    def test_xi0(self, cubic_profile):
        assert cubic_profile.xi0 == pytest.approx(math.sqrt(3.0) / 2.0, rel=1e-12)

    def test_sqrt_k_variant_roundtrip(self):
        f = analyze_nonlinearity("t^2")
        k = KFunction.power(0.5, nu=1.0)
        prof = build_profile(f, k, variant=VARIANT_SQRT_K, c=1.0,
                             t_grid=2.0 ** (-np.arange(1, 13, dtype=float)))
        assert prof.roundtrip_err <= 1e-8
        # closed form: sqrt6/sqrt(h) = (4/5) t^(5/4)
        t = 0.25
        exact = 6.0 * (5.0 / (4.0 * t ** 1.25)) ** 2
        assert prof.h_at(t) == pytest.approx(exact, rel=1e-8)

    def test_ko_divergent_refused(self):
        with pytest.raises(ValueError, match="Keller-Osserman"):
            build_profile(analyze_nonlinearity("t"), KFunction.power(1.0))

    def test_h_decreasing_to_infinity(self, cubic_profile):
        assert np.all(np.diff(cubic_profile.h) < 0.0)
        assert cubic_profile.h[0] > 1e6  # t = 2^-20 end


class TestPredictedRate:
    def test_headline_constant(self, cubic_profile):
        # xi0 h(d) d^2 = sqrt 6, the exact coefficient of u'' = x^2 u^3
        for d in (0.05, 0.1, 0.2):
            assert predicted_rate(cubic_profile, d) * d * d == pytest.approx(
                math.sqrt(6.0), rel=1e-8)

    def test_order_one_at_table_point(self, cubic_profile):
        t = float(cubic_profile.t[5])
        assert predicted_rate(cubic_profile, t, "one") == pytest.approx(
            cubic_profile.xi0 * cubic_profile.h_at(t))

    def test_order_two_with_zero_chi(self, cubic_profile):
        cubic_profile.chi, cubic_profile.varpi = 0.0, 1.0
        try:
            assert predicted_rate(cubic_profile, 0.1, "two") == pytest.approx(
                predicted_rate(cubic_profile, 0.1, "one"))
        finally:
            cubic_profile.chi = cubic_profile.varpi = None

    def test_two_term_requires_chi(self, cubic_profile):
        with pytest.raises(ValueError):
            predicted_rate(cubic_profile, 0.1, "two")

    def test_extrapolation_refused(self, cubic_profile):
        with pytest.raises(ValueError, match="extrapolation refused"):
            cubic_profile.h_at(0.9)
        with pytest.raises(ValueError, match="extrapolation refused"):
            cubic_profile.h_at(2.0 ** -30)


class TestProfileInvariants:
    def test_h2_limit(self, cubic_profile):
        # h''/(k^2 f(h)) -> (2 + rho ell1)/(2 + rho) = 3/4
        target = (2.0 + 2.0 * 0.5) / (2.0 + 2.0)
        for j in (2, 3, 4, 5):
            t = 10.0 ** -j
            ratio = cubic_profile.h_second(t) / (t * t * cubic_profile.f.f(
                cubic_profile.h_at(t)))
            assert ratio == pytest.approx(target, rel=0.02)

    def test_h3_limits(self, cubic_profile):
        ts = [2.0 ** -j for j in range(2, 12, 3)]
        r1 = [cubic_profile.h_at(t) / cubic_profile.h_second(t) for t in ts]
        r2 = [abs(cubic_profile.h_prime(t)) / cubic_profile.h_second(t) for t in ts]
        assert all(b < a for a, b in zip(r1, r1[1:]))
        assert all(b < a for a, b in zip(r2, r2[1:]))
        assert r1[-1] < 1e-6 and r2[-1] < 1e-2

    def test_h_prime_identity(self, cubic_profile):
        # h' = -k sqrt(2 F(h)) against the closed form -4 sqrt2/t^3
        t = 0.125
        assert cubic_profile.h_prime(t) == pytest.approx(
            -4.0 * math.sqrt(2.0) / t ** 3, rel=1e-8)


class TestOdeProfile:
    @pytest.fixture(scope="class")
    @classmethod
    def sqrt_profile(cls):
        return profile_ode_g(analyze_singular_term("t^(-1/2)"), 1.0)

    def test_power_solution(self, sqrt_profile):
        # h'' = h^(-1/2) with flat start is exactly C t^(4/3), C = (9/4)^(2/3)
        C = (9.0 / 4.0) ** (2.0 / 3.0)
        mask = sqrt_profile.t >= 1e-4
        exact = C * sqrt_profile.t[mask] ** (4.0 / 3.0)
        rel = np.max(np.abs(sqrt_profile.h[mask] - exact) / exact)
        assert rel <= 1e-4

    def test_power_coefficient(self, sqrt_profile):
        assert sqrt_profile.power_coef == pytest.approx((9.0 / 4.0) ** (2.0 / 3.0),
                                                        rel=1e-6)

    def test_monotonicity_triple(self, sqrt_profile):
        assert np.all(np.diff(sqrt_profile.h) > 0.0)
        assert np.all(np.diff(sqrt_profile.hp) > 0.0)
        assert np.all(np.diff(sqrt_profile.hpp) < 0.0)

    def test_th_bound(self, sqrt_profile):
        # t h'(t) <= 2 h(t) everywhere
        assert np.all(sqrt_profile.t * sqrt_profile.hp
                      <= 2.0 * sqrt_profile.h * (1.0 + 1e-12))

    def test_near_origin_power_bound(self, sqrt_profile):
        mask = sqrt_profile.t <= 1e-2
        bound = 1.01 * sqrt_profile.power_coef * sqrt_profile.t[mask] ** (4.0 / 3.0)
        assert np.all(sqrt_profile.h[mask] <= bound)

    @pytest.mark.parametrize("p", [0.5, 1.0, 1.5, 2.0])
    def test_gradient_bound_constants(self, sqrt_profile, p):
        c1, c2 = sqrt_profile.lh_constants(p)
        assert np.max(sqrt_profile.hp ** p - c1 * sqrt_profile.hpp - c2) <= 0.0

    def test_origin_divergent_gate(self):
        with pytest.raises(ValueError, match="not integrable at the origin"):
            profile_ode_g(analyze_singular_term("1/t"), 1.0)

    def test_csv_export(self, sqrt_profile, tmp_path):
        path = tmp_path / "prof.csv"
        sqrt_profile.export_csv(path)
        assert path.read_text().startswith("t,h,h_prime")


def test_profile_csv_export(cubic_profile, tmp_path):
    path = tmp_path / "h.csv"
    cubic_profile.export_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# variant=")
    assert lines[1] == "t,h,h_prime"
    assert len(lines) == 2 + cubic_profile.t.size
