import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import solve_ivp

from lpmhd.estimates import (
    Ensemble,
    _band_commutator_norms,
    bernstein_ratio,
    commutator_new_ratio,
    gronwall_bound,
    heat_band_time_norms,
    heat_ratio,
    product_ratio,
    stability_slope,
    transport_commutator_ratio,
    verify_bernstein,
    verify_commutator_new,
    verify_commutator_transport,
    verify_heat_smoothing,
    verify_product_law,
)
from lpmhd.besov import chemin_lerner_norm
from lpmhd.grid import Grid, SpectralField, VectorField, random_divfree_field, random_field
from lpmhd.littlewood_paley import commutator, default_partition

from conftest import mode_coeffs

SMALL = Ensemble(size=4, resolutions=(32, 64))


def phi_oracle(j: int, k: float) -> float:
    """Band multiplier at radius k from the bump formula, independent of the library."""
    lo, hi = 0.75, 2.0
    c, h = 0.5 * (math.log(lo) + math.log(hi)), 0.5 * (math.log(hi) - math.log(lo))

    def bump(r):
        t = (math.log(r) - c) / h
        return math.exp(-1.0 / (1.0 - t * t)) if abs(t) < 1 else 0.0

    total = sum(bump(k / 2.0**i) for i in range(-6, 12))
    return bump(k / 2.0**j) / total


class TestBernstein:
    def test_single_mode_at_dyadic_radius(self, grid32):
        f = SpectralField(grid32, mode_coeffs(grid32, (4, 0)))
        assert bernstein_ratio(f, 2) == pytest.approx(1.0, rel=1e-14)

    def test_single_mode_off_radius(self, grid32):
        f = SpectralField(grid32, mode_coeffs(grid32, (3, 4)))
        assert bernstein_ratio(f, 2) == pytest.approx(5 / 4, rel=1e-14)

    def test_not_band_limited(self, grid32):
        f = random_field(grid32, 1.0, 0)
        with pytest.raises(ValueError, match="not band-limited"):
            bernstein_ratio(f, 2)

    def test_ball_upper_bound(self, grid32):
        f = random_field(grid32, 0.0, 2, kmax=5)
        f = f.with_coeffs(f.coeffs * (grid32.kabs <= 8 / 3 * 2**2))
        assert bernstein_ratio(f, 2, support="ball") <= 8 / 3

    @pytest.mark.parametrize("lam", [1e-3, 1.0, 1e3])
    def test_scale_invariant(self, grid32, lam):
        p = default_partition(grid32)
        f = random_field(grid32, 0.0, 3)
        f = f.with_coeffs(f.coeffs * p.phi_j(2))
        assert bernstein_ratio(f * lam, 2) == pytest.approx(bernstein_ratio(f, 2), rel=1e-13)

    def test_higher_order_and_lq(self, grid32):
        p = default_partition(grid32)
        f = random_field(grid32, 0.0, 3)
        f = f.with_coeffs(f.coeffs * p.phi_j(2))
        r2 = bernstein_ratio(f, 2, k_order=2)
        assert 0.75**2 <= r2 <= (8 / 3) ** 2
        assert bernstein_ratio(f, 2, k_order=1, p=2, q=math.inf) > 0

    def test_report(self):
        rep = verify_bernstein(SMALL)
        assert rep.passed
        data = json.loads(rep.dumps())
        assert {"name", "cases", "constant", "slope", "pass", "flags"} <= set(data)
        assert {"seed", "N", "ratio"} <= set(data["cases"][0])

    def test_rejects_bad_exponents(self):
        with pytest.raises(ValueError):
            verify_bernstein(SMALL, p=4, q=2)


class TestProductLaw:
    def test_single_mode_closed_form(self, grid32):
        x, _ = grid32.coordinates()
        u = SpectralField.from_physical(grid32, np.cos(x))
        # cos^2 x = 1/2 + cos(2x)/2: band 1 only, while cos x sits in band 0
        assert product_ratio(u, u, 1.0, 1.0) == pytest.approx(1 / (math.pi * math.sqrt(2)), rel=1e-13)

    def test_constant_factor(self, grid32):
        u = random_field(grid32, 2.0, 1, kmax=7)
        c = np.zeros(grid32.shape, dtype=complex)
        c[0, 0] = -3.0
        v = SpectralField(grid32, c)
        assert product_ratio(u, v, 0.5, 0.5, form="linf") == pytest.approx(1.0, rel=1e-12)

    def test_preconditions(self):
        with pytest.raises(ValueError, match="s1, s2 <= d/p"):
            verify_product_law(1.5, 0.5, SMALL)
        with pytest.raises(ValueError, match="s1 \\+ s2"):
            verify_product_law(-0.5, 0.5, SMALL)
        with pytest.raises(ValueError, match="s > 0"):
            verify_product_law(0.0, 0.0, SMALL, form="linf")

    def test_report(self):
        rep = verify_product_law(1.0, 1.0, SMALL)
        assert rep.passed and rep.constant > 0

    def test_linf_report(self):
        assert verify_product_law(0.5, 0.5, SMALL, form="linf").passed


class TestCommutatorNew:
    def test_constant_u_gives_zero(self, grid32):
        c = np.zeros((2,) + grid32.shape, dtype=complex)
        c[0, 0, 0] = 2.0
        u = VectorField(grid32, c, div_free=True)
        v = random_divfree_field(grid32, 2.5, 1, kmax=7)
        ratio, info = commutator_new_ratio(u, v, 1.5)
        assert info["lhs"] <= 1e-12 and ratio <= 1e-12

    def test_three_mode_closed_form(self, grid32):
        x, y = grid32.coordinates()
        zero = np.zeros_like(x)
        u = VectorField.from_physical(grid32, np.stack([np.sin(y), zero])).certify()
        v = VectorField.from_physical(grid32, np.stack([np.cos(3 * x), zero]))
        ratio, info = commutator_new_ratio(u, v, 1.5)
        # u.grad v = (-3 sin y sin 3x, 0) has |k| = sqrt 10, shared by bands 1 and 2;
        # cos 3x lies in band 1 alone
        p2 = phi_oracle(2, math.sqrt(10))
        lhs = 3 * math.pi * p2 * math.sqrt(2 + 4)
        rhs = math.pi * math.sqrt(2) * (2**1.5 + 1)
        assert info["lhs"] == pytest.approx(lhs, rel=1e-12)
        assert ratio == pytest.approx(lhs / rhs, rel=1e-12)

    def test_requires_certificate(self, grid32):
        u = VectorField(grid32, random_divfree_field(grid32, 2.0, 0).coeffs)
        with pytest.raises(ValueError, match="divergence-free"):
            commutator_new_ratio(u, u, 1.5)

    def test_batched_norms_match_single_band_route(self, grid32):
        u = random_divfree_field(grid32, 2.5, 4, kmax=7)
        v = random_divfree_field(grid32, 2.5, 5, kmax=7)
        p = default_partition(grid32)
        vals, exact = _band_commutator_norms(u, v, p.phi, 2.0)
        assert exact
        direct = [commutator(j, u, v).l2() for j in p.bands]
        assert np.allclose(vals, direct, rtol=1e-12, atol=1e-14)

    @pytest.mark.parametrize("lam", [1e-3, 1.0, 1e3])
    def test_bilinear_scaling(self, grid32, lam):
        u = random_divfree_field(grid32, 2.5, 4, kmax=7)
        v = random_divfree_field(grid32, 2.5, 5, kmax=7)
        base, _ = commutator_new_ratio(u, v, 1.5)
        scaled, _ = commutator_new_ratio(u * lam, v * lam, 1.5)
        assert scaled == pytest.approx(base, rel=1e-10)

    def test_report(self):
        rep = verify_commutator_new(1.5, 2, 2, SMALL)
        assert rep.passed and "approximate" not in rep.flags

    def test_rejects_nonpositive_s(self):
        with pytest.raises(ValueError):
            verify_commutator_new(0.0, 2, 2, SMALL)


class TestCommutatorTransport:
    def test_constant_transport_field(self, grid32):
        c = np.zeros((2,) + grid32.shape, dtype=complex)
        c[1, 0, 0] = 1.0
        v = VectorField(grid32, c, div_free=True)
        u = random_divfree_field(grid32, 2.0, 3, kmax=7)
        _, info = transport_commutator_ratio(v, u, 1.2)
        assert info["lhs"] <= 1e-12

    def test_roles_are_distinguished(self, grid32):
        a = random_divfree_field(grid32, 3.0, 1, kmax=7)
        b = random_divfree_field(grid32, 2.0, 2, kmax=7)
        r_ab, info = transport_commutator_ratio(a, b, 1.2)
        r_ba, _ = transport_commutator_ratio(b, a, 1.2)
        assert info["roles"]["transporting"].startswith("v")
        assert r_ab != pytest.approx(r_ba, rel=1e-3)

    def test_range_checked(self):
        with pytest.raises(ValueError, match="admissible range"):
            verify_commutator_transport(2.5, 2, SMALL)
        with pytest.raises(ValueError, match="admissible range"):
            verify_commutator_transport(-2.5, 2, SMALL)

    def test_report(self):
        rep = verify_commutator_transport(1.2, 2, SMALL)
        assert rep.passed
        assert rep.details["roles"] == {"transporting": "v", "transported": "u"}


class TestHeat:
    @pytest.mark.parametrize("m", [(2, 0), (4, 0), (0, 8)])
    @pytest.mark.parametrize("q", [1.0, 2.0, math.inf])
    def test_single_mode_free_decay(self, grid32, m, q):
        nu, T, s = 0.7, 1.3, 0.5
        f0 = SpectralField(grid32, mode_coeffs(grid32, m, 0.3 - 0.2j))
        k2 = float(m[0] ** 2 + m[1] ** 2)
        j = int(round(math.log2(math.sqrt(k2))))  # |k| = 2^j: a single band
        lam = nu * k2
        a = math.sqrt(2) * abs(0.3 - 0.2j)
        if math.isinf(q):
            band = a
        else:
            band = a * ((1 - math.exp(-q * lam * T)) / (q * lam)) ** (1 / q)
        led = heat_band_time_norms(f0, None, nu, T)
        got = chemin_lerner_norm(led, q, s, 2.0)
        assert got == pytest.approx(2 ** (j * s) * band, rel=1e-12)

    def test_single_mode_with_forcing(self, grid32):
        nu, T = 1.0, 1.0
        f0 = SpectralField(grid32, mode_coeffs(grid32, (2, 0), 1.0))
        g = SpectralField(grid32, mode_coeffs(grid32, (2, 0), 0.5))
        lam = 4.0 * nu
        # f(t) = e^{-lam t} f0 + g (1 - e^{-lam t}) / lam, all coefficients positive
        e = math.exp(-lam * T)
        integral = (1 - e) / lam + 0.5 / lam * (T - (1 - e) / lam)
        led = heat_band_time_norms(f0, g, nu, T)
        assert chemin_lerner_norm(led, 1.0, 0.0, 2.0) == pytest.approx(math.sqrt(2) * integral, rel=1e-12)

    def test_short_time_limit(self, grid32):
        f0 = random_field(grid32, 1.0, 0)
        r_short, info = heat_ratio(f0, None, 1.0, 1.0, 0.5, 1.0, 1e-9)
        assert info["lhs"] < 1e-6 * info["rhs"]
        assert info["rhs"] == pytest.approx(heat_ratio(f0, None, 1.0, 1.0, 0.5, 1.0, 1.0)[1]["rhs"])

    @given(st.integers(0, 10_000))
    def test_smoothing_gains_two_derivatives(self, seed):
        # nu ||e^{nu t Lap} u0||_{L~1 B^{s+1}} <= (16/9) ||u0||_{B^{s-1}} with the band radii 3/4 2^j
        g = Grid(2, 32)
        u0 = random_field(g, 1.0, seed)
        ratio, _ = heat_ratio(u0, None, 1.0, 1.0, 0.0, 0.3, 2.0)
        assert ratio <= 16 / 9

    def test_exponent_order(self):
        with pytest.raises(ValueError):
            verify_heat_smoothing(1.0, 2.0, 0.5, SMALL)

    def test_report(self):
        rep = verify_heat_smoothing(1.0, 1.0, 0.5, SMALL)
        assert rep.passed
        rep2 = verify_heat_smoothing(2.0, 1.0, 0.5, SMALL, forcing=False)
        assert rep2.passed


class TestGronwall:
    def test_closed_form(self):
        t = np.linspace(0, 0.9, 91)
        res = gronwall_bound(1.0, 1.0, 0.0, 2.0, t)
        assert np.allclose(res.bound, 1 / (1 - t), rtol=1e-14)
        assert not res.blew_up

    def test_blowup_time(self):
        t = np.linspace(0, 2, 201)
        res = gronwall_bound(1.0, 1.0, 0.0, 2.0, t)
        assert res.blowup_time == pytest.approx(1.0, abs=1e-14)
        assert np.all(np.isinf(res.bound[t >= 1.0]))

    def test_trivial(self):
        t = np.linspace(0, 1, 11)
        assert np.all(gronwall_bound(2.5, 0.0, 0.0, 3.0, t).bound == 2.5)

    def test_rejects_p_le_one(self):
        with pytest.raises(ValueError):
            gronwall_bound(1.0, 1.0, 0.0, 1.0, np.linspace(0, 1, 3))

    def test_ode_below_bound(self):
        t = np.linspace(0, 0.5, 501)
        sol = solve_ivp(lambda _, x: x**2 + 1, (0, 0.5), [0.0], method="DOP853",
                        t_eval=t, rtol=1e-12, atol=1e-14)
        res = gronwall_bound(0.0, 1.0, 1.0, 2.0, t)
        assert np.all(sol.y[0] <= res.bound * (1 + 1e-12))
        assert np.allclose(sol.y[0], np.tan(t), rtol=1e-10)

    @given(st.floats(0.1, 2.0), st.floats(1.5, 3.0))
    def test_bound_dominates_solution(self, x0, p):
        # c = 1, e = 0: x(t) = (x0^{1-p} - (p-1) t)^{-1/(p-1)} equals the bound
        t = np.linspace(0, 0.2 / x0 ** (p - 1), 50)
        res = gronwall_bound(x0, 1.0, 0.0, p, t)
        exact = (x0 ** (1 - p) - (p - 1) * t) ** (-1 / (p - 1))
        assert np.allclose(res.bound, exact, rtol=1e-12)


class TestSlope:
    def test_flat(self):
        assert stability_slope([64, 128, 256], [2.0, 2.0, 2.0]) == pytest.approx(0.0, abs=1e-14)

    def test_linear_growth(self):
        assert stability_slope([64, 128, 256], [1.0, 2.0, 4.0]) == pytest.approx(1.0)

    def test_failing_report(self):
        rep = verify_bernstein(SMALL, cap=0.5)
        assert not rep.passed
