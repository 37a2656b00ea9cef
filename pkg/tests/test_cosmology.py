import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from cosmobranch import errors
from cosmobranch.cosmology import (
    GridControl,
    build_model,
    comoving_volume,
    export_curve_rows,
    holographic_ratio,
    hubble_rate,
    particle_horizon,
    particle_horizons,
    solve_scale_factor,
    CosmologyModel,
)

T_I = 1e-3


def eds_curve(t_i=T_I, t_f=10.0, c=1.0):
    # a(t) = (t / t0)^(2/3) with t0 = 2 / (3 H0)
    model = build_model(1.0, 1.0, 0.0, 0.0, c)
    return solve_scale_factor(model, t_i, t_f, (1.5 * t_i) ** (2 / 3))


def radiation_curve(t_i=T_I, t_f=10.0):
    # a(t) = sqrt(2 t) for H0 = 1, omega_r = 1
    model = build_model(1.0, 0.0, 1.0, 0.0)
    return solve_scale_factor(model, t_i, t_f, math.sqrt(2 * t_i))


def de_sitter_curve(t_i=T_I, t_f=10.0, a_i=1.0):
    return solve_scale_factor(build_model(1.0, 0.0, 0.0, 1.0), t_i, t_f, a_i)


class TestBuildModel:
    def test_einstein_de_sitter_is_flat(self):
        m = build_model(1, 1, 0, 0, 1)
        assert m.omega_k == 0
        assert m.curvature_sign == 0

    def test_open_matter_model(self):
        m = build_model(1, 0.3, 0, 0, 1)
        assert m.omega_k == pytest.approx(0.7, abs=1e-15)
        assert m.curvature_sign == -1

    def test_recollapse_rejected(self):
        # H^2(a) = 0.3/a^3 + 5.7/a^2 - 5 turns negative between a = 1 and a = 2
        h2 = lambda a: 0.3 / a**3 + 5.7 / a**2 - 5
        assert h2(1.0) > 0 and h2(2.0) < 0
        with pytest.raises(errors.UnsupportedRecollapse):
            build_model(1, 0.3, 0, -5, 1)

    def test_tiny_curvature_is_flat(self):
        m = build_model(1, 0.3, 0, 0.7 + 1e-13)
        assert m.curvature_sign == 0

    def test_closed_sign(self):
        # closed matter models turn around at a = omega_m / (omega_m - 1) = 6
        assert build_model(1, 1.2, 0, 0, a_max=5.0).curvature_sign == 1

    @pytest.mark.parametrize(
        "args,exc",
        [
            ((0, 1, 0, 0), errors.NonPositiveHubble),
            ((-1, 1, 0, 0), errors.NonPositiveHubble),
            ((1, -0.1, 0, 0), errors.NegativeDensity),
            ((1, 0, -0.1, 0), errors.NegativeDensity),
            ((1, 0, 0, 1.5), errors.UnsupportedRecollapse),
        ],
    )
    def test_errors(self, args, exc):
        with pytest.raises(exc):
            build_model(*args)


class TestHubbleRate:
    def test_flat_matter_today(self):
        assert hubble_rate(build_model(2.5, 1, 0, 0), 1.0) == 2.5

    def test_flat_matter_a4(self):
        assert hubble_rate(build_model(1, 1, 0, 0), 4.0) == pytest.approx(1 / 8, rel=1e-15)

    @pytest.mark.parametrize("a", [1e-3, 0.5, 1.0, 7.0])
    def test_pure_lambda_constant(self, a):
        assert hubble_rate(build_model(3.0, 0, 0, 1), a) == pytest.approx(3.0, rel=1e-15)

    def test_negative_radicand(self):
        with pytest.raises(errors.NegativeRadicand):
            hubble_rate(CosmologyModel(1.0, 0.3, 0.0, -5.0), 2.0)


class TestSolveScaleFactor:
    def test_einstein_de_sitter(self):
        curve = eds_curve()
        t = np.geomspace(T_I, 10.0, 200)
        np.testing.assert_allclose(curve(t), (1.5 * t) ** (2 / 3), rtol=1e-8)

    def test_de_sitter(self):
        curve = de_sitter_curve(a_i=0.3)
        t = np.linspace(T_I, 10.0, 200)
        np.testing.assert_allclose(curve(t), 0.3 * np.exp(t - T_I), rtol=1e-8)

    def test_radiation(self):
        curve = radiation_curve()
        t = np.geomspace(T_I, 10.0, 200)
        np.testing.assert_allclose(curve(t), np.sqrt(2 * t), rtol=1e-8)

    def test_hubble0_rescales_time(self):
        model = build_model(2.0, 1.0, 0.0, 0.0)
        curve = solve_scale_factor(model, T_I, 5.0, (3.0 * T_I) ** (2 / 3))
        t = np.geomspace(T_I, 5.0, 50)
        np.testing.assert_allclose(curve(t), (3.0 * t) ** (2 / 3), rtol=1e-8)

    @pytest.mark.parametrize("make", [eds_curve, radiation_curve, de_sitter_curve])
    def test_curve_invariants(self, make):
        curve = make()
        assert np.all(np.diff(curve.times) > 0)
        assert np.all(curve.values > 0)
        assert np.all(np.diff(curve.values) > 0)
        assert curve.max_ode_residual() <= curve.grid.residual_tol

    def test_open_lambda_model_residual(self):
        model = build_model(0.7, 0.3, 1e-4, 0.6)
        curve = solve_scale_factor(model, 0.01, 3.0, 0.02)
        assert curve.max_ode_residual() <= curve.grid.residual_tol
        assert np.all(np.diff(curve.values) > 0)

    def test_curve_is_read_only(self):
        curve = eds_curve()
        with pytest.raises(ValueError):
            curve.values[0] = 1.0

    def test_bad_interval(self):
        with pytest.raises(errors.ValidationError):
            solve_scale_factor(build_model(1, 1, 0, 0), 1.0, 1.0, 1.0)

    def test_refinement_budget_exhausted(self):
        with pytest.raises(errors.StiffnessFailure):
            solve_scale_factor(build_model(1, 1, 0, 0), T_I, 10.0, 0.0131, GridControl(max_knots=60))

    def test_export_rows(self):
        rows = list(export_curve_rows(eds_curve()))
        t, a, h = rows[-1]
        assert h == pytest.approx(a ** -1.5, rel=1e-12)


class TestParticleHorizon:
    def test_eds_example(self):
        # 3 c t (1 - (t_i/t)^(1/3)) with t_i / t = 1e-3
        curve = eds_curve(t_i=1e-3, t_f=1.0)
        r = particle_horizon(curve, 1.0)
        assert r.proper_radius == pytest.approx(2.7, rel=1e-9)

    def test_eds_tends_to_3ct(self):
        # decreasing t_i sequence approaches 3ct from below
        radii = [particle_horizon(eds_curve(t_i=ti, t_f=1.0), 1.0).proper_radius for ti in (1e-2, 1e-4, 1e-6)]
        assert radii == sorted(radii)
        assert abs(radii[-1] - 3.0) < 0.031

    def test_zero_at_t_i(self):
        r = particle_horizon(eds_curve(), T_I)
        assert r.proper_radius == 0.0
        assert r.comoving_radius == 0.0

    def test_de_sitter(self):
        curve = de_sitter_curve()
        for t in (0.5, 2.0, 9.0):
            assert particle_horizon(curve, t).proper_radius == pytest.approx(math.expm1(t - T_I), rel=1e-9)

    def test_de_sitter_independent_of_a_i(self):
        a = particle_horizon(de_sitter_curve(a_i=1.0), 3.0).proper_radius
        b = particle_horizon(de_sitter_curve(a_i=1e-3), 3.0).proper_radius
        assert a == pytest.approx(b, rel=1e-9)

    def test_out_of_range(self):
        curve = eds_curve()
        with pytest.raises(errors.TimeOutOfRange):
            particle_horizon(curve, 20.0)
        with pytest.raises(errors.TimeOutOfRange):
            particle_horizon(curve, 1e-4)

    def test_proper_is_a_times_comoving(self):
        curve = eds_curve()
        r = particle_horizon(curve, 2.0)
        assert r.proper_radius == pytest.approx(float(curve(2.0)) * r.comoving_radius, rel=1e-15)

    @pytest.mark.parametrize("make", [eds_curve, radiation_curve, de_sitter_curve])
    def test_comoving_radius_strictly_increasing(self, make):
        curve = make()
        _, chi, _ = particle_horizons(curve, np.geomspace(T_I, 10.0, 300))
        assert np.all(np.diff(chi) > 0)

    def test_light_speed_scaling(self):
        base = particle_horizons(eds_curve(c=1.0), [0.1, 1.0, 5.0])[0]
        for lam in (3.0, 299792.458):
            scaled = particle_horizons(eds_curve(c=lam), [0.1, 1.0, 5.0])[0]
            np.testing.assert_allclose(scaled, lam * base, rtol=4e-16)

    @pytest.mark.parametrize(
        "params,a_i",
        [((1, 1, 0, 0), (1.5 * T_I) ** (2 / 3)), ((1, 0.3, 0, 0), 0.01), ((0.7, 0.3, 8e-5, 0.7 - 8e-5), 0.005)],
    )
    def test_refinement_convergence(self, params, a_i):
        model = build_model(*params)
        times = np.geomspace(2 * T_I, 4.0, 12)
        grid = GridControl()
        R1, _, err1 = particle_horizons(solve_scale_factor(model, T_I, 4.0, a_i, grid), times)
        R2, _, _ = particle_horizons(solve_scale_factor(model, T_I, 4.0, a_i, grid.halved()), times)
        assert np.all(np.abs(R2 - R1) <= err1)

    def test_error_estimate_reported(self):
        r = particle_horizon(eds_curve(), 3.0)
        assert 0 < r.quadrature_error_estimate < 1e-6 * r.proper_radius


class TestComovingVolume:
    def test_flat_sphere(self):
        assert comoving_volume(build_model(1, 1, 0, 0), 1.0) == pytest.approx(4 * math.pi / 3, rel=1e-15)

    @pytest.mark.parametrize("chi", [1e-8, 1e-4, 1e-2, 0.05])
    def test_open_small_radius_tends_to_flat(self, chi):
        open_model = build_model(1, 0.3, 0, 0)
        ratio = comoving_volume(open_model, chi) / (4 * math.pi / 3 * chi**3)
        rc = open_model.curvature_radius
        # sinh(2x) - 2x = (4/3) x^3 (1 + x^2 / 5 + ...)
        assert ratio == pytest.approx(1 + 0.2 * (chi / rc) ** 2, rel=1e-6)

    @pytest.mark.parametrize("chi", [0.05, 0.1, 0.5, 1.0, 3.0])
    def test_open_against_shell_quadrature(self, chi):
        # empty universe: omega_k = 1, R_c = c / H0 = 1
        model = build_model(1, 0, 0, 0)
        shells, _ = quad(lambda r: 4 * math.pi * math.sinh(r) ** 2, 0, chi, epsabs=0, epsrel=1e-13)
        assert comoving_volume(model, chi) == pytest.approx(shells, rel=1e-12)

    def test_open_unit_curvature_radius_value(self):
        assert comoving_volume(build_model(1, 0, 0, 0), 1.0) == pytest.approx(5.1109327057, rel=1e-10)

    def test_closed_unsupported(self):
        with pytest.raises(errors.ClosedUniverseUnsupported):
            comoving_volume(build_model(1, 1.2, 0, 0, a_max=5.0), 0.5)


class TestHolographicRatio:
    def test_zero_entropy(self):
        curve = eds_curve()
        assert holographic_ratio(curve.model, curve, 2.0, 0.0, 1.0) == 0.0

    def test_doubling_planck_length(self):
        curve = eds_curve()
        r1 = holographic_ratio(curve.model, curve, 2.0, 0.5, 1.0)
        r2 = holographic_ratio(curve.model, curve, 2.0, 0.5, 2.0)
        assert r2 == pytest.approx(4 * r1, rel=1e-15)

    def test_eds_closed_form(self):
        # flat: ratio = sigma l^2 (4/3) chi^3 / (a chi)^2 = (4/3) sigma l^2 chi / a^2
        curve = eds_curve()
        t = np.geomspace(3e-3, 10.0, 40)
        a = (1.5 * t) ** (2 / 3)
        chi = 3 * 1.5 ** (-2 / 3) * (t ** (1 / 3) - T_I ** (1 / 3))
        expected = (4 / 3) * 0.25 * 1.3**2 * chi / a**2
        got = holographic_ratio(curve.model, curve, t, 0.25, 1.3)
        np.testing.assert_allclose(got, expected, rtol=1e-8)

    def test_eds_decreases_like_inverse_time(self):
        curve = eds_curve(t_i=1e-9, t_f=10.0)
        t = np.geomspace(1e-3, 10.0, 30)
        r = holographic_ratio(curve.model, curve, t, 1.0, 1.0)
        assert np.all(np.diff(r) < 0)
        # chi / a^2 = 1.5^(-2/3) * 3 (t^(1/3) - t_i^(1/3)) / (1.5 t)^(4/3) ~ 1/t
        scaled = r * t / (1 - (1e-9 / t) ** (1 / 3))
        np.testing.assert_allclose(scaled, 4 / 3 * 3 / 1.5**2, rtol=1e-7)

    def test_empty_horizon_gives_zero(self):
        curve = eds_curve()
        assert holographic_ratio(curve.model, curve, T_I, 1.0, 1.0) == 0.0

    @given(st.floats(0, 1e6), st.floats(0, 1e6))
    @settings(max_examples=50, deadline=None)
    def test_linear_in_entropy_density(self, s1, s2):
        curve = _EDS
        r = lambda s: holographic_ratio(curve.model, curve, 1.7, s, 1.0)
        assert r(s1 + s2) == pytest.approx(r(s1) + r(s2), rel=1e-14, abs=1e-300)


_EDS = eds_curve()
