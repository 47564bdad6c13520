import math

import numpy as np
import pytest
from scipy.integrate import quad

import relwave as rw


def line_samples(n=2001, smax=10.0):
    s = np.linspace(-smax, smax, n)
    return np.column_stack([s, s, np.zeros_like(s)])


def circle_samples(R, n=2001, smax=3.0):
    s = np.linspace(-smax, smax, n)
    return np.column_stack([s, R * np.cos(s / R), R * np.sin(s / R)])


class TestCurvatureFromParametrization:
    def test_straight_line_zero_curvature(self):
        prof = rw.curvature_from_parametrization(line_samples())
        s = np.linspace(-8, 8, 50)
        assert np.max(np.abs(prof.kappa(s))) < 1e-10

    def test_circle_curvature(self):
        R = 2.5
        prof = rw.curvature_from_parametrization(circle_samples(R))
        s = np.linspace(-2, 2, 50)
        h = 6.0 / 2000
        assert np.max(np.abs(prof.kappa(s) - 1.0 / R)) < 10 * h**2

    def test_gaussian_roundtrip(self):
        # integrate the tangent angle of kappa = exp(-s^2), then recover it
        target = rw.gaussian_bump(1.0)
        path = rw.CurvePath.from_profile(target, 6.0, ds=1e-3)
        prof = rw.curvature_from_parametrization(
            np.column_stack([path.s, path.xy]))
        s = np.linspace(-5, 5, 201)
        assert np.max(np.abs(prof.kappa(s) - target.kappa(s))) < 1e-4

    def test_rejects_nonuniform_grid(self):
        arr = line_samples(n=101)
        arr[50, 0] += 1e-3
        with pytest.raises(ValueError, match="uniform"):
            rw.curvature_from_parametrization(arr)

    def test_rejects_non_arclength(self):
        s = np.linspace(-5, 5, 201)
        arr = np.column_stack([s, 2 * s, np.zeros_like(s)])
        with pytest.raises(ValueError, match="not arc-length"):
            rw.curvature_from_parametrization(arr)

    def test_rejects_short_input(self):
        with pytest.raises(ValueError):
            rw.curvature_from_parametrization(line_samples(n=5))


class TestEpsilon0:
    def test_zero_profile_is_infinite(self):
        assert rw.epsilon0(rw.zero_curvature()) == math.inf

    def test_reciprocal_of_sup(self):
        assert rw.epsilon0(rw.gaussian_bump(2.0)) == pytest.approx(0.5)
        assert rw.epsilon0(rw.gaussian_bump(1.2)) == pytest.approx(1 / 1.2)

    def test_product_identity(self):
        for prof in (rw.gaussian_bump(0.7), rw.compact_bump(1.5, 2.0)):
            assert rw.epsilon0(prof) * prof.sup_kappa == pytest.approx(1.0)


class TestTubularMap:
    def test_straight_line(self):
        path = rw.CurvePath.from_profile(rw.zero_curvature(), 5.0, ds=0.05)
        s = np.array([0.3, -1.2, 4.0])
        t = np.array([0.5, -1.0, 0.0])
        pts = rw.tubular_map(path, 0.2, s, t)
        assert np.allclose(pts[:, 0], s, atol=1e-12)
        assert np.allclose(pts[:, 1], 0.2 * t, atol=1e-12)

    def test_circle_center_distance(self):
        # counterclockwise circle of radius R: kappa = +1/R, and the normal
        # points inward, so t = +1 sits at distance R - eps from the center
        R, eps = 2.0, 0.3
        samples = circle_samples(R, n=4001, smax=4.0)
        prof = rw.curvature_from_parametrization(samples)
        path = rw.CurvePath.from_profile(prof, 3.0, ds=0.01)
        center_dist_in = np.linalg.norm(
            rw.tubular_map(path, eps, np.array([0.7]), np.array([1.0]))
            - path.gamma(0.7) - R * path.normal(0.7))
        # distance from the circle's center: reconstruct it as gamma + R*nu
        center = path.gamma(0.0) + R * path.normal(0.0)
        p_in = rw.tubular_map(path, eps, np.array([0.7]), np.array([1.0]))[0]
        p_out = rw.tubular_map(path, eps, np.array([0.7]), np.array([-1.0]))[0]
        assert np.linalg.norm(p_in - center) == pytest.approx(R - eps, abs=1e-5)
        assert np.linalg.norm(p_out - center) == pytest.approx(R + eps, abs=1e-5)

    def test_rejects_t_outside_fiber(self):
        path = rw.CurvePath.from_profile(rw.zero_curvature(), 2.0, ds=0.1)
        with pytest.raises(ValueError, match="t"):
            rw.tubular_map(path, 0.1, np.array([0.0]), np.array([1.5]))


class TestCurvaturePrimitive:
    def test_zero(self):
        prof = rw.zero_curvature()
        s = np.linspace(-10, 10, 21)
        assert np.max(np.abs(rw.curvature_primitive(prof, s))) == 0.0

    def test_constant(self):
        c = 0.37
        z = rw.zero_curvature()
        prof = rw.CurveProfile(
            kappa=lambda s: np.full_like(np.asarray(s, dtype=float), c),
            kappa_prime=z.kappa, kappa_double_prime=z.kappa,
            sup_kappa=c, sup_kappa_prime=0.0, sup_kappa_double_prime=0.0,
            l2_kappa_squared=math.inf, decay_window=1.0, name="const")
        s = np.array([-3.0, -0.5, 0.0, 1.0, 7.5])
        assert np.allclose(rw.curvature_primitive(prof, s), c * s, atol=1e-12)

    def test_gaussian_against_quadrature_oracle(self):
        prof = rw.gaussian_bump(1.0)
        oracle, _ = quad(prof.kappa, 0.0, 10.0, epsabs=1e-14, epsrel=1e-14)
        assert abs(rw.curvature_primitive(prof, 10.0) - oracle) < 1e-8
        assert abs(oracle - math.sqrt(math.pi) / 2) < 1e-10

    def test_additivity(self):
        prof = rw.gaussian_bump(1.3)
        a, b = -2.0, 3.5
        seg, _ = quad(prof.kappa, a, b, epsabs=1e-13, epsrel=1e-13)
        diff = rw.curvature_primitive(prof, b) - rw.curvature_primitive(prof, a)
        assert abs(diff - seg) < 1e-10

    def test_monotone_where_kappa_positive(self):
        # restrict to the window where the increments stay above roundoff
        prof = rw.gaussian_bump(1.0)
        s = np.linspace(-5, 5, 160)
        rho = rw.curvature_primitive(prof, s)
        assert np.all(np.diff(rho) > 0)


class TestValidateAssumptions:
    def test_zero_profile_passes(self):
        rep = rw.validate_assumptions(rw.zero_curvature(), 0.5, s_max=5.0)
        assert rep.passed

    def test_gaussian_passes(self):
        rep = rw.validate_assumptions(rw.gaussian_bump(1.0), 0.1, s_max=10.0)
        assert rep.decay_ok and rep.derivatives_ok and rep.injective

    def test_fold_over_fails_with_reason(self):
        prof = rw.gaussian_bump(2.0)    # epsilon0 = 0.5
        rep = rw.validate_assumptions(prof, 0.6, s_max=6.0)
        assert not rep.injective
        assert "fold-over" in rep.details["injectivity_reason"]

    def test_u_turn_overlap_detected(self):
        # total turning angle pi: the two arms run back antiparallel; a wide
        # enough tube makes opposite walls cross
        prof = rw.gaussian_bump(math.sqrt(math.pi))
        rep = rw.validate_assumptions(prof, 0.55, s_max=8.0)
        assert not rep.injective
        rep_ok = rw.validate_assumptions(prof, 0.2, s_max=8.0)
        assert rep_ok.injective

    def test_derivative_stencils_match_finite_differences(self):
        prof = rw.gaussian_bump(1.0)
        s = np.linspace(-4, 4, 81)
        for h in (1e-3, 5e-4):
            fd = (prof.kappa(s + h) - prof.kappa(s - h)) / (2 * h)
            err = np.max(np.abs(fd - prof.kappa_prime(s)))
            assert err < 2.0 * h**2
            fd2 = (prof.kappa(s + h) - 2 * prof.kappa(s) + prof.kappa(s - h)) / h**2
            err2 = np.max(np.abs(fd2 - prof.kappa_double_prime(s)))
            assert err2 < 4.0 * h**2


class TestSampledProfiles:
    def test_sup_norms_dominate_samples(self):
        prof = rw.gaussian_bump(1.7)
        s = np.linspace(-12, 12, 400)
        assert np.max(np.abs(prof.kappa(s))) <= prof.sup_kappa + 1e-14
        assert np.max(np.abs(prof.kappa_prime(s))) <= prof.sup_kappa_prime + 1e-12
        assert np.max(np.abs(prof.kappa_double_prime(s))) \
            <= prof.sup_kappa_double_prime + 1e-12

    def test_file_roundtrip(self, tmp_path):
        s = np.linspace(-15, 15, 1501)
        kappa = 0.8 * np.exp(-s**2)
        fn = tmp_path / "profile.txt"
        with open(fn, "w") as fh:
            fh.write("# s kappa\n")
            for si, ki in zip(s, kappa):
                fh.write(f"{si:.12g} {ki:.12g}\n")
        prof = rw.read_profile_file(fn)
        mid = np.linspace(-10, 10, 101)
        assert np.max(np.abs(prof.kappa(mid) - 0.8 * np.exp(-mid**2))) < 1e-6

    def test_curve_file_roundtrip(self, tmp_path):
        path = rw.CurvePath.from_profile(rw.gaussian_bump(0.5), 5.0, ds=0.005)
        fn = tmp_path / "curve.txt"
        with open(fn, "w") as fh:
            fh.write("# s x y\n")
            for si, (xi, yi) in zip(path.s, path.xy):
                fh.write(f"{si:.15g} {xi:.15g} {yi:.15g}\n")
        arr = rw.read_curve_file(fn)
        prof = rw.curvature_from_parametrization(arr)
        mid = np.linspace(-4, 4, 81)
        assert np.max(np.abs(prof.kappa(mid) - 0.5 * np.exp(-mid**2))) < 1e-4


def test_compact_bump_is_c2_and_supported():
    prof = rw.compact_bump(1.5, 2.0)
    assert prof.kappa(np.array([2.0001, -3.0, 10.0])).max() == 0.0
    eps = 1e-6
    assert abs(prof.kappa(np.array([2.0 - eps]))[0]) < 1e-15 * 2 + 1e-16
    s = np.linspace(-1.9, 1.9, 100)
    h = 1e-4
    fd = (prof.kappa(s + h) - prof.kappa(s - h)) / (2 * h)
    assert np.max(np.abs(fd - prof.kappa_prime(s))) < 1e-6


def test_tubular_params_validation():
    with pytest.raises(ValueError):
        rw.TubularParams(epsilon=-0.1)
    with pytest.raises(ValueError):
        rw.TubularParams(epsilon=0.1, m=-1.0)
    pars = rw.TubularParams(epsilon=0.6, m=0.0)
    with pytest.raises(ValueError):
        pars.validate(rw.gaussian_bump(2.0))
    rw.TubularParams(epsilon=0.4).validate(rw.gaussian_bump(2.0))
