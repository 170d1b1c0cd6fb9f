import math

import numpy as np
import pytest

from navgeom import fields as fl
from navgeom.curvature import (
    CurvatureReport,
    classify_spreads,
    curvature_profile,
    isoparametric_report,
    laplace_transfer_residual,
    linear_mean_curvature,
    linear_mean_curvature_variational,
    locate_zero,
    minimal_sphere_wind,
    navigation_isoparametric_check,
    nonlinear_mean_curvature,
    riemannian_mean_curvature,
    transnormal_hessian_check,
    zermelo_mean_residual,
)
from navgeom.errors import DivergenceNotConstant, NotUnitNormal
from navgeom.fields import divergence
from navgeom.metric import ChartDomain, zermelo
from navgeom.volume import bh_volume, circle_immersion, line_immersion

from conftest import euclid, funk, randers

BH = fl.euclidean_volume()  # every Randers metric over the Euclidean base has BH density 1


def on_ray(r, n):
    p = np.zeros(n)
    p[0] = r
    return p


# -- nonlinear mean curvature --------------------------------------------------


@pytest.mark.parametrize("r", [0.3, 0.5, 0.7])
def test_circle_curvature_euclidean(r):
    assert nonlinear_mean_curvature(euclid(), BH, fl.radial_function(), on_ray(r, 2)) == pytest.approx(1 / r, abs=1e-7)


@pytest.mark.parametrize("r", [0.3, 0.5, 0.7])
def test_funk_circle_curvature(r):
    assert nonlinear_mean_curvature(funk(), BH, fl.radial_function(), on_ray(r, 2)) == pytest.approx(1 / r - 2, abs=1e-6)


def test_funk_sphere_is_minimal_at_two_thirds():
    assert nonlinear_mean_curvature(funk(3), BH, fl.radial_function(), on_ray(2 / 3, 3)) == pytest.approx(0.0, abs=1e-6)


def test_riemannian_mean_curvature():
    assert riemannian_mean_curvature(euclid(3), fl.radial_function(), on_ray(0.4, 3)) == pytest.approx(2 / 0.4, abs=1e-7)
    assert riemannian_mean_curvature(euclid(), fl.coordinate_function(0), [0.1, 0.2]) == pytest.approx(0.0, abs=1e-9)
    z0 = zermelo(euclid(), fl.zero_field(2))
    f = fl.polynomial_function([(1, 0), (2, 1)], [1.0, 1.0])
    p = np.array([0.2, 0.3])
    assert nonlinear_mean_curvature(z0, BH, f, p) == pytest.approx(riemannian_mean_curvature(euclid(), f, p), abs=1e-6)


def test_profile_crosses_zero_at_two_thirds():
    radii = np.linspace(0.5, 0.8, 7)
    vals = curvature_profile(funk(3), BH, fl.radial_function(), radii)
    assert np.allclose(vals, 2 / radii - 3, atol=1e-6)
    assert locate_zero(radii, vals) == pytest.approx(2 / 3, abs=1e-3)


# -- transfer identities --------------------------------------------------------


def test_funk_mean_curvature_report():
    rep = zermelo_mean_residual(funk(), bh_volume(funk()), fl.radial_function(), on_ray(0.5, 2))
    assert rep.Pi_Z == pytest.approx(0.0, abs=1e-6)
    assert rep.Pi_F == pytest.approx(2.0, abs=1e-6)
    assert rep.divW == pytest.approx(-2.0, abs=1e-9)
    assert rep.residual < 1e-4
    assert float(rep.recomputed_residual()) == pytest.approx(rep.residual, abs=1e-15)


def test_zero_wind_report_is_exact(rng):
    z = zermelo(euclid(), fl.zero_field(2))
    pts = z.domain.sample(rng, 5) * 0.8
    rep = zermelo_mean_residual(z, BH, fl.radial_function(), pts)
    assert np.max(rep.residual) < 1e-9


def test_wind_tangent_to_fibers():
    rep = zermelo_mean_residual(randers(), BH, fl.polynomial_function([(0, 1), (0, 2)], [1.0, 0.5]), [0.1, 0.3])
    assert rep.divW == pytest.approx(0.0, abs=1e-10)
    assert rep.Pi_Z == pytest.approx(rep.Pi_F, abs=1e-6)


def test_report_recomputable():
    rep = CurvatureReport(0.5, 1.25, 0.5, 0.25, 0.5, 1)
    assert float(rep.recomputed_residual()) == 0.5


def test_laplace_transfer_examples(rng):
    assert laplace_transfer_residual(randers(), BH, fl.coordinate_function(0), [0.2, 0.1]) < 1e-8
    z = funk()
    pts = z.domain.sample(rng, 50) * 0.9
    pts = pts[np.linalg.norm(pts, axis=-1) > 0.05]
    assert np.max(laplace_transfer_residual(z, BH, fl.radial_function(), pts)) < 1e-4


def test_laplace_transfer_random_quartics(rng):
    for _ in range(4):
        w = rng.uniform(-0.4, 0.4, size=2)
        z = zermelo(euclid(), fl.linear_field(rng.uniform(-0.2, 0.2, size=(2, 2)), w))
        f = fl.random_polynomial(rng, 2, degree=4, scale=0.5)
        pts = z.domain.sample(rng, 6) * 0.8
        res = laplace_transfer_residual(z, BH, f, pts)
        assert np.max(res) < 1e-3


# -- linear mean curvature -------------------------------------------------------


@pytest.mark.parametrize("u", [0.0, 1.1, 2.5])
def test_rotation_annulus_linear_curvature(u):
    r = 1.0
    z = zermelo(euclid(2, 1.5, 0.5), fl.rotation_field(0.5))
    imm = circle_immersion(r)
    n = imm([u]) / r
    lm = linear_mean_curvature(z, imm, [u], n)
    assert lm.B == pytest.approx(0.0, abs=1e-12)
    assert lm.H == pytest.approx(1 / r, abs=1e-4)


def test_tangent_wind_gives_riemannian_curvature():
    z = randers([0.5, 0.0])
    lm = linear_mean_curvature(z, line_immersion([0.0, 0.2], [1.0, 0.0]), [0.1], np.array([0.0, 1.0]))
    assert lm.H == lm.Pi_h == pytest.approx(0.0, abs=1e-10)


def test_tilted_line_decomposition():
    z = randers([0.5, 0.0])
    d = np.array([math.cos(0.4), math.sin(0.4)])
    n = np.array([-d[1], d[0]])
    lm = linear_mean_curvature(z, line_immersion([0.1, 0.2], d), [0.3], n)
    # constant wind: D_n W = 0 so B = 0 even though h(W, n) != 0
    assert abs(lm.H - lm.Pi_h - lm.B) < 1e-4
    assert lm.B == pytest.approx(0.0, abs=1e-12)


def test_not_unit_normal():
    z = randers()
    with pytest.raises(NotUnitNormal):
        linear_mean_curvature(z, line_immersion([0.0, 0.0], [1.0, 0.0]), [0.0], np.array([0.0, 2.0]))
    with pytest.raises(NotUnitNormal):
        linear_mean_curvature(z, line_immersion([0.0, 0.0], [1.0, 0.0]), [0.0], np.array([0.6, 0.8]))


def _circle_check(z, u, r=1.0):
    imm = circle_immersion(r)
    n = imm([u]) / r
    return linear_mean_curvature(z, imm, [u], n), linear_mean_curvature_variational(z, imm, [u], n)


def test_constructed_wind_makes_circle_bh_minimal():
    w, _ = minimal_sphere_wind(1.0, 0.5, 2)
    z = zermelo(euclid(2, 1.2, 0.8), w)
    for u in (-2.5, -0.9, 0.7, 2.2):
        lm, var = _circle_check(z, u)
        assert abs(lm.H) < 1e-3
        assert abs(var) < 1e-3


def test_literal_profile_is_not_minimal_in_the_plane():
    w, _ = minimal_sphere_wind(1.0, 0.14, 2, literal=True)
    z = zermelo(euclid(2, 1.12, 0.88), w)
    lm, var = _circle_check(z, 0.7)
    assert abs(lm.H) > 0.5
    assert lm.H == pytest.approx(var, abs=1e-4)


def test_literal_and_consistent_profiles_coincide_in_space():
    _, c_lit = minimal_sphere_wind(1.0, 0.5, 3, literal=True)
    _, c_ode = minimal_sphere_wind(1.0, 0.5, 3)
    t = np.linspace(-0.1, 0.1, 9)
    assert np.allclose(c_lit(t), c_ode(t), rtol=0, atol=1e-15)


@pytest.mark.parametrize("scenario", ["rotation", "minimal"])
def test_linear_vs_nonlinear_curvature_on_circles(scenario):
    if scenario == "rotation":
        z = zermelo(euclid(2, 1.5, 0.5), fl.rotation_field(0.5))
    else:
        z = zermelo(euclid(2, 1.2, 0.8), minimal_sphere_wind(1.0, 0.5, 2)[0])
    imm = circle_immersion(1.0)
    for u in (0.3, 2.0):
        x = imm([u])
        lm = linear_mean_curvature(z, imm, [u], x)
        pi_z = nonlinear_mean_curvature(z, BH, fl.radial_function(), x)
        div_w = divergence(BH, z.wind, x)
        assert abs(lm.H - (pi_z - div_w + lm.B)) < 1e-3


def test_variational_route_on_curved_base():
    def coeff(p):
        return np.exp(0.4 * p[..., 0])[..., None, None] * np.eye(2)

    from navgeom.metric import Riemannian

    h = Riemannian(coeff, ChartDomain.ball(2, 1.5), "conformal")
    z = zermelo(h, fl.constant_field([0.2, 0.1]))
    imm = circle_immersion(0.7)
    u = 0.9
    x = imm([u])
    n = x / float(h.norm(x, x))
    lm = linear_mean_curvature(z, imm, [u], n)
    assert lm.H == pytest.approx(linear_mean_curvature_variational(z, imm, [u], n), abs=1e-4)


# -- isoparametric verdicts -------------------------------------------------------


def test_classify_spreads_pure():
    assert classify_spreads([0.0], [0.0], 1e-3) == "isoparametric"
    assert classify_spreads([0.0], [0.1], 1e-3) == "transnormal_only"
    assert classify_spreads([0.1], [0.0], 1e-3) == "neither"


def test_funk_radius_isoparametric():
    ver = isoparametric_report(funk(), BH, fl.radial_function(), [0.3, 0.5, 0.7], samples=12)
    assert ver.verdict == "isoparametric"
    assert max(ver.transnormal_spread + ver.laplacian_spread + ver.mean_curv_spread) < 1e-3
    assert all(ver.agreement)


def test_euclidean_verdicts():
    inner = ChartDomain.ball(2, 0.85)
    ver = isoparametric_report(euclid(), BH, fl.radial_function(), [0.3, 0.6], samples=12, domain=inner)
    assert ver.verdict == "isoparametric"
    fuzz = fl.polynomial_function([(1, 0), (2, 1)], [1.0, 1.0])
    ver = isoparametric_report(euclid(), BH, fuzz, [0.3, 0.5], samples=16, domain=inner)
    assert ver.verdict == "neither"
    assert all(ver.agreement)


def test_projectable_wind_keeps_verdicts():
    # rotation and W = -x preserve circles and have constant divergence
    for z in (funk(), zermelo(euclid(2, 1.5, 0.5), fl.rotation_field(0.5))):
        levels = [0.5, 0.7] if z.domain.inner_radius == 0 else [0.8, 1.2]
        vz = isoparametric_report(z, BH, fl.radial_function(), levels, samples=12)
        vf = isoparametric_report(z.base, BH, fl.radial_function(), levels, samples=12)
        assert vz.verdict == vf.verdict == "isoparametric"


def test_hessian_along_gradient_matches_fitted_profile():
    for z in (funk(), euclid()):
        assert transnormal_hessian_check(z, fl.radial_function(), [0.3, 0.5, 0.7], samples=8) < 1e-4
    half_sq = fl.polynomial_function([(2, 0), (0, 2)], [0.5, 0.5])
    assert transnormal_hessian_check(euclid(), half_sq, [0.05, 0.1, 0.2], samples=8) < 1e-4


# -- Laplacian along the navigation flow --------------------------------------------


@pytest.fixture(scope="module")
def funk_tube():
    return navigation_isoparametric_check(funk(), BH, fl.radial_function(), 0.5, np.linspace(0, 0.4, 5), samples=6)


def test_corrected_identity_on_funk_tube(funk_tube):
    assert funk_tube.corrected_residual < 1e-6
    assert funk_tube.spread_agreement
    assert funk_tube.sigma == 1.0 and funk_tube.tau == pytest.approx(-2.0)


def test_literal_identity_is_off_by_sigma_at_start(funk_tube):
    gap = funk_tube.literal[0] - funk_tube.direct[0]
    assert np.allclose(gap, funk_tube.sigma, atol=1e-6)


def test_zero_wind_tube():
    z = zermelo(euclid(), fl.zero_field(2))
    rep = navigation_isoparametric_check(z, BH, fl.radial_function(), 0.3, np.linspace(0, 0.4, 5), samples=6)
    assert rep.literal_residual < 1e-6 and rep.corrected_residual < 1e-6


def test_constant_wind_parallel_lines():
    z = randers([0.0, 0.4], radius=2.0)
    rep = navigation_isoparametric_check(z, BH, fl.coordinate_function(0), 0.0, np.linspace(0, 0.3, 4), samples=6)
    assert np.max(rep.spread_direct) < 1e-6 and np.max(rep.spread_base) < 1e-6


def test_non_constant_divergence_rejected():
    w = fl.VectorField(lambda p: 0.3 * p**2, declared_sigma=0.0)
    z = zermelo(euclid(), w)
    with pytest.raises(DivergenceNotConstant):
        navigation_isoparametric_check(z, BH, fl.radial_function(), 0.5, [0.0], samples=4)
