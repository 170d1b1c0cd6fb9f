"""Mean curvatures, the navigation transfer identities, and isoparametric verdicts."""

import math
from dataclasses import dataclass, field

import numpy as np

from . import fd
from .errors import DivergenceNotConstant, NotUnitNormal, ValidationError
from .fields import (
    ScalarField,
    VectorField,
    _divergence,
    _flow_steps,
    _gradient,
    _scalar_out,
    as_vector_field,
    divergence,
    hessian_grad_grad,
    laplacian,
    riemannian_volume,
    sample_fiber,
)
from .geodesics import _christoffel, _integrate, reparametrization
from .metric import Riemannian, WindKind, Zermelo
from .roots import illinois

SPREAD_TOL = 1e-3


# ---------------------------------------------------------------------------
# nonlinear mean curvature


def nonlinear_mean_curvature(metric, volume, f, p, method="auto"):
    """``(Lap f - Hess f(u, u)) / F(grad f)`` with ``u`` the unit gradient.

    The normal is ``grad f / F(grad f)``; for a distance function this is
    the Laplacian itself.
    """
    lap = np.asarray(laplacian(metric, volume, f, p, method))
    hgg = np.asarray(hessian_grad_grad(metric, f, p, method))
    p = np.asarray(p, dtype=float)
    g = _gradient(metric, f, p, method)
    norm = metric.norm(p, g)
    return _scalar_out((lap - hgg / norm**2) / norm)


def unit_normal_divergence(metric, volume, f, p, method="auto"):
    """``div(grad f / F(grad f))`` computed directly (no Hessian term)."""
    p = metric.domain.check(p)
    return _scalar_out(_divergence(volume, as_vector_field(metric, f, method, unit=True), p))


def riemannian_mean_curvature(h, f, p):
    """Divergence of the unit ``h``-gradient against the Riemannian volume."""
    if not isinstance(h, Riemannian):
        raise ValidationError("metric", "expected a Riemannian metric")
    return unit_normal_divergence(h, riemannian_volume(h), f, p)


@dataclass(frozen=True)
class CurvatureReport:
    level: object
    Pi_Z: object
    Pi_F: object
    divW: object
    residual: object
    samples: int

    def recomputed_residual(self):
        return np.abs(np.asarray(self.Pi_Z) - np.asarray(self.Pi_F) - np.asarray(self.divW))

    def as_dict(self):
        conv = lambda x: np.asarray(x).tolist()  # noqa: E731
        return {
            "level": conv(self.level),
            "Pi_Z": conv(self.Pi_Z),
            "Pi_F": conv(self.Pi_F),
            "divW": conv(self.divW),
            "residual": conv(self.residual),
            "samples": self.samples,
        }


def _require_zermelo(metric):
    if not isinstance(metric, Zermelo):
        raise ValidationError("metric", "expected a Zermelo metric")
    return metric


def zermelo_mean_residual(metric, volume, f, p):
    """Mean curvature of the level of ``f`` through ``p`` for ``Z`` and for its
    base (normals ``grad^Z f / Z`` and ``grad^F f / F``) against ``div W``."""
    z = _require_zermelo(metric)
    p = z.domain.check(p)
    pi_z = np.asarray(nonlinear_mean_curvature(z, volume, f, p))
    pi_f = np.asarray(nonlinear_mean_curvature(z.base, volume, f, p))
    div_w = np.asarray(divergence(volume, z.wind, p))
    res = np.abs(pi_z - pi_f - div_w)
    count = 1 if p.ndim == 1 else int(np.prod(p.shape[:-1]))
    return CurvatureReport(_scalar_out(f(p)), _scalar_out(pi_z), _scalar_out(pi_f), _scalar_out(div_w), _scalar_out(res), count)


def laplace_transfer_residual(metric, volume, f, p, return_sides=False):
    """Both sides of the Laplacian transfer identity, computed independently.

    Left: Laplacian and Hessian of ``f`` for ``Z`` with the gradient from a
    Newton solve of the Legendre map of ``Z`` itself.  Right: the same for
    the base metric plus ``div W``.
    """
    z = _require_zermelo(metric)
    p = z.domain.check(p)
    lhs = np.asarray(nonlinear_mean_curvature(z, volume, f, p, method="newton"))
    rhs = np.asarray(nonlinear_mean_curvature(z.base, volume, f, p)) + np.asarray(divergence(volume, z.wind, p))
    res = np.abs(lhs - rhs)
    if return_sides:
        return _scalar_out(res), _scalar_out(lhs), _scalar_out(rhs)
    return _scalar_out(res)


def curvature_profile(metric, volume, f, radii, direction=None):
    """``Pi`` on the level sets ``f = r`` along a ray (radial scenarios)."""
    n = metric.dim
    d = np.zeros(n) if direction is None else np.asarray(direction, dtype=float)
    if direction is None:
        d[0] = 1.0
    d = d / np.linalg.norm(d)
    radii = np.asarray(radii, dtype=float)
    pts = radii[:, None] * d
    return np.asarray(nonlinear_mean_curvature(metric, volume, f, pts))


def locate_zero(radii, values):
    """Linear interpolation of the first sign change of ``values``."""
    radii = np.asarray(radii, dtype=float)
    values = np.asarray(values, dtype=float)
    idx = np.flatnonzero(np.sign(values[:-1]) != np.sign(values[1:]))
    if len(idx) == 0:
        return float("nan")
    i = idx[0]
    return float(radii[i] - values[i] * (radii[i + 1] - radii[i]) / (values[i + 1] - values[i]))


# ---------------------------------------------------------------------------
# linear mean curvature of immersions in Randers spaces


def _randers_parts(metric):
    z = _require_zermelo(metric)
    if not isinstance(z.base, Riemannian):
        raise ValidationError("metric", "linear mean curvature needs a Riemannian base")
    if z.wind_class.kind != WindKind.MILD:
        raise ValidationError("metric", "linear mean curvature needs mild wind")
    return z.base, z.wind


def _check_normal(hm, frame, normal, tol=1e-8):
    if abs(normal @ hm @ normal - 1.0) > tol:
        raise NotUnitNormal("normal is not h-unit")
    if np.max(np.abs(frame.T @ hm @ normal)) > tol:
        raise NotUnitNormal("normal is not h-orthogonal to the tangent frame")


def immersion_mean_curvature(h, imm, u, normal):
    """Riemannian mean curvature (trace convention) of an immersion along ``normal``."""
    u = np.asarray(u, dtype=float)
    x = imm(u)
    frame = imm.checked_frame(u)
    hm = h.matrix(x)
    normal = np.asarray(normal, dtype=float)
    _check_normal(hm, frame, normal)
    second = imm.second_derivatives(u)  # [a, i, j]
    gam = _christoffel(h, x)  # [k, i, j]
    cov = second + np.einsum("kab,ai,bj->kij", gam, frame, frame)
    gram = frame.T @ hm @ frame
    inv = np.linalg.inv(gram)
    return float(-np.einsum("ij,kij,kl,l->", inv, cov, hm, normal))


@dataclass(frozen=True)
class LinearMeanCurvature:
    H: float
    Pi_h: float
    B: float


def linear_mean_curvature(metric, imm, u, normal):
    """``H(n) = Pi^h_n + B(n)`` with ``B(n) = m h(W,n) h(D_n W, n) / (1 - h(W,n)^2)``."""
    h, wind = _randers_parts(metric)
    u = imm.domain.check(u)
    x = imm(u)
    frame = imm.checked_frame(u)
    normal = np.asarray(normal, dtype=float)
    hm = h.matrix(x)
    _check_normal(hm, frame, normal)
    pi_h = immersion_mean_curvature(h, imm, u, normal)
    m = frame.shape[-1]
    w = wind(x)
    dnw = wind.jac(x) @ normal + np.einsum("kij,i,j->k", _christoffel(h, x), normal, w)
    hwn = w @ hm @ normal
    b = m * hwn * (dnw @ hm @ normal) / (1.0 - hwn**2)
    return LinearMeanCurvature(float(pi_h + b), float(pi_h), float(b))


def _induced_density(h, wind, x, frame):
    """``lambda^{m/2} sqrt(det G)`` for frames ``(..., n, m)`` at points ``x``."""
    hm = h.matrix(x)
    w = wind(x)
    gram = np.einsum("...ai,...ab,...bj->...ij", frame, hm, frame)
    rhs = np.einsum("...ai,...ab,...b->...i", frame, hm, w)
    coef = np.linalg.solve(gram, rhs[..., None])[..., 0]
    perp = w - np.einsum("...ai,...i->...a", frame, coef)
    lam = 1.0 / (1.0 - np.einsum("...a,...ab,...b->...", perp, hm, perp))
    m = frame.shape[-1]
    return lam ** (m / 2) * np.sqrt(np.linalg.det(gram))


def hypersurface_normal_field(h, imm, reference):
    """Unit ``h``-normal of a hypersurface immersion, oriented like ``reference``."""
    reference = np.asarray(reference, dtype=float)

    def normal(u):
        x = imm(u)
        frame = imm.frame(u)
        n = x.shape[-1]
        if frame.shape[-1] != n - 1:
            raise ValidationError("imm", "default normal field only for hypersurfaces")
        hm = h.matrix(x)
        co = np.einsum("...ai,...ab->...ib", frame, hm)  # rows annihilate the normal
        _, _, vt = np.linalg.svd(co)
        nv = vt[..., -1, :]
        nv = nv / np.sqrt(np.einsum("...a,...ab,...b->...", nv, hm, nv))[..., None]
        sign = np.sign(np.einsum("...a,...ab,b->...", nv, hm, reference))
        return nv * np.where(sign == 0, 1.0, sign)[..., None]

    return normal


def linear_mean_curvature_variational(metric, imm, u, normal, dt=1e-3, normal_field=None, steps=8):
    """``d/dt ln mu_t`` at ``t = 0`` for the variation along normal ``h``-geodesics.

    ``mu_t`` is the induced BH density of ``u -> beta_{imm(u)}(t)``, computed
    from the induced navigation data; independent of the closed formula.
    """
    h, wind = _randers_parts(metric)
    u = imm.domain.check(u)
    nf = normal_field or hypersurface_normal_field(h, imm, normal)
    flat = _is_constant_metric(h)

    def moved(uu, t):
        x0 = imm(uu)
        n0 = nf(uu)
        if flat or t == 0:
            return x0 + t * n0
        shape = x0.shape
        sign = 1.0 if t > 0 else -1.0
        xs = _integrate(h, x0.reshape(-1, shape[-1]), sign * n0.reshape(-1, shape[-1]), [abs(t)], abs(t) / steps, False)[0]
        return xs[-1].reshape(shape)

    def log_mu(t):
        x = moved(u, t)
        frame = fd.partials(lambda uu: moved(uu, t), u, fd.default_step(1))
        return math.log(float(_induced_density(h, wind, x, frame)))

    vals = [log_mu(k * dt) for k in (-2, -1, 1, 2)]
    return (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * dt)


def _is_constant_metric(h, probes=4):
    pts = h.domain.grid(16)[:probes]
    mats = h.matrix(pts)
    return bool(np.allclose(mats, mats[0], rtol=0, atol=0))


# ---------------------------------------------------------------------------
# BH-minimal wind construction around spheres


def minimal_sphere_wind(radius=1.0, pi0=0.5, dim=2, literal=False):
    """Wind ``c(|x| - R) x/|x|`` around the sphere ``|x| = R`` with
    ``B(n) = -Pi^h_n``, so the sphere is BH-minimal for the resulting
    Randers metric.

    ``c(t) = sqrt(1 - exp(2 t Pi / m - pi0))`` solves
    ``c' = -(1 - c^2) Pi / (m c)`` for hypersurfaces of dimension ``m``.
    ``literal=True`` uses ``c(t) = 2/(n-1) sqrt(1 - exp(t Pi - pi0))``
    instead, which solves that relation only when ``n = 3``.
    """
    m = dim - 1
    pi_h = m / radius

    if literal:

        def c_of(t):
            return (2.0 / m) * np.sqrt(1.0 - np.exp(t * pi_h - pi0))

    else:

        def c_of(t):
            return np.sqrt(1.0 - np.exp(2.0 * t * pi_h / m - pi0))

    def value(p):
        p = np.asarray(p, dtype=float)
        r = np.linalg.norm(p, axis=-1)
        return (c_of(r - radius) / r)[..., None] * p

    name = "minimal_sphere_literal" if literal else "minimal_sphere"
    return VectorField(value, name=name), c_of


# ---------------------------------------------------------------------------
# isoparametric verdicts


@dataclass(frozen=True)
class IsoparametricVerdict:
    levels: tuple
    transnormal_spread: tuple
    laplacian_spread: tuple
    mean_curv_spread: tuple
    tolerance: float
    verdict: str
    agreement: tuple

    def as_dict(self):
        return {
            "levels": list(self.levels),
            "transnormal_spread": list(self.transnormal_spread),
            "laplacian_spread": list(self.laplacian_spread),
            "mean_curv_spread": list(self.mean_curv_spread),
            "tolerance": self.tolerance,
            "verdict": self.verdict,
            "agreement": list(self.agreement),
        }


def classify_spreads(transnormal, laplacian_spreads, tol):
    if all(s < tol for s in transnormal):
        if all(s < tol for s in laplacian_spreads):
            return "isoparametric"
        return "transnormal_only"
    return "neither"


def isoparametric_report(metric, volume, f, levels, samples=32, seed=0, tol=SPREAD_TOL, domain=None):
    domain = domain or metric.domain

    def energy(q):
        return metric.norm(q, _gradient(metric, f, q)) ** 2

    def lap(q):
        return laplacian(metric, volume, f, q)

    def pi(q):
        return nonlinear_mean_curvature(metric, volume, f, q)

    tr, la, mc = [], [], []
    for level in sorted(levels):
        pts = sample_fiber(f, level, domain, samples, seed)
        for out, q in ((tr, energy), (la, lap), (mc, pi)):
            vals = np.asarray(q(pts))
            out.append(float(np.max(vals) - np.min(vals)))
    agreement = tuple((a < tol) == (b < tol) for a, b in zip(la, mc))
    return IsoparametricVerdict(
        tuple(float(x) for x in sorted(levels)),
        tuple(tr),
        tuple(la),
        tuple(mc),
        tol,
        classify_spreads(tr, la, tol),
        agreement,
    )


def transnormal_hessian_check(metric, f, levels, samples=32, seed=0, degree=3, domain=None):
    """Fit ``F^2(grad f) = b(f)`` by least squares and compare ``Hess f(grad f, grad f)``
    with ``b'(f) b(f) / 2``; returns the largest deviation."""
    domain = domain or metric.domain
    pts = np.concatenate([sample_fiber(f, lv, domain, samples, seed) for lv in levels])
    vals = f(pts)
    b_vals = metric.norm(pts, _gradient(metric, f, pts)) ** 2
    coef = np.polyfit(vals, b_vals, min(degree, len(levels) - 1))
    b = np.polyval(coef, vals)
    db = np.polyval(np.polyder(coef), vals)
    hgg = np.asarray(hessian_grad_grad(metric, f, pts))
    return float(np.max(np.abs(hgg - 0.5 * db * b)))


# ---------------------------------------------------------------------------
# Laplacian along the navigation flow


def navigation_distance(metric, rho_tilde, sigma, t_range=(-0.5, 1.5), steps_per_unit=100):
    """Distance function ``rho`` of ``Z`` with ``rho(phi^W_t(p)) = t`` for ``p``
    on the flow of ``grad rho_tilde``: ``rho_tilde(phi^W_{-t}(q)) = s(t)``."""
    wind = metric.wind
    lo, hi = t_range
    nsteps = int(math.ceil(max(abs(lo), abs(hi)) * steps_per_unit))

    def value(q):
        q = np.asarray(q, dtype=float)
        shape = q.shape
        flat = q.reshape(-1, shape[-1])

        def g(t):
            back = _flow_steps(wind, flat, -t, nsteps)
            return rho_tilde(back) - reparametrization(sigma, t)[0]

        a = np.full(len(flat), float(lo))
        b = np.full(len(flat), float(hi))
        return illinois(g, a, b).reshape(shape[:-1])

    return ScalarField(value, None, "rho")


@dataclass
class NavigationIsoReport:
    t_grid: np.ndarray
    fiber: np.ndarray
    direct: np.ndarray
    literal: np.ndarray
    corrected: np.ndarray
    literal_residual: float
    corrected_residual: float
    spread_direct: np.ndarray
    spread_base: np.ndarray
    spread_agreement: bool
    sigma: float
    tau: float
    div_w: float
    extras: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "t_grid": self.t_grid.tolist(),
            "literal_residual": self.literal_residual,
            "corrected_residual": self.corrected_residual,
            "spread_direct": self.spread_direct.tolist(),
            "spread_base": self.spread_base.tolist(),
            "spread_agreement": self.spread_agreement,
            "sigma": self.sigma,
            "tau": self.tau,
            "div_w": self.div_w,
        }


def navigation_isoparametric_check(metric, volume, rho_tilde, level, t_grid, samples=10, seed=0, sigma=None, div_tol=1e-6, spread_tol=SPREAD_TOL, flow_steps=100):
    """Laplacian of the navigation distance function on the tube
    ``q = phi^W_t(phi~_{s(t)}(p))`` over fiber points ``p`` and times ``t``.

    ``direct`` is the Laplacian of ``rho`` for ``Z`` computed by finite
    differences.  ``literal`` is ``div W + s'' + s' exp(tau t) Lap^F rho~``;
    ``corrected`` is ``div W + s' Lap^F rho~ + d/dt ln(s' + d rho~(W))`` with
    the base quantities evaluated at ``phi~_{s(t)}(p)``.
    """
    z = _require_zermelo(metric)
    wind = z.wind
    base = z.base
    if sigma is None:
        if wind.declared_sigma is None:
            raise ValidationError("wind", "a declared homothety coefficient is required")
        sigma = float(wind.declared_sigma)
    probe = z.domain.grid(64)
    divs = np.asarray(divergence(volume, wind, probe))
    if float(np.max(divs) - np.min(divs)) > div_tol:
        raise DivergenceNotConstant(f"div W varies by {np.max(divs) - np.min(divs):.3e}")
    div_w = float(np.mean(divs))
    tau = div_w
    t_grid = np.asarray(t_grid, dtype=float)
    fiber = sample_fiber(rho_tilde, level, z.domain, samples, seed)
    base_flow = as_vector_field(base, rho_tilde, unit=True)
    s, sd = reparametrization(sigma, t_grid)
    sdd = sigma * sd

    rho = navigation_distance(z, lambda x: rho_tilde(x) - level, sigma, (float(t_grid.min()) - 0.5, float(t_grid.max()) + 0.5))
    nt, npnt = len(t_grid), len(fiber)
    direct = np.empty((nt, npnt))
    base_lap = np.empty((nt, npnt))
    log_term = np.empty((nt, npnt))

    def scale(tt, pts):
        x = _flow_steps(base_flow, pts, reparametrization(sigma, tt)[0], flow_steps)
        return reparametrization(sigma, tt)[1] + np.einsum("...i,...i->...", rho_tilde.d(x), wind(x))

    for j, t in enumerate(t_grid):
        xb = _flow_steps(base_flow, fiber, s[j], flow_steps)
        q = _flow_steps(wind, xb, t, flow_steps)
        direct[j] = laplacian(z, volume, rho, q)
        # base points may sit outside the chart (the wind flow pulls them back)
        base_lap[j] = _divergence(volume, as_vector_field(base, rho_tilde), xb)
        dtt = 1e-3
        vals = [np.log(scale(t + k * dtt, fiber)) for k in (-2, -1, 1, 2)]
        log_term[j] = (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * dtt)

    literal = div_w + sdd[:, None] + (sd * np.exp(tau * t_grid))[:, None] * base_lap
    corrected = div_w + sd[:, None] * base_lap + log_term
    spread_direct = direct.max(axis=1) - direct.min(axis=1)
    spread_base = base_lap.max(axis=1) - base_lap.min(axis=1)
    agree = bool(np.all((spread_direct < spread_tol) == (spread_base < spread_tol)))
    return NavigationIsoReport(
        t_grid,
        fiber,
        direct,
        literal,
        corrected,
        float(np.max(np.abs(direct - literal))),
        float(np.max(np.abs(direct - corrected))),
        spread_direct,
        spread_base,
        agree,
        float(sigma),
        float(tau),
        div_w,
    )
