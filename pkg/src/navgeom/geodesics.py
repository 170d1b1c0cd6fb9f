"""Geodesics: direct integration and the navigation (wind-flow) composition."""

import warnings
from dataclasses import dataclass

import numpy as np

from . import fd
from .errors import (
    LeftCone,
    LeftDomain,
    NotHomothetic,
    NotHomotheticWarning,
    NumericBreakdown,
    ValidationError,
)
from .fields import _flow_steps, flow, homothety_estimate, sample_fiber, _gradient
from .metric import Riemannian, Zermelo

SIGMA_SERIES = 1e-8


@dataclass(frozen=True)
class GeodesicPath:
    t: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    integrator: str
    step: float

    def speeds(self, metric):
        return metric.norm(self.points, self.velocities)

    def speed_drift(self, metric):
        s = self.speeds(metric)
        return float(np.max(np.abs(s - s[0])))

    @property
    def end(self):
        return self.points[-1]


def christoffel(h, p):
    """``G[..., k, i, j]`` = Levi-Civita symbols of a Riemannian metric."""
    if not isinstance(h, Riemannian):
        raise ValidationError("metric", "Christoffel symbols need a Riemannian metric")
    p = np.asarray(p, dtype=float)
    return _christoffel(h, p)


def _christoffel(h, p):
    dh = fd.partials(h.matrix, p, fd.default_step(1))  # dh[..., i, j, l] = d_l h_ij
    # first kind: (d_i h_lj + d_j h_li - d_l h_ij) / 2, indexed [l, i, j]
    first = 0.5 * (np.einsum("...lji->...lij", dh) + dh - np.einsum("...ijl->...lij", dh))
    inv = np.linalg.inv(h.matrix(p))
    gam = np.einsum("...kl,...lij->...kij", inv, first)
    return 0.5 * (gam + np.swapaxes(gam, -1, -2))


def _riemann_accel(h):
    def accel(x, y):
        gam = _christoffel(h, x)
        return -np.einsum("...kij,...i,...j->...k", gam, y, y)

    return accel


def _spray_accel(metric):
    """``x'' `` from the Euler-Lagrange equation of ``L = F^2 / 2``.

    With ``z = (x, y)`` one Hessian of ``L`` gives both ``g = L_yy`` and the
    mixed block; the acceleration solves ``g x'' = L_x - L_yx y``.  The
    velocity is normalized first and the result rescaled (degree two).
    """

    def accel(x, y):
        n = x.shape[-1]
        speed = np.linalg.norm(y, axis=-1)
        yhat = y / speed[..., None]
        z = np.concatenate([x, yhat], axis=-1)

        def lag(zz):
            return 0.5 * metric.norm(zz[..., :n], zz[..., n:]) ** 2

        hess = fd.hessian(lag, z, fd.default_step(2))
        grad = fd.partials(lag, z, fd.default_step(1))
        if not (np.all(np.isfinite(hess)) and np.all(np.isfinite(grad))):
            raise NumericBreakdown("spray stencil left the conic domain")
        g = hess[..., n:, n:]
        mixed = hess[..., n:, :n]
        rhs = grad[..., :n] - np.einsum("...ij,...j->...i", mixed, yhat)
        return np.linalg.solve(g, rhs[..., None])[..., 0] * speed[..., None] ** 2

    return accel


def _acceleration(metric):
    if isinstance(metric, Riemannian):
        return _riemann_accel(metric), "rk4-christoffel"
    return _spray_accel(metric), "rk4-spray"


def _integrate(metric, x0, v0, times, step, check_domain=True):
    """RK4 for ``x'' = a(x, x')`` on a batch of rays; returns positions,
    velocities at ``times`` and the active mask (rays that stayed valid)."""
    accel, label = _acceleration(metric)
    x = np.array(x0, dtype=float)
    y = np.array(v0, dtype=float)
    nt = len(times)
    xs = np.full((nt,) + x.shape, np.nan)
    ys = np.full((nt,) + x.shape, np.nan)
    alive = np.ones(x.shape[0], dtype=bool)
    reason = np.zeros(x.shape[0], dtype=int)  # 1 domain, 2 cone
    t = 0.0
    for k, target in enumerate(times):
        while target - t > 1e-14:
            h = min(step, target - t)
            idx = np.flatnonzero(alive)
            if len(idx) == 0:
                break
            xa, ya = x[idx], y[idx]
            try:
                k1x, k1y = ya, accel(xa, ya)
                k2x, k2y = ya + 0.5 * h * k1y, accel(xa + 0.5 * h * k1x, ya + 0.5 * h * k1y)
                k3x, k3y = ya + 0.5 * h * k2y, accel(xa + 0.5 * h * k2x, ya + 0.5 * h * k2y)
                k4x, k4y = ya + h * k3y, accel(xa + h * k3x, ya + h * k3y)
            except (NumericBreakdown, np.linalg.LinAlgError):
                bad = _locate_breakdown(metric, accel, xa, ya, h)
                alive[idx[bad]] = False
                reason[idx[bad]] = 2
                continue
            xn = xa + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
            yn = ya + (h / 6.0) * (k1y + 2 * k2y + 2 * k3y + k4y)
            inside = metric.domain.contains(xn) if check_domain else np.ones(len(idx), dtype=bool)
            finite = np.isfinite(metric.norm(xn, yn))
            alive[idx[~inside]] = False
            reason[idx[~inside]] = 1
            alive[idx[inside & ~finite]] = False
            reason[idx[inside & ~finite]] = 2
            x[idx], y[idx] = xn, yn
            t += h
        xs[k, alive] = x[alive]
        ys[k, alive] = y[alive]
    return xs, ys, alive, reason, label


def _locate_breakdown(metric, accel, xa, ya, h):
    bad = np.zeros(len(xa), dtype=bool)
    for i in range(len(xa)):
        try:
            accel(xa[i : i + 1], ya[i : i + 1])
        except (NumericBreakdown, np.linalg.LinAlgError):
            bad[i] = True
    if not np.any(bad):
        bad[:] = True
    return bad


def _time_grid(T, samples):
    return np.linspace(0.0, T, samples + 1)


def geodesic(metric, p, v, T=1.0, step=1e-2, samples=10):
    """Integrate the geodesic from ``(p, v)`` and sample it at ``samples + 1`` times."""
    p = metric.domain.check(p)
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        raise ValidationError("v", "initial velocity must be nonzero")
    if not np.isfinite(metric.norm(p, v)):
        raise LeftCone(f"initial velocity {v} is outside the conic domain")
    times = _time_grid(T, samples)
    xs, ys, alive, reason, label = _integrate(metric, p[None], v[None], times, step)
    if not alive[0]:
        if reason[0] == 1:
            raise LeftDomain("geodesic left the chart domain")
        raise LeftCone("geodesic left the conic domain")
    return GeodesicPath(times, xs[:, 0], ys[:, 0], label, step)


def reparametrization(sigma, t):
    """``s(t) = (exp(sigma t) - 1) / sigma`` and ``s'(t)``, with the series near 0."""
    t = np.asarray(t, dtype=float)
    if abs(sigma) < SIGMA_SERIES:
        return t + 0.5 * sigma * t**2, 1.0 + sigma * t
    return np.expm1(sigma * t) / sigma, np.exp(sigma * t)


def _resolve_sigma(metric, tol=1e-6):
    wind = metric.wind
    if wind.declared_sigma is not None:
        return float(wind.declared_sigma)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NotHomotheticWarning)
        sigma, residual = homothety_estimate(metric.base, wind)
    if residual > tol:
        raise NotHomothetic(f"wind is not homothetic (residual {residual:.3e})")
    return sigma


def navigation_geodesic(metric, p, v, T=1.0, step=1e-2, samples=10, sigma=None):
    """Unit-speed geodesic of a Zermelo metric as ``phi^W_t(base geodesic(s(t)))``."""
    if not isinstance(metric, Zermelo):
        raise ValidationError("metric", "navigation geodesics need a Zermelo metric")
    p = metric.domain.check(p)
    v = np.asarray(v, dtype=float)
    z = float(metric.norm(p, v))
    if not np.isfinite(z) or abs(z - 1.0) > 1e-8:
        raise ValidationError("v", f"initial velocity must have unit Zermelo norm (got {z})")
    sigma = _resolve_sigma(metric) if sigma is None else float(sigma)
    wind = metric.wind
    base = metric.base
    times = _time_grid(T, samples)
    svals, sdots = reparametrization(sigma, times)
    vt = v - wind(p)
    order = np.argsort(svals)
    # the base geodesic may run outside the chart (it is pulled back by the
    # wind flow); only the composed path is held to the domain
    xs, ys, alive, reason, _ = _integrate(base, p[None], vt[None], svals[order], step, check_domain=False)
    if not alive[0]:
        raise LeftCone("base geodesic left the conic domain")
    bx = np.empty((len(times), len(p)))
    by = np.empty_like(bx)
    bx[order], by[order] = xs[:, 0], ys[:, 0]
    pts = np.empty_like(bx)
    vel = np.empty_like(bx)
    for k, t in enumerate(times):
        pts[k] = flow(wind, bx[k], t, step)
        if not metric.domain.contains(pts[k]):
            raise LeftDomain(f"navigation geodesic left the chart domain before t={t}")
        push = fd.directional(lambda q, t=t: _flow_steps(wind, q, t, max(1, int(np.ceil(abs(t) / step)))), bx[k], by[k], 1e-4)
        vel[k] = wind(pts[k]) + sdots[k] * push
    return GeodesicPath(times, pts, vel, "navigation", step)


@dataclass(frozen=True)
class TubeRay:
    origin: np.ndarray
    t: np.ndarray
    points: np.ndarray
    velocities: np.ndarray


def distance_tube(metric, f, level, t_values, fiber_samples=16, seed=0, step=1e-2, domain=None):
    """Normal geodesics leaving the fiber ``f = level`` with unit initial velocity
    ``grad f / F(grad f)``; by construction the distance function equals ``t``
    along each ray.  Rays that leave the domain or cone are dropped with a warning."""
    domain = domain or metric.domain
    t_values = np.asarray(t_values, dtype=float)
    if np.any(np.diff(t_values) < 0) or t_values[0] < 0:
        raise ValidationError("t_values", "need a nondecreasing grid starting at t >= 0")
    q = sample_fiber(f, level, domain, fiber_samples, seed)
    g = _gradient(metric, f, q)
    xi = g / metric.norm(q, g)[..., None]
    ok = np.all(np.isfinite(xi), axis=-1)
    xs, ys, alive, reason, _ = _integrate(metric, q[ok], xi[ok], t_values, step)
    rays = []
    dropped = int(np.sum(~ok))
    for i in range(int(np.sum(ok))):
        if not alive[i]:
            dropped += 1
            continue
        rays.append(TubeRay(q[ok][i], t_values.copy(), xs[:, i], ys[:, i]))
    if dropped:
        warnings.warn(f"distance_tube: {dropped} ray(s) dropped (left domain or cone)", stacklevel=2)
    return rays


def geodesic_fan(metric, p, count=8, T=1.0, step=1e-2, samples=10):
    """Unit-speed geodesics from ``p`` in ``count`` evenly spaced plane directions.

    Initial velocities are ``u + W(p)`` with ``u`` base-unit, so they have unit
    Zermelo norm.  Rays that leave the chart are skipped with a warning.
    """
    p = metric.domain.check(p)
    if len(p) != 2:
        raise ValidationError("p", "geodesic fans are planar")
    base = metric.base if isinstance(metric, Zermelo) else metric
    wind = metric.wind(p) if isinstance(metric, Zermelo) else np.zeros(2)
    paths = []
    for ang in np.linspace(0.0, 2 * np.pi, count, endpoint=False):
        u = np.array([np.cos(ang), np.sin(ang)])
        u = u / base.norm(p, u)
        try:
            paths.append(geodesic(metric, p, u + wind, T=T, step=step, samples=samples))
        except (LeftDomain, LeftCone) as exc:
            warnings.warn(f"geodesic_fan: ray at angle {ang:.3f} dropped ({exc})", stacklevel=2)
    return paths
