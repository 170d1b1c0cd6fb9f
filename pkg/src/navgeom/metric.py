"""Metrics on a single coordinate chart.

Three variants share one vectorized evaluation surface ``metric.norm(p, v)``
(broadcasting over leading axes, NaN where ``v`` is outside the conic
domain):

* :class:`Riemannian` -- a field of SPD coefficient matrices,
* :class:`NormField` -- an arbitrary positively 1-homogeneous norm field,
* :class:`Zermelo` -- the metric solved from navigation data ``(F, W)``
  through ``F(v / Z(v) - W) = 1`` on the positive-definite branch.

The module-level functions validate their arguments and raise; the
underscore helpers are the batched kernels the rest of the package uses.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from . import fd
from .roots import illinois
from .errors import (
    BranchViolation,
    MixedRegime,
    NoConvergence,
    NotAdmissible,
    NotInImage,
    NumericBreakdown,
    OutsideDomain,
    ValidationError,
    ZeroVector,
)

CRITICAL_BAND = 1e-9
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ChartDomain:
    """Open ball (optionally with a concentric hole) or open axis-aligned box."""

    dim: int
    kind: str = "ball"
    center: tuple = ()
    radius: float = 1.0
    inner_radius: float = 0.0
    lower: tuple = ()
    upper: tuple = ()

    def __post_init__(self):
        if self.dim < 1:
            raise ValidationError("dim", "must be positive")
        if self.kind == "ball":
            if not self.center:
                object.__setattr__(self, "center", (0.0,) * self.dim)
            if len(self.center) != self.dim:
                raise ValidationError("center", "length must equal dim")
            if not (0.0 <= self.inner_radius < self.radius):
                raise ValidationError("radius", "need 0 <= inner_radius < radius")
        elif self.kind == "box":
            if len(self.lower) != self.dim or len(self.upper) != self.dim:
                raise ValidationError("bounds", "lower/upper length must equal dim")
            if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
                raise ValidationError("bounds", "box must be nonempty")
        else:
            raise ValidationError("kind", f"unknown domain kind {self.kind!r}")

    @classmethod
    def ball(cls, dim, radius=1.0, center=None, inner_radius=0.0):
        center = tuple(float(c) for c in center) if center is not None else ()
        return cls(dim, "ball", center, float(radius), float(inner_radius))

    @classmethod
    def box(cls, lower, upper):
        lower = tuple(float(x) for x in lower)
        upper = tuple(float(x) for x in upper)
        return cls(len(lower), "box", lower=lower, upper=upper)

    def contains(self, p):
        p = np.asarray(p, dtype=float)
        if p.shape[-1] != self.dim:
            return np.zeros(p.shape[:-1], dtype=bool)
        if self.kind == "ball":
            r = np.linalg.norm(p - np.asarray(self.center), axis=-1)
            return (r < self.radius) & ((r > self.inner_radius) | (self.inner_radius == 0.0))
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        return np.all((p > lo) & (p < hi), axis=-1)

    def check(self, p):
        p = np.asarray(p, dtype=float)
        if p.shape[-1:] != (self.dim,):
            raise OutsideDomain(f"point of shape {p.shape} in a {self.dim}-dimensional chart")
        if not np.all(self.contains(p)):
            raise OutsideDomain(f"point {p} outside the chart domain")
        return p

    def bounding_box(self):
        if self.kind == "ball":
            c = np.asarray(self.center)
            return c - self.radius, c + self.radius
        return np.asarray(self.lower), np.asarray(self.upper)

    def sample(self, rng, count):
        """``count`` uniform points of the domain (rejection from the bounding box)."""
        lo, hi = self.bounding_box()
        out = []
        have = 0
        while have < count:
            pts = rng.uniform(lo, hi, size=(max(2 * count, 16), self.dim))
            pts = pts[self.contains(pts)]
            out.append(pts)
            have += len(pts)
        return np.concatenate(out)[:count]

    def grid(self, count):
        """Deterministic interior grid with roughly ``count`` points."""
        k = max(2, int(round(count ** (1.0 / self.dim))))
        lo, hi = self.bounding_box()
        axes = [lo[i] + (hi[i] - lo[i]) * (np.arange(k) + 0.5) / k for i in range(self.dim)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        return pts[self.contains(pts)]


class WindKind(str, Enum):
    MILD = "mild"
    CRITICAL = "critical"
    STRONG = "strong"


@dataclass(frozen=True)
class WindClass:
    kind: WindKind
    witness_min: float
    witness_max: float


@dataclass(frozen=True)
class FundamentalTensor:
    g: np.ndarray
    basepoint: np.ndarray
    direction: np.ndarray


class Metric:
    domain: ChartDomain

    @property
    def dim(self):
        return self.domain.dim

    def norm(self, p, v):
        raise NotImplementedError


def _require_chart(domain):
    if domain.dim < 2:
        raise ValidationError("dim", "metrics live on charts of dimension >= 2")


@dataclass(frozen=True)
class Riemannian(Metric):
    """``coeff(p)`` returns SPD matrices of shape ``p.shape + (n,)``."""

    coeff: Callable
    domain: ChartDomain
    name: str = "riemannian"

    def __post_init__(self):
        _require_chart(self.domain)

    def matrix(self, p):
        p = np.asarray(p, dtype=float)
        return np.broadcast_to(self.coeff(p), p.shape + (p.shape[-1],))

    def norm(self, p, v):
        h = self.matrix(p)
        q = np.einsum("...i,...ij,...j->...", v, h, v)
        return np.sqrt(np.maximum(q, 0.0))


@dataclass(frozen=True)
class NormField(Metric):
    """``F(p, v)`` positively 1-homogeneous in ``v``; NaN marks non-admissible ``v``."""

    F: Callable
    domain: ChartDomain
    name: str = "norm_field"

    def __post_init__(self):
        _require_chart(self.domain)

    def norm(self, p, v):
        return np.asarray(self.F(np.asarray(p, dtype=float), np.asarray(v, dtype=float)), dtype=float)


@dataclass(frozen=True)
class Zermelo(Metric):
    """Navigation metric; build it with :func:`zermelo` so the wind is classified."""

    base: Metric
    wind: object
    wind_class: WindClass
    name: str = "zermelo"

    @property
    def domain(self):
        return self.base.domain

    def norm(self, p, v):
        p = np.asarray(p, dtype=float)
        v = np.asarray(v, dtype=float)
        p, v = np.broadcast_arrays(p, v)
        w = np.asarray(self.wind(p), dtype=float)
        vn = np.linalg.norm(v, axis=-1)
        safe = np.where(vn > 0, vn, 1.0)
        vhat = v / safe[..., None]
        s = _navigation_root(self.base.norm, p, vhat, w, self.wind_class.kind)
        return np.where(vn > 0, vn / s, 0.0)


def zermelo(base, wind, samples=400):
    if isinstance(base, Zermelo):
        raise ValidationError("base", "navigation over a Zermelo base is not supported")
    return Zermelo(base, wind, classify_wind(base, wind, samples))


# ---------------------------------------------------------------------------
# navigation root solve


def _navigation_root(base_norm, p, vhat, w, kind, maxiter=200):
    """Largest ``s > 0`` with ``F(p, s*vhat - w) = 1`` (NaN when none exists).

    Along the ray the function ``s -> F(s*vhat - w)`` is convex, and the
    upward crossing is exactly the branch where ``g_u(u, -W) < 1``.
    """

    def phi(s):
        return base_norm(p, s[..., None] * vhat - w) - 1.0

    f_w = base_norm(p, w)
    f_v = base_norm(p, vhat)
    hi = 1.5 * (1.0 + f_w) / f_v + 1e-12
    f_hi = phi(hi)
    grow = 0
    while np.any(f_hi <= 0) and grow < 60:
        hi = np.where(f_hi <= 0, 2.0 * hi, hi)
        f_hi = phi(hi)
        grow += 1

    if kind == WindKind.MILD:
        lo = np.zeros_like(hi)
        f_lo = phi(lo)
    else:
        # minimise the convex profile to find a point below the indicatrix
        a = np.zeros_like(hi)
        b = hi.copy()
        for _ in range(90):
            c = b - _GOLDEN * (b - a)
            d = a + _GOLDEN * (b - a)
            left = phi(c) < phi(d)
            b = np.where(left, d, b)
            a = np.where(left, a, c)
        lo = 0.5 * (a + b)
        f_lo = phi(lo)
        f_lo = np.where(f_lo < -1e-13, f_lo, np.nan)

    root = illinois(phi, lo, hi, f_lo, f_hi, maxiter)
    return np.where(np.isfinite(f_lo), root, np.nan)


def randers_closed_form(h, w, v):
    """Positive-definite branch of the Randers quadratic (oracle for the root solve).

    ``h`` is the metric matrix, ``w`` the wind and ``v`` the vector at one
    point; NaN when ``v`` lies outside the cone.
    """
    h = np.asarray(h, dtype=float)
    w = np.asarray(w, dtype=float)
    v = np.asarray(v, dtype=float)
    vv = np.einsum("...i,...ij,...j->...", v, h, v)
    vw = np.einsum("...i,...ij,...j->...", v, h, w)
    a = 1.0 - np.einsum("...i,...ij,...j->...", w, h, w)
    disc = vw**2 + a * vv
    with np.errstate(invalid="ignore"):
        s = (vw + np.sqrt(disc)) / vv
    s = np.where((disc > 0) & (s > 0), s, np.nan)
    return 1.0 / s


# ---------------------------------------------------------------------------
# wind classification


def classify_wind(base, wind, samples=400, domain=None):
    if isinstance(base, Zermelo):
        raise ValidationError("base", "wind is classified against a Riemannian or norm-field base")
    domain = domain or base.domain
    pts = domain.grid(samples)
    w = np.asarray(wind(pts), dtype=float)
    witness = base.norm(pts, -w)
    lo, hi = float(np.min(witness)), float(np.max(witness))
    if hi < 1.0 - CRITICAL_BAND:
        kind = WindKind.MILD
    elif lo > 1.0 + CRITICAL_BAND:
        kind = WindKind.STRONG
    elif abs(lo - 1.0) < CRITICAL_BAND and abs(hi - 1.0) < CRITICAL_BAND:
        kind = WindKind.CRITICAL
    else:
        raise MixedRegime(f"wind witness F(-W) ranges over [{lo:.6g}, {hi:.6g}]")
    return WindClass(kind, lo, hi)


# ---------------------------------------------------------------------------
# batched derivative kernels


def _half_energy(metric, p):
    def e(v):
        return 0.5 * metric.norm(p, v) ** 2

    return e


def _finite_or_retry(compute, what):
    for shrink in (1.0, 0.125, 0.015625):
        out = compute(shrink)
        if np.all(np.isfinite(out)):
            return out
    raise NumericBreakdown(f"{what}: stencil left the conic domain")


def _legendre(metric, p, v):
    """``g_v(v, .)`` as a covector, batched over leading axes."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    if isinstance(metric, Riemannian):
        return np.einsum("...ij,...j->...i", metric.matrix(p), v)
    vn = np.linalg.norm(v, axis=-1)
    vhat = v / np.where(vn > 0, vn, 1.0)[..., None]
    energy = _half_energy(metric, p)
    out = _finite_or_retry(lambda s: fd.partials(energy, vhat, s * fd.default_step(1)), "Legendre map")
    return out * vn[..., None]


def _g_matrix(metric, p, v):
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    if isinstance(metric, Riemannian):
        return np.array(np.broadcast_to(metric.matrix(p), np.broadcast_shapes(p.shape, v.shape) + (v.shape[-1],)))
    vn = np.linalg.norm(v, axis=-1)
    vhat = v / np.where(vn > 0, vn, 1.0)[..., None]
    energy = _half_energy(metric, p)
    return _finite_or_retry(lambda s: fd.hessian(energy, vhat, s * fd.default_step(2)), "fundamental tensor")


# ---------------------------------------------------------------------------
# public operations


def _prepare(metric, p, v):
    p = metric.domain.check(p)
    v = np.asarray(v, dtype=float)
    if v.shape != p.shape:
        raise ValidationError("v", f"expected shape {p.shape}, got {v.shape}")
    if not np.any(v):
        raise ZeroVector("zero tangent vector")
    return p, v


def eval_metric(metric, p, v):
    p, v = _prepare(metric, p, v)
    value = float(metric.norm(p, v))
    if not np.isfinite(value):
        raise NotAdmissible(f"{v} is outside the conic domain at {p}")
    return value


def in_conic_domain(metric, p, v):
    p = metric.domain.check(p)
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        return False
    z = float(metric.norm(p, v))
    if not np.isfinite(z) or z <= 0:
        return False
    if not isinstance(metric, Zermelo):
        return True
    w = np.asarray(metric.wind(p), dtype=float)
    u = v / z - w
    try:
        return float(_legendre(metric.base, p, u) @ (-w)) < 1.0
    except NumericBreakdown:
        return False


def fundamental_tensor(metric, p, v):
    p, v = _prepare(metric, p, v)
    if not in_conic_domain(metric, p, v):
        raise NotAdmissible(f"{v} is outside the conic domain at {p}")
    g = _g_matrix(metric, p, v)
    g = 0.5 * (g + g.T)
    return FundamentalTensor(g, p, v)


def legendre_map(metric, p, v):
    """Covector ``g_v(v, .)``; equals half the differential of ``F**2`` at ``v``."""
    p, v = _prepare(metric, p, v)
    if not in_conic_domain(metric, p, v):
        raise NotAdmissible(f"{v} is outside the conic domain at {p}")
    return _legendre(metric, p, v)


def cartan_tensor(metric, p, v, u1, u2, u3):
    p, v = _prepare(metric, p, v)
    if not in_conic_domain(metric, p, v):
        raise NotAdmissible(f"{v} is outside the conic domain at {p}")
    if isinstance(metric, Riemannian):
        return 0.0
    us = np.array([u1, u2, u3], dtype=float)
    lengths = np.linalg.norm(us, axis=1)
    if np.any(lengths == 0):
        return 0.0
    dirs = us / lengths[:, None]
    vn = np.linalg.norm(v)
    quarter = lambda y: 0.25 * metric.norm(p, y) ** 2  # noqa: E731
    c = _finite_or_retry(
        lambda s: np.atleast_1d(fd.nested(quarter, v / vn, dirs, s * fd.default_step(3))), "Cartan tensor"
    )
    return float(c[0] * np.prod(lengths) / vn)


def k_factor(metric, p, v):
    if not isinstance(metric, Zermelo):
        raise ValidationError("metric", "k-factor is defined for Zermelo metrics")
    p, v = _prepare(metric, p, v)
    z = eval_metric(metric, p, v)
    w = np.asarray(metric.wind(p), dtype=float)
    u = v / z - w
    denom = 1.0 - float(_legendre(metric.base, p, u) @ (-w))
    if denom <= 0:
        raise BranchViolation("g_u(u, -W) >= 1: Lorentz branch")
    return 1.0 / denom


# ---------------------------------------------------------------------------
# inverse Legendre map


def _seed_directions(metric, p, omega):
    seeds = [omega]
    if isinstance(metric, Zermelo):
        seeds.append(np.asarray(metric.wind(p), dtype=float) + 0.0 * omega)
    return seeds


def _newton_legendre(metric, p, omega, tol=1e-11, maxiter=60):
    """Damped Newton on ``v -> g_v(v, .)``, batched over leading axes."""
    p, omega = np.broadcast_arrays(np.asarray(p, float), np.asarray(omega, float))
    shape = omega.shape
    p = p.reshape(-1, shape[-1])
    omega = omega.reshape(-1, shape[-1])
    scale = np.linalg.norm(omega, axis=-1)
    v = np.full(omega.shape, np.nan)
    for seed in _seed_directions(metric, p, omega):
        need = ~np.all(np.isfinite(v), axis=-1)
        if not np.any(need):
            break
        ok = np.isfinite(metric.norm(p[need], seed[need]))
        if not np.any(ok):
            continue
        idx = np.flatnonzero(need)[ok]
        try:
            g0 = _g_matrix(metric, p[idx], seed[idx])
        except NumericBreakdown:
            continue
        v[idx] = np.linalg.solve(g0, omega[idx][..., None])[..., 0]
    if not np.all(np.isfinite(v)):
        raise NotInImage("no admissible seed direction for the Legendre solve")

    def objective(y):
        return 0.5 * metric.norm(p, y) ** 2 - np.einsum("...i,...i->...", omega, y)

    for _ in range(maxiter):
        res = _legendre(metric, p, v) - omega
        err = np.linalg.norm(res, axis=-1)
        if np.all(err <= tol * np.maximum(scale, 1.0)):
            return v.reshape(shape)
        g = _g_matrix(metric, p, v)
        dv = np.linalg.solve(g, res[..., None])[..., 0]
        obj = objective(v)
        t = np.ones(err.shape)
        accepted = np.zeros(err.shape, dtype=bool)
        trial = v
        for _ in range(40):
            trial = v - t[..., None] * dv
            new = objective(trial)
            good = np.isfinite(new) & (new <= obj + 1e-12 * np.abs(obj) + 1e-300)
            accepted |= good
            if np.all(accepted):
                break
            t = np.where(accepted, t, 0.5 * t)
        if not np.all(accepted):
            raise NotInImage("Legendre solve left the conic domain")
        step = t[..., None] * dv
        v = v - step
        # the stencil noise floor of the Legendre map can sit above tol
        if np.all((err <= tol * np.maximum(scale, 1.0)) | (np.linalg.norm(step, axis=-1) <= tol * np.linalg.norm(v, axis=-1))):
            return v.reshape(shape)
    raise NoConvergence("Newton iteration for the inverse Legendre map did not converge")


def _legendre_inverse(metric, p, omega, method="auto"):
    """Batched inverse Legendre map; NaN rows where ``omega`` has no admissible preimage."""
    p = np.asarray(p, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if isinstance(metric, Riemannian):
        h = metric.matrix(p)
        h, om = np.broadcast_arrays(h, omega[..., None, :])
        return np.linalg.solve(h, om[..., 0, :][..., None])[..., 0]
    if isinstance(metric, Zermelo) and method == "auto":
        vf = _legendre_inverse(metric.base, p, omega, method)
        ff = metric.base.norm(p, vf)
        w = np.asarray(metric.wind(p), dtype=float)
        factor = ff + np.einsum("...i,...i->...", omega, w)
        out = factor[..., None] * (vf / ff[..., None] + w)
        return np.where((factor > 0)[..., None], out, np.nan)
    return _newton_legendre(metric, p, omega)


def legendre_solve(metric, p, omega, method="auto"):
    """Vector ``v`` with ``g_v(v, .) = omega``.

    ``method="auto"`` uses the exact inverse for Riemannian metrics and the
    navigation formula for Zermelo metrics; ``"newton"`` forces the generic
    damped Newton iteration on the Legendre map.
    """
    p = metric.domain.check(p)
    omega = np.asarray(omega, dtype=float)
    if not np.any(omega):
        raise ZeroVector("zero covector")
    v = _legendre_inverse(metric, p, omega, method)
    if not np.all(np.isfinite(v)):
        raise NotInImage(f"{omega} has no admissible preimage at {p}")
    return v
