"""Scalar and vector fields, volume forms, and the first-order calculus on them.

Every operation accepts a single point ``(n,)`` or a batch ``(..., n)`` and
returns a float or an array accordingly.  Field callables must broadcast
over leading axes.
"""

import itertools
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import fd
from .errors import (
    FiberNotFound,
    FlowLeftDomain,
    NotAdmissible,
    NotHomotheticWarning,
    UndefinedAtCriticalPoint,
    ValidationError,
)
from .metric import _legendre_inverse

CRITICAL_DF = 1e-12


def _scalar_out(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


@dataclass(frozen=True)
class ScalarField:
    value: Callable
    differential: Optional[Callable] = None
    name: str = "f"

    def __call__(self, p):
        return np.asarray(self.value(np.asarray(p, dtype=float)), dtype=float)

    def d(self, p):
        p = np.asarray(p, dtype=float)
        if self.differential is not None:
            return np.asarray(self.differential(p), dtype=float) + np.zeros_like(p)
        return fd.partials(self.value, p, fd.default_step(1))

    def fd_differential(self, p):
        return fd.partials(self.value, np.asarray(p, dtype=float), fd.default_step(1))


@dataclass(frozen=True)
class VectorField:
    value: Callable
    jacobian: Optional[Callable] = None
    declared_sigma: Optional[float] = None
    name: str = "X"

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        return np.asarray(self.value(p), dtype=float) + np.zeros_like(p)

    def jac(self, p):
        """``J[..., i, j] = d X^i / d x^j``."""
        p = np.asarray(p, dtype=float)
        if self.jacobian is not None:
            return np.asarray(self.jacobian(p), dtype=float) + np.zeros(p.shape + (p.shape[-1],))
        return fd.partials(self.value, p, fd.default_step(1))


ORIGINS = ("riemannian", "busemann_hausdorff", "holmes_thompson", "custom")


@dataclass(frozen=True)
class VolumeForm:
    density: Callable
    origin: str = "custom"
    name: str = "nu"

    def __post_init__(self):
        if self.origin not in ORIGINS:
            raise ValidationError("origin", f"unknown volume origin {self.origin!r}")

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        return np.asarray(self.density(p), dtype=float) + np.zeros(p.shape[:-1])


# ---------------------------------------------------------------------------
# field factories


def constant_field(w, name="constant"):
    w = np.asarray(w, dtype=float)
    n = len(w)
    return VectorField(
        lambda p: np.broadcast_to(w, np.shape(p)).copy(),
        lambda p: np.zeros(np.shape(p) + (n,)),
        declared_sigma=0.0,
        name=name,
    )


def linear_field(a, b=None, declared_sigma=None, name="linear"):
    """``X(p) = A p + b``."""
    a = np.asarray(a, dtype=float)
    b = np.zeros(a.shape[0]) if b is None else np.asarray(b, dtype=float)
    return VectorField(
        lambda p: np.einsum("ij,...j->...i", a, p) + b,
        lambda p: np.broadcast_to(a, np.shape(p) + (a.shape[0],)).copy(),
        declared_sigma=declared_sigma,
        name=name,
    )


def radial_field(dim, a=-1.0, name="radial"):
    """``a x``: homothetic for the Euclidean metric with coefficient ``-a``."""
    return linear_field(a * np.eye(dim), declared_sigma=-a, name=name)


def rotation_field(a=1.0, dim=2, name="rotation"):
    """``a (-y, x)`` in the first coordinate plane (Killing)."""
    m = np.zeros((dim, dim))
    m[0, 1], m[1, 0] = -a, a
    return linear_field(m, declared_sigma=0.0, name=name)


def zero_field(dim):
    return constant_field(np.zeros(dim), name="zero")


def euclidean_volume():
    return VolumeForm(lambda p: np.ones(np.shape(p)[:-1]), "riemannian", "euclidean")


def riemannian_volume(h):
    def density(p):
        return np.sqrt(np.linalg.det(h.matrix(p)))

    return VolumeForm(density, "riemannian", "riemannian")


def coordinate_function(i, name=None):
    def value(p):
        return np.asarray(p)[..., i]

    def differential(p):
        out = np.zeros(np.shape(p))
        out[..., i] = 1.0
        return out

    return ScalarField(value, differential, name or f"x{i}")


def radial_function(center=None, offset=0.0, name="radius"):
    """``|x - c| - offset``."""

    def value(p):
        c = 0.0 if center is None else np.asarray(center, dtype=float)
        return np.linalg.norm(np.asarray(p) - c, axis=-1) - offset

    def differential(p):
        c = 0.0 if center is None else np.asarray(center, dtype=float)
        x = np.asarray(p) - c
        r = np.linalg.norm(x, axis=-1)
        return x / np.where(r > 0, r, np.inf)[..., None]

    return ScalarField(value, differential, name)


@dataclass(frozen=True)
class Polynomial:
    """Sum of ``coef * prod(x_i ** e_i)`` with analytic differential."""

    exponents: tuple
    coefficients: tuple

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        out = np.zeros(p.shape[:-1])
        for e, c in zip(self.exponents, self.coefficients):
            out = out + c * np.prod(p ** np.asarray(e), axis=-1)
        return out

    def gradient(self, p):
        p = np.asarray(p, dtype=float)
        n = p.shape[-1]
        out = np.zeros(p.shape)
        for e, c in zip(self.exponents, self.coefficients):
            e = np.asarray(e)
            for i in range(n):
                if e[i] == 0:
                    continue
                ei = e.copy()
                ei[i] -= 1
                out[..., i] += c * e[i] * np.prod(p**ei, axis=-1)
        return out


def polynomial_function(exponents, coefficients, name="poly"):
    poly = Polynomial(tuple(tuple(int(k) for k in e) for e in exponents), tuple(float(c) for c in coefficients))
    return ScalarField(poly, poly.gradient, name)


def random_polynomial(rng, dim, degree=4, scale=1.0, name="random_poly"):
    """Random polynomial of total degree ``degree`` with a dominant linear part."""
    exps, coefs = [], []
    for e in itertools.product(range(degree + 1), repeat=dim):
        k = sum(e)
        if k == 0 or k > degree:
            continue
        exps.append(e)
        coefs.append(rng.normal() * (1.0 if k == 1 else scale / k))
    return polynomial_function(exps, coefs, name)


# ---------------------------------------------------------------------------
# gradient, divergence, Laplacian


def _gradient(metric, f, p, method="auto"):
    """Batched gradient; zero where ``df`` vanishes, NaN where not admissible."""
    p = np.asarray(p, dtype=float)
    df = f.d(p)
    crit = np.linalg.norm(df, axis=-1) <= CRITICAL_DF
    safe = np.where(crit[..., None], 1.0, df)
    v = _legendre_inverse(metric, p, safe, method)
    return np.where(crit[..., None], 0.0, v)


def _check_points(metric, p):
    return metric.domain.check(p)


def gradient_field(metric, f, p, method="auto"):
    p = _check_points(metric, p)
    v = _gradient(metric, f, p, method)
    if not np.all(np.isfinite(v)):
        raise NotAdmissible(f"{f.name} is not admissible at some of the given points")
    return v


def as_vector_field(metric, f, method="auto", unit=False):
    """The gradient of ``f`` (optionally normalized) as a :class:`VectorField`."""

    def value(q):
        v = _gradient(metric, f, q, method)
        if unit:
            v = v / metric.norm(q, v)[..., None]
        return v

    return VectorField(value, name=("unit_grad_" if unit else "grad_") + f.name)


def _divergence(volume, X, p, h=None):
    p = np.asarray(p, dtype=float)
    h = fd.default_step(1) if h is None else h

    def flux(q):
        return volume(q)[..., None] * X(q)

    jac = fd.partials(flux, p, h)
    return np.trace(jac, axis1=-2, axis2=-1) / volume(p)


def divergence(volume, X, p, domain=None):
    p = np.asarray(p, dtype=float)
    if domain is not None:
        domain.check(p)
    return _scalar_out(_divergence(volume, X, p))


def _flow_steps(X, p, t, nsteps, domain=None):
    """``nsteps`` RK4 steps up to time ``t`` (scalar or one per point)."""
    x = np.array(p, dtype=float)
    t = np.asarray(t, dtype=float)
    if nsteps == 0 or not np.any(t):
        return x
    h = t / nsteps
    if h.ndim:
        h = h[..., None]
    for _ in range(nsteps):
        k1 = X(x)
        k2 = X(x + 0.5 * h * k1)
        k3 = X(x + 0.5 * h * k2)
        k4 = X(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if domain is not None and not np.all(domain.contains(x)):
            raise FlowLeftDomain(f"flow of {X.name} left the domain before t={t}")
    return x


def flow(X, p, t, step=1e-2, domain=None):
    """RK4 flow with fixed ``step`` and a final partial step to land on ``t``."""
    x = np.array(p, dtype=float)
    if domain is not None:
        domain.check(x)
    if t == 0:
        return x
    sign = 1.0 if t > 0 else -1.0
    full = int(np.floor(abs(t) / step + 1e-12))
    x = _flow_steps(X, x, sign * full * step, full, domain)
    rest = abs(t) - full * step
    if rest > 1e-15:
        x = _flow_steps(X, x, sign * rest, 1, domain)
    return x


def divergence_flow_oracle(volume, X, p, dt=1e-3, domain=None):
    """Rate of change of ``det(D phi_t) mu(phi_t p) / mu(p)`` at ``t = 0``."""
    p = np.asarray(p, dtype=float)
    if domain is not None:
        domain.check(p)

    def ratio(t):
        nsteps = 4

        def phi(q):
            return _flow_steps(X, q, t, nsteps, domain)

        jac = fd.partials(phi, p, 1e-3)
        return np.linalg.det(jac) * volume(phi(p)) / volume(p)

    vals = [ratio(k * dt) for k in (-2, -1, 1, 2)]
    est = (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * dt)
    return _scalar_out(est)


def laplacian(metric, volume, f, p, method="auto"):
    """Nonlinear Laplacian ``div(grad f)``."""
    p = _check_points(metric, p)
    df = f.d(p)
    if np.any(np.linalg.norm(df, axis=-1) <= CRITICAL_DF):
        raise UndefinedAtCriticalPoint(f"d{f.name} vanishes")
    if not np.all(np.isfinite(_gradient(metric, f, p, method))):
        raise NotAdmissible(f"{f.name} is not admissible at some of the given points")
    out = _divergence(volume, as_vector_field(metric, f, method), p)
    if not np.all(np.isfinite(out)):
        raise NotAdmissible(f"{f.name} is not admissible near some of the given points")
    return _scalar_out(out)


def hessian_grad_grad(metric, f, p, method="auto", unit=False):
    """``Hess f(grad f, grad f) = 1/2 d/de F^2(grad f(p + e grad f))``.

    With ``unit=True`` the value is divided by ``F^2(grad f)``.
    """
    p = _check_points(metric, p)
    g = _gradient(metric, f, p, method)
    if np.any(np.linalg.norm(f.d(p), axis=-1) <= CRITICAL_DF):
        raise UndefinedAtCriticalPoint(f"d{f.name} vanishes")
    if not np.all(np.isfinite(g)):
        raise NotAdmissible(f"{f.name} is not admissible at some of the given points")

    def energy(q):
        return metric.norm(q, _gradient(metric, f, q, method)) ** 2

    val = 0.5 * fd.directional(energy, p, g, fd.default_step(1))
    if unit:
        val = val / metric.norm(p, g) ** 2
    return _scalar_out(val)


# ---------------------------------------------------------------------------
# homothety and projectability


def homothety_estimate(metric, X, samples=32, seed=0, times=(1e-3, 2e-3), tol=1e-6):
    """Fit ``(phi_t)^* F = exp(-sigma t) F`` from short flows.

    Returns ``(sigma, residual)``; warns with :class:`NotHomotheticWarning`
    when the residual exceeds ``tol``.
    """
    rng = np.random.default_rng(seed)
    dom = metric.domain
    pts = dom.sample(rng, samples)
    vs = rng.normal(size=pts.shape)
    base = metric.norm(pts, vs)
    logs = []
    for t in times:
        def phi(q, t=t):
            return _flow_steps(X, q, t, 2)

        pushed = fd.directional(phi, pts, vs, 1e-4)
        logs.append(np.log(metric.norm(phi(pts), pushed) / base))
    logs = np.array(logs)
    t = np.asarray(times)
    slopes = (logs[-1] - logs[0]) / (t[-1] - t[0])
    sigma = -float(np.mean(slopes))
    residual = float(np.max(np.abs(logs + sigma * t[:, None])))
    if residual > tol:
        warnings.warn(
            f"{X.name}: homothety residual {residual:.3e} exceeds {tol:g}", NotHomotheticWarning, stacklevel=2
        )
    return sigma, residual


@dataclass(frozen=True)
class SpreadReport:
    level: float
    minimum: float
    maximum: float
    spread: float
    count: int
    points: np.ndarray

    def as_dict(self):
        return {
            "level": self.level,
            "min": self.minimum,
            "max": self.maximum,
            "spread": self.spread,
            "count": self.count,
        }


def sample_fiber(f, level, domain, samples=64, seed=0, max_iter=60, tol=1e-12, min_df=1e-8):
    """Points of ``{f = level}`` obtained by Newton along the Euclidean gradient."""
    rng = np.random.default_rng(seed)
    x = domain.sample(rng, 4 * samples)
    for _ in range(max_iter):
        r = f(x) - level
        df = f.d(x)
        nrm2 = np.einsum("...i,...i->...", df, df)
        step = np.where(nrm2 > min_df**2, r / np.where(nrm2 > 0, nrm2, 1.0), 0.0)
        x = x - step[..., None] * df
        if np.all(np.abs(r) <= tol * max(1.0, abs(level))):
            break
    r = f(x) - level
    good = (
        domain.contains(x)
        & np.isfinite(r)
        & (np.abs(r) <= 1e-10 * max(1.0, abs(level)))
        & (np.linalg.norm(f.d(x), axis=-1) >= min_df)
    )
    pts = x[good][:samples]
    if len(pts) == 0:
        raise FiberNotFound(f"no points of {f.name} = {level} in the domain")
    return pts


def projectability_spread(f, q, level, samples=64, seed=0, domain=None):
    if domain is None:
        raise ValidationError("domain", "a chart domain is required to sample fibers")
    pts = sample_fiber(f, level, domain, samples, seed)
    vals = np.asarray(q(pts), dtype=float)
    lo, hi = float(np.min(vals)), float(np.max(vals))
    return SpreadReport(float(level), lo, hi, hi - lo, len(pts), pts)
