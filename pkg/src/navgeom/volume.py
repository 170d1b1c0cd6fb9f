"""Busemann-Hausdorff and Holmes-Thompson densities, and induced data on immersions."""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from . import fd
from .errors import NotRegular, NumericBreakdown, RankDeficient, ValidationError
from .fields import VolumeForm
from .metric import ChartDomain, Riemannian, WindKind, Zermelo, _g_matrix, randers_closed_form

BH_AGREEMENT = 1e-6
MC_CHUNK = 50_000


def unit_ball_volume(n):
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


@lru_cache(maxsize=None)
def _sphere_rule(n, resolution):
    """Directions and weights integrating over the unit sphere ``S^{n-1}``."""
    if n == 2:
        th = 2 * np.pi * np.arange(resolution) / resolution
        dirs = np.stack([np.cos(th), np.sin(th)], axis=-1)
        return dirs, np.full(resolution, 2 * np.pi / resolution)
    if n == 3:
        k = max(8, resolution // 64)
        z, wz = np.polynomial.legendre.leggauss(k)
        m = 2 * k
        ph = 2 * np.pi * np.arange(m) / m
        zz, pp = np.meshgrid(z, ph, indexing="ij")
        s = np.sqrt(1 - zz**2)
        dirs = np.stack([s * np.cos(pp), s * np.sin(pp), zz], axis=-1).reshape(-1, 3)
        weights = (wz[:, None] * np.full(m, 2 * np.pi / m)[None, :]).reshape(-1)
        return dirs, weights
    raise ValueError("deterministic sphere rule only for n = 2, 3")


def _mc_directions(n, count, seed):
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(count, n))
    return d / np.linalg.norm(d, axis=-1, keepdims=True)


def _regular_norm(metric):
    if isinstance(metric, Zermelo) and metric.wind_class.kind != WindKind.MILD:
        raise NotRegular("conic metric: pass the base metric for its declared volume")
    return metric


def _bh_quadrature(metric, p, resolution=4096, mc_samples=200_000, seed=0):
    n = metric.dim
    if n <= 3:
        dirs, weights = _sphere_rule(n, resolution)
        r = 1.0 / metric.norm(p[..., None, :], dirs)
        vol = np.sum(weights * r**n, axis=-1) / n
    else:
        dirs = _mc_directions(n, mc_samples, seed)
        area = n * unit_ball_volume(n)
        r = 1.0 / metric.norm(p[..., None, :], dirs)
        vol = area * np.mean(r**n, axis=-1) / n
    if not np.all(np.isfinite(vol)):
        raise NotRegular("metric is not defined in every direction")
    return unit_ball_volume(n) / vol


def bh_density(metric, p, resolution=4096, check=True):
    """``vol(unit Euclidean ball) / vol(unit ball of the metric at p)``.

    Zermelo metrics under critical or strong wind use the base metric's
    density.  Under mild wind both are computed; with ``check`` a mismatch
    above ``1e-6`` raises :class:`NumericBreakdown`.
    """
    p = metric.domain.check(p)
    if isinstance(metric, Zermelo):
        if metric.wind_class.kind != WindKind.MILD:
            return bh_density(metric.base, p, resolution)
        mu = _bh_quadrature(metric, p, resolution)
        if check:
            mu_base = _bh_quadrature(metric.base, p, resolution)
            if np.any(np.abs(mu - mu_base) > BH_AGREEMENT * np.abs(mu_base)):
                raise NumericBreakdown("BH densities of the navigation metric and its base disagree")
        return float(mu) if np.ndim(mu) == 0 else mu
    mu = _bh_quadrature(metric, p, resolution)
    return float(mu) if np.ndim(mu) == 0 else mu


def _randers_det(metric, p, dirs):
    """``det g`` for a Zermelo metric over a Riemannian base, via its Randers form."""
    h = metric.base.matrix(p)
    w = np.asarray(metric.wind(p), dtype=float)
    hw = h @ w
    lam = 1.0 / (1.0 - w @ hw)
    a = lam * h + lam**2 * np.outer(hw, hw)
    b = -lam * hw
    alpha = np.sqrt(np.einsum("...i,ij,...j->...", dirs, a, dirs))
    f = alpha + dirs @ b
    return (f / alpha) ** (len(w) + 1) * np.linalg.det(a)


def _det_g(metric, p, dirs):
    """``det g_y`` at one point ``p`` for a batch of directions ``dirs``."""
    if isinstance(metric, Riemannian):
        return np.full(dirs.shape[:-1], np.linalg.det(metric.matrix(p)))
    if isinstance(metric, Zermelo) and isinstance(metric.base, Riemannian):
        return _randers_det(metric, p, dirs)
    out = np.empty(dirs.shape[:-1])
    for start in range(0, len(dirs), MC_CHUNK // 16):
        sl = slice(start, start + MC_CHUNK // 16)
        out[sl] = np.linalg.det(_g_matrix(metric, p, dirs[sl]))
    return out


def _ht_single(metric, p, samples, seed, method, resolution):
    n = metric.dim
    vball = unit_ball_volume(n)
    if method == "quadrature":
        dirs, weights = _sphere_rule(n, resolution)
        r = 1.0 / metric.norm(p, dirs)
        val = np.sum(weights * _det_g(metric, p, dirs) * r**n) / n / vball
        return float(val), 0.0
    # rejection sampling against a Euclidean ball enclosing the metric ball
    probe = _mc_directions(n, 4096, seed + 1)
    radius = 1.05 * float(np.max(1.0 / metric.norm(p, probe)))
    rng = np.random.default_rng(seed)
    total = 0.0
    total_sq = 0.0
    for start in range(0, samples, MC_CHUNK):
        k = min(MC_CHUNK, samples - start)
        d = rng.normal(size=(k, n))
        d /= np.linalg.norm(d, axis=-1, keepdims=True)
        y = radius * rng.uniform(size=k)[:, None] ** (1.0 / n) * d
        inside = metric.norm(p, y) < 1.0
        vals = np.zeros(k)
        if np.any(inside):
            vals[inside] = _det_g(metric, p, d[inside])
        total += vals.sum()
        total_sq += (vals**2).sum()
    mean = total / samples
    var = max(total_sq / samples - mean**2, 0.0)
    scale = radius**n
    return scale * mean, scale * math.sqrt(var / samples)


def ht_density(metric, p, samples=200_000, seed=0, method="mc", resolution=4096, return_error=False):
    """``int_{B(p)} det g_y dy / vol(unit ball)``.

    ``method="mc"`` samples the metric ball by rejection (fixed seed, so
    the same random numbers are reused at every point); ``"quadrature"``
    integrates over directions using homogeneity of ``det g``.
    """
    p = metric.domain.check(p)
    _regular_norm(metric)
    if method not in ("mc", "quadrature"):
        raise ValidationError("method", f"unknown method {method!r}")
    if method == "quadrature" and metric.dim > 3:
        raise ValidationError("method", "quadrature HT only for n <= 3")
    flat = p.reshape(-1, p.shape[-1])
    res = np.array([_ht_single(metric, q, samples, seed, method, resolution) for q in flat])
    val = res[:, 0].reshape(p.shape[:-1])
    err = res[:, 1].reshape(p.shape[:-1])
    if p.ndim == 1:
        val, err = float(val), float(err)
    return (val, err) if return_error else val


def bh_volume(metric, method="auto", resolution=4096):
    """Busemann-Hausdorff volume form of ``metric``.

    ``auto`` uses the closed form ``sqrt(det h)`` for Riemannian metrics and
    for mild-wind Zermelo metrics over a Riemannian base (after checking the
    quadrature against it on a few domain points); ``quadrature`` evaluates
    the unit-ball integral at every point.
    """
    target = metric
    if isinstance(metric, Zermelo) and metric.wind_class.kind != WindKind.MILD:
        target = metric.base
    riem = target.base if isinstance(target, Zermelo) else target
    if method == "auto" and isinstance(riem, Riemannian):
        if isinstance(target, Zermelo):
            pts = target.domain.grid(16)[:8]
            bh_density(target, pts, resolution, check=True)

        def density(p):
            return np.sqrt(np.linalg.det(riem.matrix(p)))

        return VolumeForm(density, "busemann_hausdorff", f"bh[{metric.name}]")

    def density(p):
        return _bh_quadrature(target, np.asarray(p, dtype=float), resolution)

    return VolumeForm(density, "busemann_hausdorff", f"bh[{metric.name}]")


def ht_volume(metric, samples=200_000, seed=0, method="mc"):
    _regular_norm(metric)

    def density(p):
        p = np.asarray(p, dtype=float)
        flat = p.reshape(-1, p.shape[-1])
        vals = [_ht_single(metric, q, samples, seed, method, 4096)[0] for q in flat]
        return np.array(vals).reshape(p.shape[:-1])

    return VolumeForm(density, "holmes_thompson", f"ht[{metric.name}]")


# ---------------------------------------------------------------------------
# immersions


@dataclass(frozen=True)
class Immersion:
    """``map`` sends parameters ``(..., m)`` to points ``(..., n)``."""

    map: Callable
    domain: ChartDomain
    jacobian: Optional[Callable] = None
    second: Optional[Callable] = None
    name: str = "immersion"

    def __call__(self, u):
        return np.asarray(self.map(np.asarray(u, dtype=float)), dtype=float)

    def frame(self, u):
        """Tangent frame ``J[..., a, i] = d x^a / d u^i``."""
        u = np.asarray(u, dtype=float)
        if self.jacobian is not None:
            return np.asarray(self.jacobian(u), dtype=float)
        return fd.partials(self.map, u, fd.default_step(1))

    def second_derivatives(self, u):
        """``S[..., a, i, j] = d^2 x^a / du^i du^j``."""
        u = np.asarray(u, dtype=float)
        if self.second is not None:
            return np.asarray(self.second(u), dtype=float)
        m = u.shape[-1]
        out = np.empty(self(u).shape + (m, m))
        eye = np.eye(m)
        for i in range(m):
            for j in range(i, m):
                val = fd.nested(self.map, u, np.stack([eye[i], eye[j]]), fd.default_step(2))
                out[..., i, j] = val
                out[..., j, i] = val
        return out

    def checked_frame(self, u):
        j = self.frame(u)
        sv = np.linalg.svd(j, compute_uv=False)
        if np.any(sv[..., -1] <= 1e-8):
            raise RankDeficient(f"{self.name}: Jacobian is not of full rank")
        return j


def circle_immersion(radius=1.0, center=(0.0, 0.0), name="circle"):
    c = np.asarray(center, dtype=float)

    def imap(u):
        t = np.asarray(u)[..., 0]
        return c + radius * np.stack([np.cos(t), np.sin(t)], axis=-1)

    def jac(u):
        t = np.asarray(u)[..., 0]
        return radius * np.stack([-np.sin(t), np.cos(t)], axis=-1)[..., None]

    def second(u):
        t = np.asarray(u)[..., 0]
        return -radius * np.stack([np.cos(t), np.sin(t)], axis=-1)[..., None, None]

    dom = ChartDomain.box([-4.0], [4.0])
    return Immersion(imap, dom, jac, second, name)


def line_immersion(point, direction, name="line"):
    point = np.asarray(point, dtype=float)
    direction = np.asarray(direction, dtype=float)
    n = len(point)

    def imap(u):
        return point + np.asarray(u)[..., :1] * direction

    def jac(u):
        return np.broadcast_to(direction[:, None], np.shape(u)[:-1] + (n, 1)).copy()

    def second(u):
        return np.zeros(np.shape(u)[:-1] + (n, 1, 1))

    return Immersion(imap, ChartDomain.box([-10.0], [10.0]), jac, second, name)


@dataclass(frozen=True)
class InducedData:
    lam: float
    w_tan: np.ndarray
    w_perp: np.ndarray
    gram: np.ndarray

    def norm(self, e):
        """Induced Randers norm of a parameter vector ``e``."""
        return float(randers_closed_form(self.lam * self.gram, self.w_tan, e))


def _riemannian_zermelo(metric):
    if not (isinstance(metric, Zermelo) and isinstance(metric.base, Riemannian)):
        raise ValidationError("metric", "expected a Zermelo metric over a Riemannian base")
    if metric.wind_class.kind != WindKind.MILD:
        raise NotRegular("induced data need mild wind")
    return metric.base


def induced_randers_data(metric, imm, u):
    h = _riemannian_zermelo(metric)
    u = imm.domain.check(u)
    x = imm(u)
    j = imm.checked_frame(u)
    hm = h.matrix(x)
    w = np.asarray(metric.wind(x), dtype=float)
    gram = j.T @ hm @ j
    coef = np.linalg.solve(gram, j.T @ hm @ w)
    w_perp = w - j @ coef
    lam = 1.0 / (1.0 - w_perp @ hm @ w_perp)
    return InducedData(float(lam), coef, w_perp, gram)


def induced_bh_density(metric, imm, u):
    data = induced_randers_data(metric, imm, u)
    m = data.gram.shape[0]
    return data.lam ** (m / 2) * math.sqrt(np.linalg.det(data.gram))


def curve_bh_density(norm_fwd, norm_bwd):
    """BH density of a 1-dimensional norm from its values on ``e`` and ``-e``."""
    return 2.0 / (1.0 / norm_fwd + 1.0 / norm_bwd)
