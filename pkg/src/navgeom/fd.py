"""Finite-difference kernels.

All derivatives are built from the five-point central stencil

    f'(x) ~ [f(x-2h) - 8 f(x-h) + 8 f(x+h) - f(x+2h)] / 12h

which is the Richardson extrapolation of two central differences (h, 2h)
and has O(h^4) truncation error.  Mixed derivatives use tensor products of
that stencil, so a k-fold derivative needs 4**k evaluations.  Every kernel
evaluates ``fun`` once on a stacked batch of points; ``fun`` must therefore
broadcast over leading axes: ``(..., n) -> (...)`` or ``(..., n) -> (..., m)``.
"""

import itertools
from functools import lru_cache

import numpy as np

EPS = np.finfo(float).eps

_OFFSETS = np.array([-2.0, -1.0, 1.0, 2.0])
_WEIGHTS = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0


def default_step(order):
    """Step balancing O(h^4) truncation against eps / h**order rounding."""
    return EPS ** (1.0 / (order + 4))


@lru_cache(maxsize=None)
def _stencil(k):
    combos = np.array(list(itertools.product(range(4), repeat=k)))
    offsets = _OFFSETS[combos]
    weights = np.prod(_WEIGHTS[combos], axis=1)
    return offsets, weights


def nested(fun, x, dirs, h=None):
    """Mixed directional derivative ``D_{d_1} ... D_{d_k} fun(x)``.

    ``dirs`` has shape ``(..., k, n)``; its leading axes broadcast against
    those of ``x``.  ``h`` may be a scalar or broadcast against the batch.
    Returns an array of shape ``batch + out``.
    """
    x = np.asarray(x, dtype=float)
    dirs = np.asarray(dirs, dtype=float)
    k = dirs.shape[-2]
    if h is None:
        h = default_step(k)
    h = np.asarray(h, dtype=float)
    offsets, weights = _stencil(k)
    disp = np.einsum("cj,...jn->c...n", offsets, dirs)
    pts = x + h[..., None] * disp
    vals = np.asarray(fun(pts), dtype=float)
    res = np.tensordot(weights, vals, axes=(0, 0))
    out_ndim = vals.ndim - pts.ndim + 1
    hk = h**k
    hk = hk.reshape(hk.shape + (1,) * out_ndim)
    return res / hk


def directional(fun, x, d, h=None):
    """First derivative of ``fun`` at ``x`` along ``d`` (both ``(..., n)``)."""
    d = np.asarray(d, dtype=float)
    return nested(fun, x, d[..., None, :], h)


def partials(fun, x, h=None):
    """Gradient (scalar ``fun``) or Jacobian ``J[..., a, i] = d fun_a / d x_i``."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    lead = (1,) * (x.ndim - 1)
    dirs = np.eye(n).reshape((n,) + lead + (1, n))
    res = nested(fun, x, dirs, h)
    return np.moveaxis(res, 0, -1)


def hessian(fun, x, h=None):
    """Symmetric Hessian of a scalar ``fun``; shape ``x.shape + (n,)``."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    eye = np.eye(n)
    lead = (1,) * (x.ndim - 1)
    dirs = np.stack([np.stack([eye[i], eye[j]]) for i, j in pairs])
    dirs = dirs.reshape((len(pairs),) + lead + (2, n))
    vals = nested(fun, x, dirs, h)
    out = np.empty(x.shape[:-1] + (n, n))
    for idx, (i, j) in enumerate(pairs):
        out[..., i, j] = vals[idx]
        out[..., j, i] = vals[idx]
    return out


def richardson(coarse, fine, ratio=2.0, order=2):
    """Combine estimates at steps ``h`` and ``h/ratio`` with error O(h**order)."""
    factor = ratio**order
    return (factor * np.asarray(fine) - np.asarray(coarse)) / (factor - 1.0)
