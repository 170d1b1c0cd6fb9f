"""Vectorized bracketed root finding."""

import numpy as np

from .fd import EPS


def illinois(fun, a, b, fa=None, fb=None, maxiter=200, ftol=EPS):
    """Roots of ``fun`` inside ``[a, b]`` for a whole batch at once.

    ``fun`` maps an array of abscissae to an array of values of the same
    shape; each bracket must change sign.  Regula falsi with the Illinois
    modification, falling back to bisection when the secant leaves the
    bracket.  Rows with a non-finite bracket value come back as NaN.
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    fa = fun(a) if fa is None else np.array(fa, dtype=float)
    fb = fun(b) if fb is None else np.array(fb, dtype=float)
    valid = np.isfinite(fa) & np.isfinite(fb)
    side = np.zeros(a.shape, dtype=int)
    done = ~valid | (fa == 0) | (fb == 0)
    c = np.where(fa == 0, a, b)
    fc = np.where(fa == 0, fa, fb)
    for _ in range(maxiter):
        if np.all(done):
            break
        denom = fb - fa
        safe = np.where(denom != 0, denom, 1.0)
        trial = np.where(denom != 0, (a * fb - b * fa) / safe, 0.5 * (a + b))
        trial = np.where((trial > np.minimum(a, b)) & (trial < np.maximum(a, b)), trial, 0.5 * (a + b))
        ft = fun(trial)
        act = ~done
        c = np.where(act, trial, c)
        fc = np.where(act, ft, fc)
        same_b = (ft * fb > 0) & act
        same_a = (ft * fa > 0) & ~same_b & act
        fa = np.where(same_b & (side == -1), fa / 2.0, fa)
        fb = np.where(same_a & (side == 1), fb / 2.0, fb)
        b = np.where(same_b, trial, b)
        fb = np.where(same_b, ft, fb)
        a = np.where(same_a, trial, a)
        fa = np.where(same_a, ft, fa)
        side = np.where(same_b, -1, np.where(same_a, 1, side))
        width = np.abs(b - a)
        done = done | (ft == 0) | (width <= 4 * EPS * np.maximum(np.abs(a), np.abs(b))) | (np.abs(ft) <= ftol)
    best = np.where(np.abs(fa) < np.abs(fb), a, b)
    fbest = np.minimum(np.abs(fa), np.abs(fb))
    best = np.where(np.abs(fc) <= fbest, c, best)
    return np.where(valid, best, np.nan)
