"""Scalar root bracketing and derivative-free minimization.

Both routines are deterministic: identical inputs give identical outputs,
which the command-line layer relies on for byte-identical reruns.
"""

from __future__ import annotations

import math

import numpy as np

from diqkd.errors import ComputeError, ValidationError

_EPS = 2.220446049250313e-16


def brent_root(f, a: float, b: float, tol: float = 1e-12) -> float:
    """Root of f on the bracket [a, b] by Brent's method.

    Combines bisection with secant and inverse quadratic interpolation.

    Parameters
    ----------
    f : callable
        Continuous scalar function with f(a) and f(b) of opposite sign.
    a, b : float
        Bracket endpoints.
    tol : float
        Absolute tolerance on the root location.

    Raises
    ------
    ComputeError
        If the endpoints do not bracket a sign change, or the iteration
        budget runs out before the bracket shrinks below tol.
    """
    a = float(a)
    b = float(b)
    fa = float(f(a))
    fb = float(f(b))
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0:
        raise ComputeError(f"no sign change on [{a}, {b}]: f={fa:.3e}, {fb:.3e}")

    c, fc = a, fa
    d = e = b - a
    for _ in range(200):
        if fb * fc > 0.0:
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol1 = 2.0 * _EPS * abs(b) + 0.5 * tol
        xm = 0.5 * (c - b)
        if abs(xm) <= tol1 or fb == 0.0:
            return b
        if abs(e) >= tol1 and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                p = 2.0 * xm * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0.0:
                q = -q
            p = abs(p)
            if 2.0 * p < min(3.0 * xm * q - abs(tol1 * q), abs(e * q)):
                e = d
                d = p / q
            else:
                d = xm
                e = d
        else:
            d = xm
            e = d
        a, fa = b, fb
        b += d if abs(d) > tol1 else math.copysign(tol1, xm)
        fb = float(f(b))
    raise ComputeError("root iteration budget exhausted")


def _simplex_spread(points: np.ndarray, values: np.ndarray) -> tuple[float, float]:
    fx = float(values.max() - values.min())
    dx = float(np.abs(points - points[0]).max())
    return dx, fx


def nelder_mead(f, x0, options: dict | None = None) -> tuple[np.ndarray, float]:
    """Derivative-free minimization by the Nelder-Mead simplex method.

    Parameters
    ----------
    f : callable
        Objective mapping a length-d vector to a float.
    x0 : array_like
        Starting point.
    options : dict, optional
        Recognized keys: ``step`` (initial simplex edge, scalar or
        per-coordinate, default 0.1), ``max_evals`` (total budget across
        restarts, default 400*d), ``restarts`` (extra runs from the best
        point with a halved step, default 0), ``x_tol`` and ``f_tol``
        (convergence thresholds, defaults 1e-10 and 1e-12).

    Returns
    -------
    (x_best, f_best)
        Best point seen and its value. Restarting never increases f_best.
    """
    opts = dict(options or {})
    unknown = set(opts) - {"step", "max_evals", "restarts", "x_tol", "f_tol"}
    if unknown:
        raise ValidationError(f"unknown options: {sorted(unknown)}")
    x0 = np.asarray(x0, dtype=float).ravel()
    d = x0.size
    if d < 1:
        raise ValidationError("need at least one coordinate")
    step = np.broadcast_to(np.asarray(opts.get("step", 0.1), dtype=float), (d,)).copy()
    max_evals = int(opts.get("max_evals", 400 * d))
    restarts = int(opts.get("restarts", 0))
    x_tol = float(opts.get("x_tol", 1e-10))
    f_tol = float(opts.get("f_tol", 1e-12))

    evals = 0

    def call(x):
        nonlocal evals
        evals += 1
        return float(f(x))

    best_x = x0.copy()
    best_f = call(best_x)
    for _ in range(restarts + 1):
        pts = np.empty((d + 1, d))
        pts[0] = best_x
        for i in range(d):
            pts[i + 1] = best_x
            pts[i + 1, i] += step[i] if step[i] != 0.0 else 0.05
        vals = np.array([best_f] + [call(pts[i + 1]) for i in range(d)])
        while evals < max_evals:
            order = np.argsort(vals, kind="stable")
            pts = pts[order]
            vals = vals[order]
            dx, fx = _simplex_spread(pts, vals)
            if dx <= x_tol and fx <= f_tol:
                break
            centroid = pts[:-1].mean(axis=0)
            xr = centroid + (centroid - pts[-1])
            fr = call(xr)
            if fr < vals[0]:
                xe = centroid + 2.0 * (centroid - pts[-1])
                fe = call(xe)
                if fe < fr:
                    pts[-1], vals[-1] = xe, fe
                else:
                    pts[-1], vals[-1] = xr, fr
            elif fr < vals[-2]:
                pts[-1], vals[-1] = xr, fr
            else:
                if fr < vals[-1]:
                    xc = centroid + 0.5 * (xr - centroid)
                else:
                    xc = centroid + 0.5 * (pts[-1] - centroid)
                fc = call(xc)
                if fc < min(fr, vals[-1]):
                    pts[-1], vals[-1] = xc, fc
                else:
                    # Shrink everything toward the incumbent best vertex.
                    for i in range(1, d + 1):
                        pts[i] = pts[0] + 0.5 * (pts[i] - pts[0])
                        vals[i] = call(pts[i])
        i_best = int(np.argmin(vals))
        if vals[i_best] < best_f:
            best_f = float(vals[i_best])
            best_x = pts[i_best].copy()
        step = step / 2.0
        if evals >= max_evals:
            break
    return best_x, best_f


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_min(f, a: float, b: float, evals: int = 40) -> tuple[float, float]:
    """Golden-section search for a minimum of f on the open interval (a, b).

    Samples exactly ``evals`` points. Reliable for unimodal f; for
    monotone f it converges to the cheap end of the interval.

    Returns
    -------
    (x_best, f_best)
        The best sampled point; never an endpoint of [a, b].
    """
    a = float(a)
    b = float(b)
    if not (math.isfinite(a) and math.isfinite(b)) or a >= b:
        raise ValidationError(f"need a finite interval a < b, got [{a}, {b}]")
    evals = int(evals)
    if evals < 2:
        raise ValidationError("golden section needs at least two evaluations")
    width = b - a
    c = b - _INVPHI * width
    d = a + _INVPHI * width
    fc = float(f(c))
    fd = float(f(d))
    used = 2
    while used < evals:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = float(f(c))
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = float(f(d))
        used += 1
    return (c, fc) if fc <= fd else (d, fd)
