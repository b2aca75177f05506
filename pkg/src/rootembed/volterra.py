"""Barrier of an atom-free symmetric measure from the Volterra integral equation.

For a continuous barrier that is symmetric and non-increasing in ``|x|`` the
set ``{y : r(y) < r(x)}`` is ``{|y| > |x|}``, so the equation can be solved
node by node from the edge of the support inward, each node being a scalar
root-finding problem in ``r(x)`` with all outer values already known.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .barrier import Barrier
from .measures import Measure, potential


class VolterraError(RuntimeError):
    pass


class BracketError(VolterraError):
    def __init__(self, x, lo, hi, res_lo, res_hi):
        self.x, self.bracket, self.residuals = x, (lo, hi), (res_lo, res_hi)
        super().__init__(
            f"no sign change at x={x!r}: residual {res_lo!r} at r={lo!r}, {res_hi!r} at r={hi!r}"
        )


class MonotonicityError(VolterraError):
    """The root at some node lies below the value found further out."""


def g_kernel(t, z):
    """``sqrt(2t/pi) exp(-z^2/2t) - |z| erfc(|z|/sqrt(2t))``, extended by 0 at ``t = 0``.

    Equals ``E|z + W_t| - |z|`` for a standard Brownian motion ``W``.
    """
    t = np.asarray(t, dtype=float)
    az = np.abs(np.asarray(z, dtype=float))
    if np.any(t < 0):
        raise ValueError("g_kernel needs t >= 0")
    pos = t > 0
    ts = np.where(pos, t, 1.0)
    s = np.sqrt(2.0 * ts)
    with np.errstate(over="ignore"):
        val = np.sqrt(2.0 * ts / np.pi) * np.exp(-(az**2) / (2.0 * ts)) - az * erfc(az / s)
    out = np.where(pos, val, 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class VolterraProblem:
    measure: Measure
    xs: np.ndarray
    t_max: float

    def __post_init__(self):
        m = self.measure
        if m.has_atoms:
            raise ValueError("Volterra solver needs an atom-free measure")
        lo, hi = m.support
        if abs(lo + hi) > 1e-9:
            raise ValueError(f"support [{lo}, {hi}] is not symmetric")
        probe = np.linspace(0.0, hi, 257)
        if np.max(np.abs(m.density(probe) - m.density(-probe))) > 1e-9:
            raise ValueError("density is not symmetric")
        xs = np.asarray(self.xs, dtype=float)
        if np.any(np.diff(xs) <= 0) or not np.allclose(xs, -xs[::-1], rtol=0, atol=1e-12):
            raise ValueError("xs must be a strictly increasing grid symmetric about 0")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        object.__setattr__(self, "xs", xs)

    @property
    def alpha(self) -> float:
        return self.measure.support[1]


def _trapezoid_weights(y: np.ndarray) -> np.ndarray:
    w = np.zeros_like(y)
    if y.size > 1:
        h = np.diff(y)
        w[:-1] += h / 2
        w[1:] += h / 2
    return w


def solve_volterra(p: VolterraProblem, tol: float | None = None) -> Barrier:
    """Outside-in bisection solve; returns a symmetric barrier on ``p.xs``.

    ``tol`` is the bisection tolerance on ``r`` (default ``1e-8 * t_max``).
    The residual at each accepted root is at most ``10 * tol``.
    """
    if tol is None:
        tol = 1e-8 * p.t_max
    m, alpha = p.measure, p.alpha
    xs = p.xs
    n = xs.size
    half = np.flatnonzero(xs >= 0)  # nonnegative nodes, increasing
    r = np.zeros(n)
    # solved interior nodes as (|y|, r(y)), kept in increasing |y|
    ys: list[float] = [alpha]
    rs: list[float] = [0.0]
    prev = 0.0
    slack = 10 * tol
    for j in half[::-1]:
        x = abs(xs[j])
        if x >= alpha:
            continue
        lhs = -x - potential(m, x)
        yy = np.array([x] + ys)
        known = np.array([np.nan] + rs)
        w = _trapezoid_weights(yy) * m.density(yy)

        def residual(t, yy=yy, known=known, w=w, x=x, lhs=lhs):
            lag = np.maximum(t - np.where(np.isnan(known), t, known), 0.0)
            integral = np.sum(w * (g_kernel(lag, x - yy) + g_kernel(lag, x + yy)))
            return g_kernel(t, x) - integral - lhs

        lo, hi = prev, p.t_max
        f_lo, f_hi = residual(lo), residual(hi)
        if f_lo > 0:
            if f_lo > slack:
                raise MonotonicityError(
                    f"root at x={x!r} lies below the outer value {prev!r} (residual {f_lo!r})"
                )
            root = lo
        elif f_hi < 0:
            if x > 0:
                raise BracketError(x, lo, hi, f_lo, f_hi)
            # at the origin every t >= r(0+) solves the equation; the smallest
            # root is the continuous extension from the right
            root = lo
        else:
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if mid in (lo, hi):
                    break
                f_mid = residual(mid)
                if f_mid > 0:
                    hi = mid
                else:
                    lo = mid
                if hi - lo <= tol and abs(f_mid) <= tol:
                    break
            root = 0.5 * (lo + hi)
            res = residual(root)
            if abs(res) > slack:
                raise VolterraError(f"residual {res!r} at x={x!r} exceeds {slack!r}")
        r[j] = root
        ys.insert(0, x)
        rs.insert(0, root)
        prev = root
    neg = n - half.size
    r[:neg] = r[::-1][:neg]  # mirror onto x < 0
    return Barrier(xs, r, horizon=p.t_max, contact_tol=tol, regularized=True, method="volterra")
