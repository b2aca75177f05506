"""Sampled Root barrier functions.

A :class:`Barrier` holds first-contact times ``r(x)`` on sorted abscissae.
Nodes never in contact within the horizon carry :data:`NEVER` (``inf``),
which orders above every finite time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .measures import Measure
from .pde import SolverGrid, ValueField, default_contact_tol, first_contact_steps

NEVER = math.inf


class BarrierError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Barrier:
    xs: np.ndarray
    r: np.ndarray
    horizon: float
    contact_tol: float = 0.0
    regularized: bool = False
    dt: float = 0.0
    dx: float = 0.0
    lam: float | None = None
    method: str = "pde"
    x_minus: float | None = None
    x_plus: float | None = None
    # (unscaled barrier, accumulated factor) when built by scale_barrier
    origin: tuple["Barrier", float] | None = field(default=None, repr=False)

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        r = np.asarray(self.r, dtype=float)
        if xs.ndim != 1 or xs.shape != r.shape or xs.size == 0:
            raise BarrierError("xs and r must be non-empty 1-d arrays of equal length")
        if np.any(np.diff(xs) <= 0):
            raise BarrierError("abscissae must be strictly increasing")
        if np.any(np.isnan(r)) or np.any(r < 0):
            raise BarrierError("barrier values must be nonnegative (or NEVER)")
        xs.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "r", r)

    @property
    def never(self) -> np.ndarray:
        return np.isinf(self.r)

    def __eq__(self, other):
        if not isinstance(other, Barrier):
            return NotImplemented
        return (
            np.array_equal(self.xs, other.xs)
            and np.array_equal(self.r, other.r)
            and _meta(self) == _meta(other)
        )

    __hash__ = None

    def __call__(self, x):
        return eval_barrier(self, x)


def _meta(b: Barrier) -> dict:
    return {
        "horizon": b.horizon, "contact_tol": b.contact_tol, "regularized": b.regularized,
        "dt": b.dt, "dx": b.dx, "lam": b.lam, "method": b.method,
        "x_minus": b.x_minus, "x_plus": b.x_plus,
    }


def extract_barrier(fld: ValueField, eps: float | None = None) -> Barrier:
    """First time index at which ``u - v <= eps`` on each x node."""
    if eps is None:
        eps = default_contact_tol(fld.obstacle)
    if not eps > 0:
        raise BarrierError(f"contact tolerance must be positive, got {eps}")
    contact = (fld.values - fld.obstacle[None, :]) <= eps
    hit = contact.any(axis=0)
    first = np.argmax(contact, axis=0)
    g = fld.grid
    r = np.where(hit, first * g.dt, NEVER)
    return Barrier(g.xs, r, horizon=g.T, contact_tol=eps, dt=g.dt, dx=g.dx)


def solve_barrier(m: Measure, grid: SolverGrid, eps: float | None = None, *, lam: float | None = None) -> Barrier:
    """Streaming solve + extraction, without storing the value field."""
    first, _, eps = first_contact_steps(m, grid, eps)
    r = np.where(first >= 0, first * grid.dt, NEVER)
    return Barrier(grid.xs, r, horizon=grid.T, contact_tol=eps, dt=grid.dt, dx=grid.dx, lam=lam)


def regularize(b: Barrier) -> Barrier:
    """Zero the barrier outside ``[x_-, x_+]``, the first zeros met scanning out from 0."""
    xs, r = b.xs, b.r
    left = np.flatnonzero((xs <= 0) & (r == 0))
    right = np.flatnonzero((xs >= 0) & (r == 0))
    if left.size == 0 or right.size == 0:
        raise BarrierError("no zero of r on one side of the origin; enlarge the grid")
    jm, jp = left[-1], right[0]
    out = r.copy()
    out[:jm] = 0.0
    out[jp + 1:] = 0.0
    return replace(b, r=out, regularized=True, x_minus=float(xs[jm]), x_plus=float(xs[jp]), origin=None)


_UNIT_SLACK = 4 * np.finfo(float).eps


def scale_barrier(b: Barrier, lam: float) -> Barrier:
    """``r_lam(x) = lam * r(x / sqrt(lam))``: abscissae times sqrt(lam), values times lam.

    Scalings compose on the unscaled source barrier, and a composite factor
    equal to 1 up to rounding gives back the source barrier itself.
    """
    if not lam > 0:
        raise BarrierError(f"scale factor must be positive, got {lam}")
    base, s = b.origin if b.origin is not None else (b, 1.0)
    s = s * lam
    if abs(s - 1.0) <= _UNIT_SLACK:
        return base
    c = math.sqrt(s)
    return replace(
        base,
        xs=c * base.xs,
        r=s * base.r,
        horizon=s * base.horizon,
        dt=s * base.dt,
        dx=c * base.dx,
        lam=None if base.lam is None else s * base.lam,
        x_minus=None if base.x_minus is None else c * base.x_minus,
        x_plus=None if base.x_plus is None else c * base.x_plus,
        origin=(base, s),
    )


def eval_barrier(b: Barrier, x):
    """Nearest-node value; at an exact midpoint the smaller ``r`` wins."""
    xq = np.asarray(x, dtype=float)
    xs, r = b.xs, b.r
    if np.any(xq < xs[0]) or np.any(xq > xs[-1]):
        raise BarrierError(f"query outside [{xs[0]}, {xs[-1]}]")
    if xs.size == 1:
        out = np.full(xq.shape, r[0])
    else:
        j = np.clip(np.searchsorted(xs, xq), 1, xs.size - 1)
        dl = xq - xs[j - 1]
        dr = xs[j] - xq
        out = np.where(dl < dr, r[j - 1], np.where(dr < dl, r[j], np.minimum(r[j - 1], r[j])))
    return float(out) if np.ndim(x) == 0 else out


class ScalingCheck(NamedTuple):
    holds: bool
    witness: tuple[float, float] | None


def check_scaling_condition(b: Barrier, exclusion: float | None = None, tol: float | None = None) -> ScalingCheck:
    """Test that ``r(x)/x^2`` rises toward 0 from the left and falls away from 0 on the right.

    Adjacent nodes with ``|x| > exclusion`` are compared in the cross-multiplied
    form ``r(x2) x1^2`` vs ``r(x1) x2^2`` with slack ``tol`` in time units
    (default ``2 dt``).  NEVER counts as ``+inf``.
    """
    if exclusion is None:
        exclusion = 2.0 * b.dx
    if tol is None:
        tol = 2.0 * b.dt
    xs, r = b.xs, b.r
    keep = np.abs(xs) > exclusion
    for side in (xs < 0, xs > 0):
        idx = np.flatnonzero(keep & side)
        for i, k in zip(idx, idx[1:]):
            x1, x2, r1, r2 = xs[i], xs[k], r[i], r[k]
            ratio = (x2 / x1) ** 2
            if x1 < 0:
                ok = r2 >= ratio * r1 - tol if math.isfinite(r1) else math.isinf(r2)
            else:
                ok = math.isinf(r1) or r2 <= ratio * r1 + tol
            if not ok:
                return ScalingCheck(False, (float(x1), float(x2)))
    return ScalingCheck(True, None)


class Inclusion(NamedTuple):
    included: bool
    max_violation: float
    witness: float | None = None  # abscissa of the largest violation when not included


def barrier_inclusion(inner: Barrier, outer: Barrier, tol: float | None = None) -> Inclusion:
    """Whether the epigraph of ``inner`` sits inside that of ``outer`` (``r_inner >= r_outer``).

    Both barriers are evaluated on the union of their abscissae over the
    common range.  Default ``tol`` is twice the larger time step.
    """
    if tol is None:
        tol = 2.0 * max(inner.dt, outer.dt)
    lo = max(inner.xs[0], outer.xs[0])
    hi = min(inner.xs[-1], outer.xs[-1])
    if lo > hi:
        raise BarrierError("barriers have disjoint abscissae")
    pts = np.union1d(inner.xs, outer.xs)
    pts = pts[(pts >= lo) & (pts <= hi)]
    ri = eval_barrier(inner, pts)
    ro = eval_barrier(outer, pts)
    with np.errstate(invalid="ignore"):
        gap = np.where(np.isinf(ri), 0.0, ro - ri)
    k = int(np.argmax(gap))
    worst = float(max(gap[k], 0.0))
    ok = worst <= tol
    return Inclusion(ok, worst, None if ok else float(pts[k]))


def _excess(r_other: np.ndarray, r_self: np.ndarray) -> np.ndarray:
    # time needed to reach the other epigraph from (x, r_self); NEVER has no points
    with np.errstate(invalid="ignore"):
        d = np.where(np.isinf(r_self), 0.0, r_other - r_self)
    return np.maximum(d, 0.0)


def barrier_gap(a: Barrier, b: Barrier, x_slack: float = 0.0) -> float:
    """Hausdorff-type distance in time between the epigraphs of two barriers.

    Each point ``(x, t)`` of one epigraph is matched to the other epigraph at an
    abscissa within ``x_slack`` of ``x``; the result is the largest time shift
    needed.  With ``x_slack = 0`` this is the pointwise ``max |r_a - r_b|``
    (NEVER matching NEVER).  A positive slack keeps jumps of ``r`` that fall
    between grid nodes, such as next to an off-grid atom, from dominating.
    """
    lo = max(a.xs[0], b.xs[0])
    hi = min(a.xs[-1], b.xs[-1])
    if lo > hi:
        raise BarrierError("barriers have disjoint abscissae")
    pts = np.union1d(a.xs, b.xs)
    pts = pts[(pts >= lo) & (pts <= hi)]
    shifts = (0.0,) if x_slack <= 0 else (-x_slack, 0.0, x_slack)
    worst = 0.0
    for p, q in ((a, b), (b, a)):
        here = eval_barrier(p, pts)
        gaps = [_excess(eval_barrier(q, np.clip(pts + s, lo, hi)), here) for s in shifts]
        worst = max(worst, float(np.max(np.min(gaps, axis=0))))
    return worst


# -- CSV ------------------------------------------------------------------------

_META_KEYS = ("horizon", "contact_tol", "regularized", "dt", "dx", "lam", "method", "x_minus", "x_plus")


def to_csv(b: Barrier, path) -> None:
    """``x,r,is_never`` (plus ``method`` when not the PDE) after ``# key=value`` metadata lines."""
    meta = _meta(b)
    with_method = b.method != "pde"
    lines = [f"# {k}={meta[k]!r}" for k in _META_KEYS]
    lines.append("x,r,is_never" + (",method" if with_method else ""))
    for x, r in zip(b.xs, b.r):
        cells = [repr(float(x)), "" if math.isinf(r) else repr(float(r)), "1" if math.isinf(r) else "0"]
        if with_method:
            cells.append(b.method)
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_meta(key: str, text: str):
    if text == "None":
        return None
    if key == "regularized":
        if text not in ("True", "False"):
            raise BarrierError(f"bad value for {key}: {text}")
        return text == "True"
    if key == "method":
        return text.strip("'\"")
    return float(text)


def from_csv(path) -> Barrier:
    meta: dict = {}
    xs, rs = [], []
    header = None
    try:
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                if key in _META_KEYS:
                    meta[key] = _parse_meta(key, val)
                continue
            cells = line.split(",")
            if header is None:
                header = cells
                if header[:3] != ["x", "r", "is_never"]:
                    raise BarrierError(f"unexpected header {line!r}")
                continue
            if len(cells) != len(header):
                raise BarrierError(f"wrong number of fields in {line!r}")
            xs.append(float(cells[0]))
            if cells[2] == "1":
                rs.append(NEVER)
            elif cells[2] == "0":
                rs.append(float(cells[1]))
            else:
                raise BarrierError(f"is_never must be 0 or 1 in {line!r}")
            if "method" in header:
                meta.setdefault("method", cells[header.index("method")])
    except (ValueError, IndexError) as exc:
        if isinstance(exc, BarrierError):
            raise
        raise BarrierError(f"malformed barrier CSV {path}: {exc}") from None
    if header is None or not xs:
        raise BarrierError(f"no barrier rows in {path}")
    if "horizon" not in meta:
        meta["horizon"] = max((r for r in rs if math.isfinite(r)), default=0.0)
    return Barrier(np.array(xs), np.array(rs), **meta)
