"""Mean-zero probability measures on the line and their potential functions.

A :class:`Measure` is a finite list of atoms plus a list of density panels.
Each panel carries uniformly spaced samples of the density and the density is
taken to be the piecewise-linear interpolant of those samples, so total mass
is the trapezoid rule and every moment or potential below is computed exactly
for that interpolant.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import tomli

MASS_TOL = 1e-9
MEAN_TOL = 1e-9


class MeasureError(ValueError):
    """Raised for malformed measures or invalid builder parameters."""


@dataclass(frozen=True)
class Panel:
    left: float
    right: float
    values: tuple[float, ...]

    def __post_init__(self):
        if not self.right > self.left:
            raise MeasureError(f"panel [{self.left}, {self.right}] is empty")
        if len(self.values) < 2:
            raise MeasureError("a panel needs at least two density samples")
        if any(not math.isfinite(v) or v < 0 for v in self.values):
            raise MeasureError("density samples must be finite and nonnegative")

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.left, self.right, len(self.values))

    @property
    def mass(self) -> float:
        return float(np.trapezoid(self.values, self.nodes))


@dataclass(frozen=True)
class Measure:
    """Atoms ``(position, mass)`` plus piecewise-linear density panels.

    Construction checks unit mass and zero mean to within ``1e-9``; a measure
    that is not centered is rejected rather than shifted.
    """

    atoms: tuple[tuple[float, float], ...] = ()
    panels: tuple[Panel, ...] = ()
    support: tuple[float, float] | None = None
    name: str = field(default="measure", compare=False)

    def __post_init__(self):
        atoms = tuple((float(a), float(w)) for a, w in self.atoms)
        panels = tuple(
            p if isinstance(p, Panel) else Panel(float(p[0]), float(p[1]), tuple(float(v) for v in p[2]))
            for p in self.panels
        )
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "panels", panels)

        if not atoms and not panels:
            raise MeasureError("measure has neither atoms nor density")
        for pos, w in atoms:
            if not math.isfinite(pos) or not (0.0 < w <= 1.0):
                raise MeasureError(f"atom ({pos}, {w}) must have finite position and mass in (0, 1]")
        positions = [a for a, _ in atoms]
        if any(b <= a for a, b in zip(positions, positions[1:])):
            raise MeasureError("atom positions must be strictly increasing")
        for p, q in zip(panels, panels[1:]):
            if q.left < p.right:
                raise MeasureError("panels must be sorted and disjoint")

        lo = min([a for a, _ in atoms] + [p.left for p in panels])
        hi = max([a for a, _ in atoms] + [p.right for p in panels])
        if self.support is None:
            object.__setattr__(self, "support", (lo, hi))
        else:
            s_lo, s_hi = (float(s) for s in self.support)
            if s_lo > lo or s_hi < hi:
                raise MeasureError(f"declared support [{s_lo}, {s_hi}] does not contain [{lo}, {hi}]")
            object.__setattr__(self, "support", (s_lo, s_hi))

        if abs(self.mass - 1.0) > MASS_TOL:
            raise MeasureError(f"total mass {self.mass!r} differs from 1")
        if abs(self.mean) > MEAN_TOL:
            raise MeasureError(f"mean {self.mean!r} is not zero")

    # -- piecewise-linear segment tables -----------------------------------

    @cached_property
    def _segments(self):
        if not self.panels:
            empty = np.zeros(0)
            return empty, empty, empty, empty
        y0, h, f0, slope = [], [], [], []
        for p in self.panels:
            nodes = p.nodes
            vals = np.asarray(p.values, dtype=float)
            y0.append(nodes[:-1])
            h.append(np.diff(nodes))
            f0.append(vals[:-1])
            slope.append(np.diff(vals) / np.diff(nodes))
        return tuple(np.concatenate(a) for a in (y0, h, f0, slope))

    @staticmethod
    def _seg_moments(y0, s, f0, c):
        """Integrals of y^k (f0 + c (y - y0)) over [y0, y0 + s] for k = 0, 1, 2."""
        m0 = f0 * s + c * s**2 / 2
        m1 = y0 * m0 + f0 * s**2 / 2 + c * s**3 / 3
        m2 = y0**2 * m0 + 2 * y0 * (f0 * s**2 / 2 + c * s**3 / 3) + f0 * s**3 / 3 + c * s**4 / 4
        return m0, m1, m2

    @cached_property
    def _tables(self):
        y0, h, f0, c = self._segments
        m0, m1, m2 = self._seg_moments(y0, h, f0, c)
        cum0 = np.concatenate([[0.0], np.cumsum(m0)])
        cum1 = np.concatenate([[0.0], np.cumsum(m1)])
        apos = np.array([a for a, _ in self.atoms])
        amass = np.array([w for _, w in self.atoms])
        return {
            "cum0": cum0, "cum1": cum1, "m0": m0, "m1": m1, "m2": m2,
            "apos": apos, "amass": amass,
            "acum0": np.concatenate([[0.0], np.cumsum(amass)]),
            "acum1": np.concatenate([[0.0], np.cumsum(apos * amass)]),
        }

    @cached_property
    def mass(self) -> float:
        t = self._tables
        return float(t["m0"].sum() + t["amass"].sum())

    @cached_property
    def mean(self) -> float:
        t = self._tables
        return float(t["m1"].sum() + (t["apos"] * t["amass"]).sum())

    @cached_property
    def second_moment(self) -> float:
        t = self._tables
        return float(t["m2"].sum() + (t["apos"] ** 2 * t["amass"]).sum())

    @cached_property
    def abs_moment(self) -> float:
        """First absolute moment, equal to ``-potential(m, 0)``."""
        return -float(potential(self, 0.0))

    @property
    def has_atoms(self) -> bool:
        return bool(self.atoms)

    def _partial(self, x, *, left: bool = False):
        """Mass and first moment carried by (-inf, x] (or (-inf, x) if ``left``)."""
        x = np.asarray(x, dtype=float)
        t = self._tables
        y0, h, f0, c = self._segments
        F = np.zeros_like(x)
        G = np.zeros_like(x)
        if y0.size:
            k = np.searchsorted(y0, x, side="right") - 1
            inside = k >= 0
            kk = np.where(inside, k, 0)
            s = np.clip(x - y0[kk], 0.0, h[kk])
            p0, p1, _ = self._seg_moments(y0[kk], s, f0[kk], c[kk])
            F = np.where(inside, t["cum0"][kk] + p0, 0.0)
            G = np.where(inside, t["cum1"][kk] + p1, 0.0)
        if t["apos"].size:
            j = np.searchsorted(t["apos"], x, side="left" if left else "right")
            F = F + t["acum0"][j]
            G = G + t["acum1"][j]
        return F, G

    def cdf(self, x):
        return self._partial(x)[0]

    def cdf_left(self, x):
        return self._partial(x, left=True)[0]

    def density(self, x):
        """Absolutely continuous part evaluated at ``x`` (atoms excluded)."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for p in self.panels:
            inside = (x >= p.left) & (x <= p.right)
            out = np.where(inside, np.interp(x, p.nodes, p.values), out)
        return out

    def to_toml(self) -> str:
        return dumps(self)


def potential(m: Measure, x):
    """Potential function ``v(x) = -int |x - y| m(dy)``.

    Uses ``E|x - Y| = x (2F(x) - 1) + E[Y] - 2 E[Y; Y <= x]`` with the exact
    piecewise-polynomial F and partial mean; off the support the value is
    ``-|x|`` exactly.
    """
    xa = np.asarray(x, dtype=float)
    F, G = m._partial(xa)
    val = -(xa * (2.0 * F - 1.0) + m.mean - 2.0 * G)
    lo, hi = m.support
    val = np.where((xa <= lo) | (xa >= hi), -np.abs(xa), val)
    return float(val) if np.ndim(x) == 0 else val


def scale_measure(m: Measure, lam: float) -> Measure:
    """Image of ``m`` under ``y -> sqrt(lam) y``; ``lam = 0`` gives the Dirac mass at 0."""
    if not lam >= 0:
        raise MeasureError(f"scale factor must be nonnegative, got {lam}")
    if lam == 0:
        return Measure(atoms=((0.0, 1.0),), name=f"{m.name}@0")
    if lam == 1:
        return m
    c = math.sqrt(lam)
    atoms = tuple((c * a, w) for a, w in m.atoms)
    panels = tuple(Panel(c * p.left, c * p.right, tuple(v / c for v in p.values)) for p in m.panels)
    lo, hi = m.support
    return Measure(atoms, panels, support=(c * lo, c * hi), name=f"{m.name}@{lam:g}")


# -- builders -----------------------------------------------------------------


def _from_density(f: Callable[[np.ndarray], np.ndarray], pieces: Sequence[tuple[float, float]], n: int, name: str) -> Measure:
    raw = [(lo, hi, f(np.linspace(lo, hi, n))) for lo, hi in pieces]
    total = sum(np.trapezoid(v, np.linspace(lo, hi, n)) for lo, hi, v in raw)
    panels = tuple(Panel(lo, hi, tuple((v / total).tolist())) for lo, hi, v in raw)
    return Measure(panels=panels, name=name)


def uniform() -> Measure:
    """Uniform law on [-1, 1] (density 1/2)."""
    return Measure(panels=(Panel(-1.0, 1.0, (0.5, 0.5)),), name="uniform")


def sqrt_abs(n: int = 1001) -> Measure:
    """Density ``0.75 sqrt|x|`` on [-1, 1], sampled on ``n`` nodes per half."""
    return _from_density(lambda y: 0.75 * np.sqrt(np.abs(y)), [(-1.0, 0.0), (0.0, 1.0)], n, "sqrt_abs")


def abs_density() -> Measure:
    """Density ``|x|`` on [-1, 1]; piecewise linear, so represented exactly."""
    return Measure(panels=(Panel(-1.0, 0.0, (1.0, 0.0)), Panel(0.0, 1.0, (0.0, 1.0))), name="abs")


def two_point(a: float, b: float) -> Measure:
    """Centered law on ``{a, b}`` with ``a < 0 < b``: masses ``b/(|a|+b)`` and ``|a|/(|a|+b)``."""
    if not a < 0:
        raise MeasureError(f"two_point needs a < 0, got a={a}")
    if not b > 0:
        raise MeasureError(f"two_point needs b > 0, got b={b}")
    wa = b / (abs(a) + b)
    return Measure(atoms=((a, wa), (b, 1.0 - wa)), name=f"two_point({a:g},{b:g})")


def three_point(a: float, p: float) -> Measure:
    """``p delta(-a) + (1 - 2p) delta(0) + p delta(a)``."""
    if not a > 0:
        raise MeasureError(f"three_point needs a > 0, got a={a}")
    if not 0 < p <= 0.5:
        raise MeasureError(f"three_point needs p in (0, 1/2], got p={p}")
    atoms = [(-a, p), (0.0, 1.0 - 2 * p), (a, p)]
    return Measure(atoms=tuple(at for at in atoms if at[1] > 0), name=f"three_point({a:g},{p:g})")


def gaussian_truncated(sigma: float, cutoff: float = 6.0, n: int = 2001) -> Measure:
    """Centered normal law restricted to ``[-cutoff*sigma, cutoff*sigma]`` and renormalized."""
    if not sigma > 0:
        raise MeasureError(f"sigma must be positive, got {sigma}")
    if not cutoff > 0:
        raise MeasureError(f"cutoff must be positive, got {cutoff}")
    half = cutoff * sigma
    return _from_density(lambda y: np.exp(-0.5 * (y / sigma) ** 2), [(-half, half)], n, f"gaussian({sigma:g})")


BUILDERS: dict[str, Callable[..., Measure]] = {
    "uniform": uniform,
    "sqrt_abs": sqrt_abs,
    "abs": abs_density,
    "two_point": two_point,
    "three_point": three_point,
    "gaussian_truncated": gaussian_truncated,
}


def example_measure(name: str, **params) -> Measure:
    try:
        builder = BUILDERS[name]
    except KeyError:
        raise MeasureError(f"unknown measure {name!r}; choose from {sorted(BUILDERS)}") from None
    try:
        return builder(**params)
    except TypeError as exc:
        raise MeasureError(f"bad parameters for {name}: {exc}") from None


# -- text serialization ---------------------------------------------------------


def dumps(m: Measure) -> str:
    """TOML document with ``atoms``, ``panels`` and ``support`` arrays; floats use repr."""
    atoms = ", ".join(f"[{a!r}, {w!r}]" for a, w in m.atoms)
    panels = ",\n  ".join(
        f"[{p.left!r}, {p.right!r}, [{', '.join(repr(v) for v in p.values)}]]" for p in m.panels
    )
    lines = [
        f"name = {json.dumps(m.name)}",
        f"support = [{m.support[0]!r}, {m.support[1]!r}]",
        f"atoms = [{atoms}]",
        f"panels = [\n  {panels}\n]" if m.panels else "panels = []",
    ]
    return "\n".join(lines) + "\n"


def loads(text: str) -> Measure:
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise MeasureError(f"cannot parse measure document: {exc}") from None
    atoms = tuple((float(a), float(w)) for a, w in doc.get("atoms", []))
    panels = tuple(Panel(float(l), float(r), tuple(float(v) for v in vals)) for l, r, vals in doc.get("panels", []))
    support = tuple(doc["support"]) if "support" in doc else None
    return Measure(atoms, panels, support=support, name=doc.get("name", "measure"))


def save(m: Measure, path) -> None:
    Path(path).write_text(dumps(m), encoding="utf-8")


def load(path) -> Measure:
    return loads(Path(path).read_text(encoding="utf-8"))
