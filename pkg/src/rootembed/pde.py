"""Explicit finite-difference scheme for the Root obstacle problem.

Solves ``min(u - v, u_t - u_xx / 2) = 0`` with ``u(0, x) = -|x|`` on a
rectangle ``[0, T] x [a, b]`` where ``v`` is the potential of the target
measure.  One time step is a heat step with coefficient ``dt / (2 dx^2)``
followed by a pointwise maximum with the obstacle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measures import Measure, potential


class SolverError(RuntimeError):
    """Numeric failure inside the scheme."""


class CFLViolation(ValueError):
    def __init__(self, dt: float, dx2: float):
        self.dt = dt
        self.dx2 = dx2
        super().__init__(f"CFL condition dt < dx^2 violated: dt={dt!r}, dx^2={dx2!r}")


class DomainError(ValueError):
    """The measure's support does not lie strictly inside (a, b)."""


@dataclass(frozen=True)
class SolverGrid:
    a: float
    b: float
    T: float
    n_x: int
    n_t: int

    def __post_init__(self):
        if not self.a < 0 < self.b:
            raise ValueError(f"need a < 0 < b, got a={self.a}, b={self.b}")
        if not self.T > 0:
            raise ValueError(f"horizon must be positive, got T={self.T}")
        if self.n_x < 2 or self.n_t < 1:
            raise ValueError("need n_x >= 2 and n_t >= 1")

    @classmethod
    def from_steps(cls, a: float, b: float, T: float, dx: float, dt: float) -> "SolverGrid":
        return cls(a, b, T, int(round((b - a) / dx)), int(round(T / dt)))

    @property
    def dx(self) -> float:
        return (self.b - self.a) / self.n_x

    @property
    def dt(self) -> float:
        return self.T / self.n_t

    @property
    def xs(self) -> np.ndarray:
        return self.a + self.dx * np.arange(self.n_x + 1)

    @property
    def ts(self) -> np.ndarray:
        return self.dt * np.arange(self.n_t + 1)

    def scaled(self, lam: float) -> "SolverGrid":
        """Image grid ``(lam T, sqrt(lam) [a, b])`` with the same node counts."""
        c = math.sqrt(lam)
        return SolverGrid(c * self.a, c * self.b, lam * self.T, self.n_x, self.n_t)


def cfl_check(grid: SolverGrid) -> None:
    """Raise :class:`CFLViolation` unless ``dt < dx^2`` strictly.

    Values equal to ``dx^2`` up to rounding count as equality and are rejected.
    """
    dt, dx2 = grid.dt, grid.dx**2
    if not dt < dx2 * (1 - 1e-12):
        raise CFLViolation(dt, dx2)


def _check_domain(m: Measure, grid: SolverGrid) -> None:
    lo, hi = m.support
    if not (grid.a < lo and hi < grid.b):
        raise DomainError(f"support [{lo}, {hi}] not strictly inside ({grid.a}, {grid.b})")


@dataclass(frozen=True)
class ValueField:
    grid: SolverGrid
    values: np.ndarray  # (n_t + 1, n_x + 1)
    obstacle: np.ndarray  # v at the x nodes
    measure_id: str = ""

    def to_csv(self, path) -> None:
        """Write ``t,x,u,v`` rows in time-major order."""
        ts, xs = self.grid.ts, self.grid.xs
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("t,x,u,v\n")
            for n, t in enumerate(ts):
                row = self.values[n]
                for j, x in enumerate(xs):
                    fh.write(f"{float(t)!r},{float(x)!r},{float(row[j])!r},{float(self.obstacle[j])!r}\n")


def _steps(m: Measure, grid: SolverGrid):
    """Yield ``(n, u_n)`` for n = 0..n_t, reusing two row buffers."""
    cfl_check(grid)
    _check_domain(m, grid)
    xs = grid.xs
    v = potential(m, xs)
    init = -np.abs(xs)
    coef = grid.dt / (2.0 * grid.dx**2)

    u = init.copy()
    nxt = np.empty_like(u)
    yield 0, u, v
    for n in range(grid.n_t):
        if n == 0:
            # the first step applies the obstacle to the initial data itself
            np.maximum(v, init, out=nxt)
        else:
            nxt[1:-1] = u[1:-1] + coef * (u[2:] - 2.0 * u[1:-1] + u[:-2])
            nxt[0], nxt[-1] = init[0], init[-1]
            np.maximum(v, nxt, out=nxt)
        u, nxt = nxt, u
        yield n + 1, u, v


def solve_obstacle(m: Measure, grid: SolverGrid) -> ValueField:
    """Full value field on every node of ``grid``."""
    values = np.empty((grid.n_t + 1, grid.n_x + 1))
    v = None
    for n, u, v in _steps(m, grid):
        values[n] = u
    if not np.all(np.isfinite(values)):
        raise SolverError("non-finite values in the solution")
    return ValueField(grid, values, v, measure_id=m.name)


def default_contact_tol(obstacle: np.ndarray) -> float:
    """Contact tolerance for ``u - v``: a rounding-level threshold.

    Contact is exact in the scheme (the maximum returns ``v`` itself) so the
    tolerance only absorbs rounding in the evaluation of ``v``.
    """
    return 1e-12 * (1.0 + float(np.max(np.abs(obstacle))))


def first_contact_steps(m: Measure, grid: SolverGrid, eps: float | None = None):
    """Streaming solve returning, per x node, the first step index with ``u - v <= eps``.

    Nodes never in contact get ``-1``.  Only two rows are kept in memory.
    Returns ``(steps, obstacle, eps)``.
    """
    first = np.full(grid.n_x + 1, -1, dtype=np.int64)
    for n, u, v in _steps(m, grid):
        if n == 0 and eps is None:
            eps = default_contact_tol(v)
        hit = (first < 0) & (u - v <= eps)
        if hit.any():
            first[hit] = n
        if n % 1024 == 0 and not np.all(np.isfinite(u)):
            raise SolverError(f"non-finite values at step {n}")
    return first, v, eps
