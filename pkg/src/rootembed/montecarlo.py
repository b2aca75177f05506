"""Monte Carlo hitting times of Root barriers and statistical checks on them.

Every path owns a Philox stream keyed by ``(seed, path_index)``, so a path's
increments do not depend on how paths are blocked or scheduled.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from .barrier import Barrier, barrier_inclusion
from .measures import Measure


class NestingError(ValueError):
    """Barrier family is not nested, so the sequential search would be unsound."""


class InsufficientSamples(ValueError):
    pass


@dataclass(frozen=True)
class MCConfig:
    n_paths: int
    dt_sim: float
    t_cap: float
    seed: int = 0
    lambdas: tuple[float, ...] = (1.0,)
    block_size: int = 512
    chunk: int = 256

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be positive")
        if not self.dt_sim > 0:
            raise ValueError("dt_sim must be positive")
        if not self.t_cap > 0:
            raise ValueError("t_cap must be positive")
        lams = tuple(float(x) for x in self.lambdas)
        if any(x < 0 for x in lams) or list(lams) != sorted(set(lams)):
            raise ValueError("lambdas must be distinct, nonnegative and ascending")
        object.__setattr__(self, "lambdas", lams)


@dataclass
class HittingSampleSet:
    lambdas: tuple[float, ...]
    tau: np.ndarray  # (n_paths, n_lambdas)
    b_tau: np.ndarray
    capped: np.ndarray
    config: MCConfig = field(repr=False)

    def column(self, lam: float) -> int:
        for i, x in enumerate(self.lambdas):
            if x == lam or math.isclose(x, lam, rel_tol=1e-12, abs_tol=1e-15):
                return i
        raise KeyError(f"lambda {lam} not in sample set {self.lambdas}")

    def taus(self, lam: float) -> np.ndarray:
        return self.tau[:, self.column(lam)]

    def positions(self, lam: float) -> np.ndarray:
        return self.b_tau[:, self.column(lam)]

    @property
    def capped_fraction(self) -> float:
        return float(self.capped.mean()) if self.capped.size else 0.0

    def monotone_fraction(self) -> float:
        """Share of paths whose stopping times are non-decreasing along ``lambdas``."""
        if self.tau.shape[1] < 2:
            return 1.0
        return float(np.all(np.diff(self.tau, axis=1) >= 0, axis=1).mean())

    def to_csv(self, path) -> None:
        lines = ["path_id,lambda,tau,b_tau,capped"]
        for p in range(self.tau.shape[0]):
            for i, lam in enumerate(self.lambdas):
                lines.append(
                    f"{p},{lam!r},{float(self.tau[p, i])!r},{float(self.b_tau[p, i])!r},{int(self.capped[p, i])}"
                )
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def path_generator(seed: int, path_index: int) -> np.random.Generator:
    """Counter-based stream for one path: Philox keyed by ``(path_index, seed)``."""
    key = ((int(path_index) & 0xFFFFFFFFFFFFFFFF) << 64) | (int(seed) & 0xFFFFFFFFFFFFFFFF)
    return np.random.Generator(np.random.Philox(key=key))


class _Lookup:
    """Vectorized nearest-node evaluation of a barrier on arbitrary positions.

    Positions beyond the sampled range take the end node's value.
    """

    def __init__(self, b: Barrier):
        self.xs = b.xs
        self.r = b.r
        d = np.diff(b.xs)
        self.uniform = d.size > 0 and np.allclose(d, d[0], rtol=1e-9, atol=0)
        self.h = d[0] if d.size else 1.0

    def __call__(self, x: np.ndarray) -> np.ndarray:
        xs, r = self.xs, self.r
        n = xs.size
        if n == 1:
            return np.full(x.shape, r[0])
        xc = np.clip(x, xs[0], xs[-1])
        if self.uniform:
            j = np.clip(np.floor((xc - xs[0]) / self.h).astype(np.int64), 0, n - 2) + 1
        else:
            j = np.clip(np.searchsorted(xs, xc), 1, n - 1)
        dl = np.abs(xc - xs[j - 1])
        dr = np.abs(xs[j] - xc)
        rl, rr = r[j - 1], r[j]
        return np.where(dl < dr, rl, np.where(dr < dl, rr, np.minimum(rl, rr)))


def _check_nested(family: Sequence[tuple[float, Barrier]]) -> None:
    lams = [lam for lam, _ in family]
    if lams != sorted(lams) or len(set(lams)) != len(lams):
        raise ValueError("barrier family must be sorted by ascending distinct lambda")
    for (_, outer), (lam, inner) in zip(family, family[1:]):
        inc = barrier_inclusion(inner, outer)
        if not inc.included:
            raise NestingError(f"barrier at lambda={lam} is not nested (max violation {inc.max_violation!r})")


def sample_hitting(family: Sequence[tuple[float, Barrier]], cfg: MCConfig) -> HittingSampleSet:
    """Simulate ``n_paths`` Brownian paths and record ``(tau, B_tau)`` for each barrier.

    For every path the barriers are searched in ascending lambda, each search
    starting at the previous stopping step, which makes the stopping times
    non-decreasing along the family by construction.
    """
    family = list(family)
    _check_nested(family)
    lams = tuple(lam for lam, _ in family)
    if lams != cfg.lambdas:
        raise ValueError(f"family lambdas {lams} differ from config {cfg.lambdas}")
    dts = [b.dt for _, b in family if b.dt > 0]
    if dts and cfg.dt_sim > min(dts) * (1 + 1e-12):
        raise ValueError(f"dt_sim={cfg.dt_sim} exceeds the barrier time step {min(dts)}")
    horizons = [b.horizon for _, b in family if b.horizon > 0]
    if horizons and cfg.t_cap < max(horizons) * (1 - 1e-12):
        raise ValueError(f"t_cap={cfg.t_cap} is shorter than the barrier horizon {max(horizons)}")

    looks = [_Lookup(b) for _, b in family]
    nl = len(looks)
    n = cfg.n_paths
    tau = np.zeros((n, nl))
    btau = np.zeros((n, nl))
    capped = np.zeros((n, nl), dtype=bool)
    k_cap = int(math.floor(cfg.t_cap / cfg.dt_sim + 1e-9))
    sq = math.sqrt(cfg.dt_sim)

    for start in range(0, n, cfg.block_size):
        ids = np.arange(start, min(start + cfg.block_size, n))
        gens = [path_generator(cfg.seed, p) for p in ids]
        m = ids.size
        pos = np.zeros(m)
        ptr = np.zeros(m, dtype=np.int64)  # next barrier to search for, per path
        # time 0
        for l, look in enumerate(looks):
            hit = (ptr == l) & (look(pos) <= 0.0)
            ptr[hit] = l + 1
        k = 0
        active = np.flatnonzero(ptr < nl)
        while active.size and k < k_cap:
            c = min(cfg.chunk, k_cap - k)
            z = np.stack([gens[i].standard_normal(c) for i in active])
            # left-to-right accumulation from the current position, so chunking
            # does not change the rounding of the path
            paths = np.cumsum(np.concatenate([pos[active, None], sq * z], axis=1), axis=1)[:, 1:]
            if not np.all(np.isfinite(paths)):
                raise FloatingPointError("non-finite Brownian increments")
            t = (k + 1 + np.arange(c)) * cfg.dt_sim
            first_col = np.zeros(active.size, dtype=np.int64)
            for l, look in enumerate(looks):
                rows = np.flatnonzero(ptr[active] == l)
                if rows.size == 0:
                    continue
                sub = paths[rows]
                mask = t[None, :] >= look(sub)
                mask &= np.arange(c)[None, :] >= first_col[rows, None]
                got = mask.any(axis=1)
                col = np.argmax(mask, axis=1)
                rows, col = rows[got], col[got]
                gid = ids[active[rows]]
                tau[gid, l] = t[col]
                btau[gid, l] = paths[rows, col]
                ptr[active[rows]] = l + 1
                first_col[rows] = col
            pos[active] = paths[:, -1]
            k += c
            active = active[ptr[active] < nl]
        if active.size:
            gid = ids[active]
            for l in range(nl):
                open_ = ptr[active] <= l
                tau[gid[open_], l] = k_cap * cfg.dt_sim
                btau[gid[open_], l] = pos[active[open_]]
                capped[gid[open_], l] = True
        # paths stopped at t = 0 keep tau = 0, b_tau = 0
    return HittingSampleSet(lams, tau, btau, capped, cfg)


# -- statistics -------------------------------------------------------------------


@dataclass(frozen=True)
class Row:
    metric: str
    value: float
    threshold: float
    passed: bool


@dataclass
class Report:
    title: str
    rows: list[Row] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def add(self, metric: str, value: float, threshold: float, passed: bool) -> None:
        self.rows.append(Row(metric, float(value), float(threshold), bool(passed)))

    def extend(self, other: "Report") -> None:
        self.rows.extend(other.rows)
        self.notes.extend(other.notes)

    def to_text(self) -> str:
        lines = ["metric,value,threshold,pass"]
        lines += [f"{r.metric},{r.value!r},{r.threshold!r},{int(r.passed)}" for r in self.rows]
        lines += [f"# {n}" for n in self.notes]
        return "\n".join(lines) + "\n"


def ks_distance(samples, m: Measure) -> float:
    """Sup distance between the empirical CDF and the CDF of ``m``.

    Both one-sided limits are compared at every sample point and atom, which
    covers the supremum for a CDF with jumps.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    if x.size == 0:
        raise ValueError("ks_distance needs at least one sample")
    n = x.size
    pts = np.union1d(x, [a for a, _ in m.atoms])
    emp_r = np.searchsorted(x, pts, side="right") / n
    emp_l = np.searchsorted(x, pts, side="left") / n
    d_r = np.abs(emp_r - m.cdf(pts))
    d_l = np.abs(emp_l - m.cdf_left(pts))
    return float(max(d_r.max(), d_l.max()))


def snap_to_atoms(samples, m: Measure, radius: float) -> np.ndarray:
    """Move samples within ``radius`` of an atom onto it (for overshoot of discrete hitting)."""
    x = np.asarray(samples, dtype=float).copy()
    for a, _ in m.atoms:
        x[np.abs(x - a) <= radius] = a
    return x


def martingale_check(s: HittingSampleSet, lam_from: float, lam_to: float, n_bins: int = 10,
                     z: float = 4.0, min_per_bin: int = 30) -> Report:
    """Conditional mean of ``B(tau_to) - B(tau_from)`` given ``B(tau_from)``, binned by rank."""
    if not lam_from < lam_to:
        raise ValueError("need lam_from < lam_to")
    x0 = s.positions(lam_from)
    inc = s.positions(lam_to) - x0
    n = x0.size
    bins = min(n_bins, n // min_per_bin)
    if bins < 1:
        raise InsufficientSamples(f"{n} paths cannot fill one bin of {min_per_bin}")
    tag = f"martingale_{lam_from:g}_to_{lam_to:g}"
    rep = Report(tag)
    if bins < n_bins:
        rep.notes.append(f"bins reduced from {n_bins} to {bins}")
    order = np.argsort(x0, kind="stable")
    for i, chunk in enumerate(np.array_split(order, bins)):
        d = inc[chunk]
        se = d.std(ddof=1) / math.sqrt(d.size)
        mean = d.mean()
        rep.add(f"{tag}_bin{i}_mean_increment", mean, z * se, abs(mean) <= z * se)
    se = inc.std(ddof=1) / math.sqrt(n)
    rep.add(f"{tag}_global_mean_increment", inc.mean(), z * se, abs(inc.mean()) <= z * se)
    return rep


def scaling_check(s: HittingSampleSet, lam: float, alpha: float = 0.01,
                  blocks: tuple[np.ndarray, np.ndarray] | None = None) -> Report:
    """Two-sample KS between ``B(tau_lam)`` and ``sqrt(lam) B(tau_1)`` on disjoint path blocks."""
    n = s.tau.shape[0]
    if blocks is None:
        blocks = (np.arange(n // 2), np.arange(n // 2, n))
    a, b = (np.asarray(blk, dtype=np.int64) for blk in blocks)
    if np.intersect1d(a, b).size:
        raise ValueError("path blocks overlap; the two samples would be correlated")
    x = s.positions(lam)[a]
    y = math.sqrt(lam) * s.positions(1.0)[b]
    d = stats.ks_2samp(x, y).statistic
    crit = stats.kstwobign.isf(alpha) * math.sqrt((x.size + y.size) / (x.size * y.size))
    rep = Report(f"scaling lambda={lam:g}")
    rep.add(f"ks2_lambda_{lam:g}_vs_scaled_1", d, crit, d <= crit)
    return rep


def mean_tau_check(s: HittingSampleSet, m1: Measure, z: float = 4.0, bias: float | None = None) -> Report:
    """Mean stopping time against ``lam * int y^2 m1(dy)`` for every lambda."""
    if bias is None:
        bias = 2.0 * math.sqrt(s.config.dt_sim)
    rep = Report("mean tau")
    m2 = m1.second_moment
    for i, lam in enumerate(s.lambdas):
        t = s.tau[:, i]
        cap = s.capped[:, i]
        if cap.mean() > 0.01:
            warnings.warn(f"{cap.mean():.2%} of paths capped at lambda={lam:g}; excluding them biases the mean down")
            rep.notes.append(f"lambda={lam:g}: {int(cap.sum())} capped paths excluded")
            t = t[~cap]
        target = lam * m2
        se = t.std(ddof=1) / math.sqrt(t.size) if t.size > 1 else 0.0
        err = abs(t.mean() - target)
        rep.add(f"mean_tau_lambda_{lam:g}_abs_error", err, z * se + bias, err <= z * se + bias)
    return rep


def tail_mean(samples, k: float) -> float:
    """``E[|X| 1{|X| > k}]``, the uniform-integrability proxy."""
    x = np.abs(np.asarray(samples, dtype=float))
    return float(np.mean(np.where(x > k, x, 0.0)))
