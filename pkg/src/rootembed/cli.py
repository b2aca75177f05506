"""Command line front end: ``rootembed {solve,family-check,verify-embed,volterra,plot}``.

Exit codes: 0 ok, 2 configuration, 3 CFL violation, 4 numeric failure,
5 statistical failure.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tomli

from . import measures as M
from .barrier import (
    Barrier, BarrierError, barrier_gap, barrier_inclusion, check_scaling_condition,
    from_csv, regularize, scale_barrier, solve_barrier, to_csv,
)
from .montecarlo import (
    MCConfig, NestingError, Report, ks_distance, martingale_check, mean_tau_check, sample_hitting,
    scaling_check, snap_to_atoms,
)
from .pde import CFLViolation, DomainError, SolverError, SolverGrid, cfl_check
from .svgplot import render
from .volterra import VolterraError, VolterraProblem, solve_volterra

log = logging.getLogger("rootembed")

EXIT_OK, EXIT_CONFIG, EXIT_CFL, EXIT_NUMERIC, EXIT_STAT = 0, 2, 3, 4, 5


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    measure: M.Measure
    grid: SolverGrid
    lambdas: list[float]
    eps: float | None = None
    mc: dict = field(default_factory=dict)
    volterra: dict = field(default_factory=dict)
    out: Path = Path(".")


def _measure_from(section: dict, base: Path) -> M.Measure:
    if "file" in section:
        path = base / section["file"]
        if not path.exists():
            raise ConfigError(f"measure file {path} does not exist")
        return M.load(path)
    if "name" not in section:
        raise ConfigError("[measure] needs either name or file")
    params = dict(section.get("params", {}))
    return M.example_measure(section["name"], **params)


def _grid_from(section: dict) -> SolverGrid:
    try:
        a, b, T = float(section["a"]), float(section["b"]), float(section["T"])
        n_x = int(section["n_x"]) if "n_x" in section else int(round((b - a) / float(section["dx"])))
        n_t = int(section["n_t"]) if "n_t" in section else int(round(T / float(section["dt"])))
    except KeyError as exc:
        raise ConfigError(f"[grid] is missing {exc.args[0]}") from None
    return SolverGrid(a, b, T, n_x, n_t)


def load_config(path, lambdas: list[float] | None = None, out: str | None = None, seed: int | None = None) -> RunConfig:
    """Read a TOML run configuration; command-line overrides win over file values."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        doc = tomli.loads(path.read_text(encoding="utf-8"))
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    try:
        measure = _measure_from(doc.get("measure", {}), path.parent)
        grid = _grid_from(doc.get("grid", {}))
    except (M.MeasureError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    run = doc.get("run", {})
    lams = lambdas if lambdas is not None else [float(x) for x in run.get("lambdas", [1.0])]
    if not lams:
        raise ConfigError("lambda list is empty")
    if any(not x > 0 for x in lams):
        raise ConfigError("lambdas must be positive")
    if lams != sorted(lams) or len(set(lams)) != len(lams):
        raise ConfigError("lambdas must be distinct and ascending")
    mc = dict(doc.get("mc", {}))
    if seed is not None:
        mc["seed"] = seed
    out_dir = Path(out) if out is not None else path.parent / doc.get("output", {}).get("dir", ".")
    return RunConfig(measure, grid, lams, run.get("eps"), mc, dict(doc.get("volterra", {})), out_dir)


def _lam_tag(lam: float) -> str:
    return format(lam, "g")


def _solve_family(cfg: RunConfig) -> dict[float, Barrier]:
    cfl_check(cfg.grid)
    out = {}
    for lam in cfg.lambdas:
        m = M.scale_measure(cfg.measure, lam)
        out[lam] = regularize(solve_barrier(m, cfg.grid, cfg.eps, lam=lam))
    return out


def _load_family(directory: Path, lambdas: list[float]) -> dict[float, Barrier]:
    fam = {}
    for lam in lambdas:
        p = directory / f"barrier_{_lam_tag(lam)}.csv"
        if not p.exists():
            raise ConfigError(f"missing barrier file {p}")
        b = from_csv(p)
        fam[lam] = b if b.lam is not None else Barrier(**{**_fields(b), "lam": lam})
    return fam


def _fields(b: Barrier) -> dict:
    return {k: getattr(b, k) for k in ("xs", "r", "horizon", "contact_tol", "regularized", "dt", "dx", "lam", "method", "x_minus", "x_plus")}


def cmd_solve(cfg: RunConfig) -> int:
    cfg.out.mkdir(parents=True, exist_ok=True)
    lines = ["lambda,runtime_s,nodes,zero_nodes,never_nodes,max_finite_r"]
    for lam in cfg.lambdas:
        t0 = time.perf_counter()
        b = regularize(solve_barrier(M.scale_measure(cfg.measure, lam), cfg.grid, cfg.eps, lam=lam))
        dt = time.perf_counter() - t0
        to_csv(b, cfg.out / f"barrier_{_lam_tag(lam)}.csv")
        fin = b.r[np.isfinite(b.r)]
        lines.append(
            f"{lam!r},{dt:.3f},{b.xs.size},{int(np.sum(b.r == 0))},{int(np.sum(b.never))},{float(fin.max()) if fin.size else 0.0!r}"
        )
        log.info("lambda=%g solved in %.2fs", lam, dt)
    summary = "\n".join(lines) + "\n"
    (cfg.out / "summary.txt").write_text(summary, encoding="utf-8")
    print(summary, end="")
    return EXIT_OK


def family_report(fam: dict[float, Barrier]) -> Report:
    """Scaling condition on the unit barrier, pairwise inclusion, and scaled-vs-direct agreement."""
    rep = Report("family check")
    if 1.0 not in fam:
        raise ConfigError("family check needs lambda = 1 in the list")
    b1 = fam[1.0]
    sc = check_scaling_condition(b1)
    rep.add("scaling_condition_lambda_1", 0.0 if sc.holds else 1.0, 0.0, sc.holds)
    if sc.witness:
        rep.notes.append(f"scaling condition fails between x={sc.witness[0]!r} and x={sc.witness[1]!r}")
    lams = sorted(fam)
    for i, lo in enumerate(lams):
        for hi in lams[i + 1:]:
            inc = barrier_inclusion(fam[hi], fam[lo])
            rep.add(f"inclusion_{_lam_tag(hi)}_in_{_lam_tag(lo)}", inc.max_violation, 2 * max(fam[hi].dt, fam[lo].dt), inc.included)
            if not inc.included:
                rep.notes.append(
                    f"barrier for lambda={hi:g} is not inside the one for lambda={lo:g}; worst at x={inc.witness!r}"
                )
    for lam in lams:
        if lam == 1.0:
            continue
        sb = scale_barrier(b1, lam)
        direct = fam[lam]
        err = barrier_gap(direct, sb, x_slack=max(direct.dx, sb.dx))
        tol = 5 * direct.dt + 0.1
        rep.add(f"self_similarity_lambda_{_lam_tag(lam)}", err, tol, err <= tol)
    return rep


def cmd_family_check(cfg: RunConfig, barrier_dir: Path | None = None) -> int:
    if len(cfg.lambdas) < 2:
        raise ConfigError("family-check needs at least two lambdas")
    lams = sorted(set(cfg.lambdas) | {1.0})
    cfg.lambdas = lams
    fam = _load_family(barrier_dir, lams) if barrier_dir else _solve_family(cfg)
    rep = family_report(fam)
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / "family_check.txt").write_text(rep.to_text(), encoding="utf-8")
    print(rep.to_text(), end="")
    return EXIT_OK if rep.passed else EXIT_NUMERIC


def embed_report(fam: dict[float, Barrier], measure: M.Measure, mc: dict) -> tuple[Report, object]:
    lams = sorted(fam)
    t_cap = float(mc.get("t_cap", max(b.horizon for b in fam.values())))
    cfg = MCConfig(
        n_paths=int(mc.get("n_paths", 20000)),
        dt_sim=float(mc.get("dt_sim", min(b.dt for b in fam.values()) / 4)),
        t_cap=t_cap,
        seed=int(mc.get("seed", 0)),
        lambdas=tuple(lams),
    )
    s = sample_hitting([(lam, fam[lam]) for lam in lams], cfg)
    rep = Report("embedding")
    n = cfg.n_paths
    ks_tol = float(mc.get("ks_tol", 0.02))
    for lam in lams:
        m_lam = M.scale_measure(measure, lam)
        d = ks_distance(s.positions(lam), m_lam)
        rep.add(f"ks_lambda_{_lam_tag(lam)}", d, ks_tol, d <= ks_tol)
        if m_lam.has_atoms:
            snapped = snap_to_atoms(s.positions(lam), m_lam, 2 * math.sqrt(cfg.dt_sim))
            ds = ks_distance(snapped, m_lam)
            rep.add(f"ks_snapped_lambda_{_lam_tag(lam)}", ds, ks_tol, ds <= ks_tol)
    rep.extend(mean_tau_check(s, measure))
    for lo, hi in zip(lams, lams[1:]):
        rep.extend(martingale_check(s, lo, hi, n_bins=int(mc.get("n_bins", 10))))
    if 1.0 in lams:
        for lam in lams:
            if lam != 1.0:
                rep.extend(scaling_check(s, lam))
    mono = s.monotone_fraction()
    rep.add("monotone_tau_fraction", mono, 1.0, mono == 1.0)
    rep.notes.append(f"paths={n} dt_sim={cfg.dt_sim!r} seed={cfg.seed} capped_fraction={s.capped_fraction!r}")
    return rep, s


def cmd_verify_embed(cfg: RunConfig, barrier_dir: Path | None = None) -> int:
    fam = _load_family(barrier_dir, cfg.lambdas) if barrier_dir else _solve_family(cfg)
    rep, s = embed_report(fam, cfg.measure, cfg.mc)
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / "embed_report.txt").write_text(rep.to_text(), encoding="utf-8")
    if cfg.mc.get("write_samples", True):
        s.to_csv(cfg.out / "samples.csv")
    print(rep.to_text(), end="")
    return EXIT_OK if rep.passed else EXIT_STAT


def cmd_volterra(cfg: RunConfig) -> int:
    cfg.out.mkdir(parents=True, exist_ok=True)
    n = int(cfg.volterra.get("n", 201))
    t_max = float(cfg.volterra.get("t_max", cfg.grid.T))
    for lam in cfg.lambdas:
        m = M.scale_measure(cfg.measure, lam)
        alpha = m.support[1]
        xs = np.linspace(-alpha, alpha, n)
        b = solve_volterra(VolterraProblem(m, xs, t_max))
        b = Barrier(**{**_fields(b), "lam": lam})
        to_csv(b, cfg.out / f"volterra_{_lam_tag(lam)}.csv")
        print(f"lambda={lam:g} r(0)={float(np.max(b.r))!r}")
    return EXIT_OK


def cmd_plot(inputs: list[str], out: str | None) -> int:
    barriers = [from_csv(p) for p in inputs]
    svg = render(barriers, labels=[
        f"lambda={b.lam:g}" if b.lam is not None else Path(p).stem for b, p in zip(barriers, inputs)
    ])
    target = Path(out) if out else Path("barriers.svg")
    if target.suffix.lower() != ".svg":
        target.mkdir(parents=True, exist_ok=True)
        target = target / "barriers.svg"
    target.write_text(svg, encoding="utf-8")
    print(target)
    return EXIT_OK


def _parse_lambdas(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse lambda list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rootembed", description="Root barriers for scaled measure families")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("solve", "solve the obstacle problem for each lambda and write barrier CSVs"),
        ("family-check", "scaling condition, inclusion and self-similarity checks"),
        ("verify-embed", "Monte Carlo verification of the embedding"),
        ("volterra", "barrier from the Volterra equation (atom-free symmetric measures)"),
    ]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, metavar="PATH")
        p.add_argument("--out", metavar="DIR")
        p.add_argument("--seed", type=int, metavar="N")
        p.add_argument("--lambda", dest="lambdas", metavar="L1,L2,...")
        if name in ("family-check", "verify-embed"):
            p.add_argument("--barriers", metavar="DIR", help="read barrier_<lambda>.csv files instead of solving")
    p = sub.add_parser("plot", help="render barrier CSVs to SVG")
    p.add_argument("inputs", nargs="+", metavar="CSV")
    p.add_argument("--out", metavar="PATH")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "plot":
            return cmd_plot(args.inputs, args.out)
        lams = _parse_lambdas(args.lambdas) if args.lambdas is not None else None
        cfg = load_config(args.config, lambdas=lams, out=args.out, seed=args.seed)
        barrier_dir = Path(args.barriers) if getattr(args, "barriers", None) else None
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "family-check":
            return cmd_family_check(cfg, barrier_dir)
        if args.command == "verify-embed":
            return cmd_verify_embed(cfg, barrier_dir)
        return cmd_volterra(cfg)
    except CFLViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CFL
    except (ConfigError, DomainError, M.MeasureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BarrierError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if args.command == "plot" or getattr(args, "barriers", None) else EXIT_NUMERIC
    except (SolverError, VolterraError, NestingError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
