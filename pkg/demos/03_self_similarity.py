"""Self-similar barriers for the figure measures, with an SVG overlay.

For each measure we solve the obstacle problem for mu_1 and for its
sqrt(lam)-image, check r_lam(x) = lam r_1(x / sqrt(lam)), the r/x^2
monotonicity condition, and the inclusion R_1 inside R_lam.
"""
from pathlib import Path

from rootembed import measures as M
from rootembed.barrier import (
    barrier_gap, barrier_inclusion, check_scaling_condition, regularize, scale_barrier, solve_barrier,
)
from rootembed.pde import SolverGrid
from rootembed.svgplot import render

out = Path(__file__).parent / "output"
out.mkdir(exist_ok=True)
grid = SolverGrid.from_steps(-1.5, 1.5, 1.0, 0.02, 1e-4)

cases = [
    ("uniform", M.uniform(), 0.81),
    ("sqrt_abs", M.sqrt_abs(), 0.81),
    ("abs", M.abs_density(), 0.81),
    ("three_point_7_20", M.three_point(0.9, 7 / 20), 0.64 / 0.81),
    ("three_point_1_3", M.three_point(0.9, 1 / 3), 0.64 / 0.81),
    ("three_point_1_4", M.three_point(0.9, 1 / 4), 0.64 / 0.81),
]
for name, m, lam in cases:
    b1 = regularize(solve_barrier(m, grid, lam=1.0))
    bl = regularize(solve_barrier(M.scale_measure(m, lam), grid, lam=lam))
    gap = barrier_gap(bl, scale_barrier(b1, lam), x_slack=grid.dx)
    inc = barrier_inclusion(b1, bl)
    cond = check_scaling_condition(b1)
    print(f"{name:18s} r1(0)={b1(0.0):.4f}  condition={cond.holds}  "
          f"included={inc.included}  self-similarity gap={gap:.2e}")
    (out / f"{name}.svg").write_text(render([bl, b1], title=f"{name}, lambda={lam:.4g}"))

print("figures in", out)
