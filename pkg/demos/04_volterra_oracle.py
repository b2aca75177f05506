"""Two independent routes to the same barrier.

For atom-free symmetric measures with a density non-decreasing on [0, alpha]
the barrier solves a Volterra equation that can be marched inward from the
support edge.  We compare it with the obstacle solver for |x| dx on [-1, 1],
and check the truncated Gaussian case where the barrier is flat at the
second moment.
"""
import numpy as np

from rootembed import measures as M
from rootembed.barrier import regularize, solve_barrier
from rootembed.pde import SolverGrid
from rootembed.volterra import VolterraProblem, g_kernel, solve_volterra

print("g(1, 1) =", g_kernel(1.0, 1.0))

m = M.abs_density()
vol = solve_volterra(VolterraProblem(m, np.linspace(-1, 1, 201), 2.0))
pde = regularize(solve_barrier(m, SolverGrid.from_steps(-1.5, 1.5, 1.5, 0.02, 1e-4)))
for x in (0.0, 0.2, 0.4, 0.6, 0.8, 0.9, 0.98):
    print(f"x={x:.2f}  volterra={vol(x):.4f}  pde={pde(x):.4f}")

g = M.gaussian_truncated(0.5)
flat = solve_volterra(VolterraProblem(g, np.linspace(-3, 3, 301), 1.0))
core = flat.r[np.abs(flat.xs) <= 1.5]
print("gaussian barrier on |x| <= 1.5:", core.min(), "to", core.max(), "(second moment 0.25)")
