"""Root barrier of the two-point law 1/2 delta(-1) + 1/2 delta(1).

The barrier is 0 outside ]-1, 1[ and never reached inside: the Root
stopping time is just the exit time of (-1, 1).  The obstacle solver
recovers this, and Monte Carlo hitting confirms E[tau] = 1.
"""
import numpy as np

from rootembed import measures as M
from rootembed.barrier import solve_barrier
from rootembed.montecarlo import MCConfig, mean_tau_check, sample_hitting
from rootembed.pde import SolverGrid

m = M.two_point(-1.0, 1.0)
grid = SolverGrid.from_steps(-2.0, 2.0, 3.0, 0.02, 2e-4)
b = solve_barrier(m, grid)

for x in (-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5):
    r = b(x)
    print(f"r({x:+.1f}) = {'NEVER' if np.isinf(r) else r}")

# the solve horizon is 3 but the exit time is unbounded; NEVER stays NEVER
# for any cap, so simulate with a long one
s = sample_hitting([(1.0, b)], MCConfig(4000, 1e-4, 20.0, seed=1))
print("mean tau:", s.taus(1.0).mean(), "capped:", s.capped_fraction)
print(mean_tau_check(s, m).to_text())
