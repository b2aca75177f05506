"""Monte Carlo check that the barriers embed the measures.

Brownian paths are run against the lambda = 0.81 and lambda = 1 barriers of
the uniform law.  The stopped positions should follow mu_lam, the stopping
times should be nested along lambda, and B_tau should be a martingale in
lambda that scales like Brownian motion.
"""
from rootembed import measures as M
from rootembed.barrier import regularize, solve_barrier
from rootembed.montecarlo import (
    MCConfig, Report, ks_distance, martingale_check, mean_tau_check, sample_hitting, scaling_check,
)
from rootembed.pde import SolverGrid

m = M.uniform()
grid = SolverGrid.from_steps(-1.5, 1.5, 1.0, 0.02, 1e-4)
lams = (0.81, 1.0)
fam = [(lam, regularize(solve_barrier(M.scale_measure(m, lam), grid, lam=lam))) for lam in lams]

# 20k paths keep this under a minute; the acceptance test uses 1e5
s = sample_hitting(fam, MCConfig(20_000, 5e-5, 1.0, seed=7, lambdas=lams))

rep = Report("embedding")
for lam in lams:
    d = ks_distance(s.positions(lam), M.scale_measure(m, lam))
    rep.add(f"ks_lambda_{lam:g}", d, 0.02, d <= 0.02)
rep.extend(mean_tau_check(s, m))
rep.extend(martingale_check(s, 0.81, 1.0))
rep.extend(scaling_check(s, 0.81))
rep.add("monotone_tau_fraction", s.monotone_fraction(), 1.0, s.monotone_fraction() == 1.0)
print(rep.to_text())
print("all passed:", rep.passed)
