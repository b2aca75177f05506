"""Potential functions of the paper's example measures.

Every centered measure has a concave potential v(x) = -E|x - Y| lying below
-|x| and equal to it off the support.  Scaling the measure by sqrt(lam)
scales the potential the same way: v_lam(x) = sqrt(lam) v(x / sqrt(lam)).
"""
import math

import numpy as np

from rootembed import measures as M

xs = np.linspace(-1.5, 1.5, 7)
for name in ("uniform", "sqrt_abs", "abs"):
    m = M.example_measure(name)
    v = M.potential(m, xs)
    print(f"{name:10s} v  =", np.array2string(v, precision=4))

m = M.three_point(0.9, 7 / 20)
print("three-point atoms:", m.atoms)
print("v at 0:", M.potential(m, 0.0), " (= -0.7 * 0.9)")

# the scaling identity behind the self-similar barriers
lam = 0.81
m = M.uniform()
lhs = M.potential(M.scale_measure(m, lam), xs)
rhs = math.sqrt(lam) * M.potential(m, xs / math.sqrt(lam))
print("max scaling mismatch:", float(np.max(np.abs(lhs - rhs))))

# measures round-trip through a small TOML document
print(M.dumps(M.two_point(-0.5, 2.0)))
