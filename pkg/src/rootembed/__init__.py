"""Root barriers for the Skorokhod embedding of scaled measure families.

Modules: :mod:`measures` (centered laws and potentials), :mod:`pde`
(explicit obstacle scheme), :mod:`barrier` (extraction, scaling law,
monotonicity and inclusion tests), :mod:`volterra` (integral-equation
oracle), :mod:`montecarlo` (hitting-time simulation and statistics) and
:mod:`cli`.
"""
from .barrier import (
    NEVER, Barrier, barrier_inclusion, check_scaling_condition, eval_barrier,
    extract_barrier, regularize, scale_barrier, solve_barrier,
)
from .measures import Measure, Panel, example_measure, potential, scale_measure
from .montecarlo import (
    MCConfig, HittingSampleSet, ks_distance, martingale_check, mean_tau_check,
    sample_hitting, scaling_check,
)
from .pde import SolverGrid, ValueField, cfl_check, solve_obstacle
from .volterra import VolterraProblem, g_kernel, solve_volterra

__version__ = "0.1.0"
