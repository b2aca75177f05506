import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rootembed import measures as M
from rootembed.barrier import NEVER, Barrier, regularize, scale_barrier, solve_barrier
from rootembed.montecarlo import (
    HittingSampleSet, InsufficientSamples, MCConfig, NestingError, ks_distance, martingale_check,
    mean_tau_check, path_generator, sample_hitting, scaling_check, snap_to_atoms, tail_mean,
)
from rootembed.pde import SolverGrid

XS = np.linspace(-3, 3, 301)


def const(c, dt=0.01, horizon=2.0):
    return Barrier(XS, np.full(XS.size, c), horizon=horizon, dt=dt, dx=0.02)


def exit_barrier(half=1.0, horizon=20.0):
    return Barrier(XS, np.where(np.abs(XS) >= half - 1e-12, 0.0, NEVER), horizon=horizon, dt=0.01, dx=0.02)


# -- sampling ----------------------------------------------------------------------------------

def test_constant_barrier_stops_at_level():
    c, dt = 0.25, 1e-3
    s = sample_hitting([(1.0, const(c))], MCConfig(4000, dt, 2.0, seed=1))
    k = math.ceil(c / dt - 1e-9)
    assert np.allclose(s.taus(1.0), k * dt, rtol=0, atol=1e-12)
    var = s.positions(1.0).var(ddof=1)
    # variance of the sample variance of N(0, c) is 2c^2/(n-1)
    assert abs(var - k * dt) <= 3 * math.sqrt(2 / 3999) * c
    assert s.capped_fraction == 0.0


def test_zero_barrier_stops_immediately():
    s = sample_hitting([(1.0, const(0.0))], MCConfig(100, 1e-3, 2.0))
    assert np.all(s.taus(1.0) == 0.0) and np.all(s.positions(1.0) == 0.0)


def test_two_point_exit_time():
    dt = 1e-4
    n = 4000
    s = sample_hitting([(1.0, exit_barrier())], MCConfig(n, dt, 20.0, seed=5))
    t = s.taus(1.0)
    assert s.capped_fraction == 0.0
    assert abs(t.mean() - 1.0) <= 3 * t.std(ddof=1) / math.sqrt(n) + 2 * math.sqrt(dt)
    b = s.positions(1.0)
    assert np.all(np.abs(np.abs(b) - 1.0) <= 6 * math.sqrt(dt))
    assert ks_distance(snap_to_atoms(b, M.two_point(-1.0, 1.0), 6 * math.sqrt(dt)), M.two_point(-1.0, 1.0)) < 0.04


def test_capping():
    s = sample_hitting([(1.0, const(5.0, horizon=1.0))], MCConfig(50, 1e-3, 1.0))
    assert np.all(s.capped) and s.capped_fraction == 1.0
    assert np.allclose(s.taus(1.0), 1.0)


def test_monotone_along_nested_family():
    fam = [(0.5, const(0.5 * 0.3)), (0.8, const(0.8 * 0.3)), (1.0, const(0.3))]
    s = sample_hitting(fam, MCConfig(500, 1e-3, 2.0, lambdas=(0.5, 0.8, 1.0)))
    assert s.monotone_fraction() == 1.0


def test_monotone_exit_family():
    fam = [(0.25, exit_barrier(0.5)), (1.0, exit_barrier(1.0))]
    s = sample_hitting(fam, MCConfig(500, 1e-3, 20.0, lambdas=(0.25, 1.0)))
    assert s.monotone_fraction() == 1.0
    assert martingale_check(s, 0.25, 1.0, n_bins=5).passed


def test_nesting_refused():
    fam = [(0.5, const(1.0)), (1.0, const(0.5))]
    with pytest.raises(NestingError):
        sample_hitting(fam, MCConfig(10, 1e-3, 2.0, lambdas=(0.5, 1.0)))


def test_config_checks():
    with pytest.raises(ValueError):
        sample_hitting([(1.0, const(0.3, dt=1e-3))], MCConfig(10, 1e-2, 2.0))
    with pytest.raises(ValueError):
        sample_hitting([(1.0, const(0.3, horizon=5.0))], MCConfig(10, 1e-3, 2.0))
    with pytest.raises(ValueError):
        MCConfig(10, 1e-3, 1.0, lambdas=(1.0, 0.5))
    with pytest.raises(ValueError):
        sample_hitting([(1.0, const(0.3))], MCConfig(10, 1e-3, 2.0, lambdas=(0.5,)))


def test_deterministic(tmp_path):
    fam = [(0.81, exit_barrier(0.9)), (1.0, exit_barrier(1.0))]
    cfg = MCConfig(300, 1e-3, 20.0, seed=11, lambdas=(0.81, 1.0))
    a, b = sample_hitting(fam, cfg), sample_hitting(fam, cfg)
    assert np.array_equal(a.tau, b.tau) and np.array_equal(a.b_tau, b.b_tau)
    a.to_csv(tmp_path / "a.csv")
    b.to_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


@pytest.mark.parametrize("block, chunk", [(1, 7), (64, 256), (1000, 1000)])
def test_independent_of_blocking(block, chunk):
    fam = [(0.81, exit_barrier(0.9)), (1.0, exit_barrier(1.0))]
    base = sample_hitting(fam, MCConfig(200, 1e-3, 20.0, seed=3, lambdas=(0.81, 1.0)))
    other = sample_hitting(fam, MCConfig(200, 1e-3, 20.0, seed=3, lambdas=(0.81, 1.0), block_size=block, chunk=chunk))
    assert np.array_equal(base.tau, other.tau) and np.array_equal(base.b_tau, other.b_tau)


def test_path_streams_distinct():
    a = path_generator(0, 0).standard_normal(4)
    b = path_generator(0, 1).standard_normal(4)
    c = path_generator(1, 0).standard_normal(4)
    assert not np.array_equal(a, b) and not np.array_equal(a, c)
    assert np.array_equal(a, path_generator(0, 0).standard_normal(4))


def test_sample_csv(tmp_path):
    s = sample_hitting([(1.0, const(0.1))], MCConfig(3, 1e-3, 2.0))
    s.to_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "path_id,lambda,tau,b_tau,capped"
    assert len(lines) == 4 and lines[1].startswith("0,1.0,")


# -- KS ----------------------------------------------------------------------------------------

def test_ks_quantiles_of_uniform():
    n = 1000
    q = 2 * (np.arange(1, n + 1) - 0.5) / n - 1
    assert ks_distance(q, M.uniform()) <= 1 / (2 * n) + 1e-12


def test_ks_dirac():
    assert ks_distance(np.zeros(10), M.Measure(atoms=((0.0, 1.0),))) == 0.0


def test_ks_atoms_gap():
    assert ks_distance(np.zeros(10), M.two_point(-1.0, 1.0)) == 0.5


def test_ks_empty():
    with pytest.raises(ValueError):
        ks_distance([], M.uniform())


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=1, max_size=50))
def test_ks_in_unit_interval(xs):
    d = ks_distance(xs, M.uniform())
    assert 0.0 <= d <= 1.0


def test_snap():
    m = M.three_point(0.9, 0.35)
    out = snap_to_atoms([0.91, 0.5, -0.89, 0.02], m, 0.05)
    assert list(out) == [0.9, 0.5, -0.9, 0.0]


# -- martingale --------------------------------------------------------------------------------

def gaussian_family_samples(n=20000, c=0.3):
    fam = [(0.5, const(0.5 * c)), (1.0, const(c))]
    return sample_hitting(fam, MCConfig(n, 1e-3, 2.0, seed=2, lambdas=(0.5, 1.0)))


def test_martingale_constant_family_passes():
    rep = martingale_check(gaussian_family_samples(), 0.5, 1.0)
    assert rep.passed and len(rep.rows) == 11


def test_martingale_adversarial_fails():
    s = gaussian_family_samples(5000)
    b = s.b_tau.copy()
    b[:, 1] = b[:, 0] + 0.1
    fake = HittingSampleSet(s.lambdas, s.tau, b, s.capped, s.config)
    assert not martingale_check(fake, 0.5, 1.0).passed


def test_martingale_shrinks_bins():
    s = gaussian_family_samples(100)
    rep = martingale_check(s, 0.5, 1.0, n_bins=10)
    assert len(rep.rows) == 4 and rep.notes


def test_martingale_starved():
    s = gaussian_family_samples(20)
    with pytest.raises(InsufficientSamples):
        martingale_check(s, 0.5, 1.0)


def test_martingale_order():
    with pytest.raises(ValueError):
        martingale_check(gaussian_family_samples(100), 1.0, 0.5)


# -- scaling -------------------------------------------------------------------------------------

def test_scaling_constant_family_passes():
    assert scaling_check(gaussian_family_samples(), 0.5).passed


def test_scaling_unit_lambda_passes():
    s = sample_hitting([(1.0, const(0.3))], MCConfig(4000, 1e-3, 2.0, seed=9))
    assert scaling_check(s, 1.0).passed


def test_scaling_mismatched_family_fails():
    # the lambda=0.5 barrier is not the scaled unit barrier
    fam = [(0.5, const(0.3)), (1.0, const(0.3))]
    s = sample_hitting(fam, MCConfig(20000, 1e-3, 2.0, seed=4, lambdas=(0.5, 1.0)))
    assert not scaling_check(s, 0.5).passed


def test_scaling_overlapping_blocks_refused():
    s = gaussian_family_samples(100)
    with pytest.raises(ValueError, match="overlap"):
        scaling_check(s, 0.5, blocks=(np.arange(60), np.arange(50, 100)))


# -- mean tau --------------------------------------------------------------------------------------

def test_mean_tau_constant():
    s = gaussian_family_samples(200)
    rep = mean_tau_check(s, M.gaussian_truncated(0.5 * math.sqrt(1.2)))
    assert rep.passed


def test_mean_tau_two_point():
    s = sample_hitting([(1.0, exit_barrier())], MCConfig(3000, 1e-4, 20.0, seed=8))
    assert mean_tau_check(s, M.two_point(-1.0, 1.0)).passed


def test_mean_tau_lambda_zero():
    fam = [(0.0, const(0.0)), (1.0, const(0.3))]
    s = sample_hitting(fam, MCConfig(200, 1e-3, 2.0, lambdas=(0.0, 1.0)))
    rep = mean_tau_check(s, M.gaussian_truncated(math.sqrt(0.3)))
    assert rep.rows[0].value == 0.0 and rep.passed


def test_mean_tau_capped_warns():
    s = sample_hitting([(1.0, const(5.0, horizon=1.0))], MCConfig(50, 1e-3, 1.0))
    s.capped[:45] = False  # keep a few capped paths
    with pytest.warns(UserWarning, match="capped"):
        rep = mean_tau_check(s, M.uniform())
    assert rep.notes


def test_uniform_embedding_small():
    grid = SolverGrid.from_steps(-1.5, 1.5, 1.0, 0.05, 0.002)
    b1 = regularize(solve_barrier(M.uniform(), grid))
    s = sample_hitting([(1.0, b1)], MCConfig(3000, 5e-4, 1.0, seed=1))
    assert ks_distance(s.positions(1.0), M.uniform()) < 0.05
    assert mean_tau_check(s, M.uniform()).passed


def test_uniform_family_with_scaled_barrier():
    grid = SolverGrid.from_steps(-1.5, 1.5, 1.0, 0.05, 0.002)
    b1 = regularize(solve_barrier(M.uniform(), grid))
    fam = [(0.81, scale_barrier(b1, 0.81)), (1.0, b1)]
    s = sample_hitting(fam, MCConfig(2000, 5e-4, 1.0, seed=2, lambdas=(0.81, 1.0)))
    assert s.monotone_fraction() == 1.0
    assert martingale_check(s, 0.81, 1.0).passed


def test_tail_mean_decreasing():
    x = np.random.default_rng(0).standard_normal(1000)
    vals = [tail_mean(x, k) for k in (0.0, 0.5, 1.0, 2.0, 3.0)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
