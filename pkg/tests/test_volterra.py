import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from rootembed import measures as M
from rootembed.volterra import (
    BracketError, VolterraProblem, g_kernel, solve_volterra,
)


def g_oracle(t, z):
    """E|z + W_t| - |z| from the folded-normal mean, in 40-digit arithmetic."""
    with mpmath.workdps(40):
        s, z = mpmath.sqrt(mpmath.mpf(t)), abs(mpmath.mpf(z))
        folded = s * mpmath.sqrt(2 / mpmath.pi) * mpmath.exp(-z**2 / (2 * s**2)) + z * (1 - 2 * mpmath.ncdf(-z / s))
        return float(folded - z)


# -- kernel ---------------------------------------------------------------------------------

def test_g_at_zero_space():
    assert g_kernel(math.pi / 2, 0.0) == pytest.approx(1.0, abs=1e-15)
    assert g_kernel(2.0, 0.0) == pytest.approx(math.sqrt(4 / math.pi), abs=1e-15)


def test_g_at_zero_time():
    assert g_kernel(0.0, 1.7) == 0.0
    assert g_kernel(0.0, 0.0) == 0.0


def test_g_one_one():
    # sqrt(2/pi) e^{-1/2} = 0.483941, erfc(1/sqrt 2) = 0.317311
    assert g_kernel(1.0, 1.0) == pytest.approx(0.166630, abs=1e-6)
    assert g_kernel(1.0, 1.0) == pytest.approx(g_oracle(1.0, 1.0), abs=1e-13)
    direct = quad(lambda u: (abs(1.0 + u) - 1.0) * math.exp(-u * u / 2) / math.sqrt(2 * math.pi), -np.inf, np.inf, points=None)[0]
    assert g_kernel(1.0, 1.0) == pytest.approx(direct, abs=1e-8)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-4, 5.0), st.floats(-4.0, 4.0))
def test_g_matches_expectation(t, z):
    assert g_kernel(t, z) == pytest.approx(g_oracle(t, z), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 5.0), st.floats(-4.0, 4.0))
def test_g_even_and_nonnegative(t, z):
    assert g_kernel(t, z) == g_kernel(t, -z)
    assert g_kernel(t, z) >= 0.0


def test_g_vectorized():
    t = np.array([0.0, 0.5, 1.0])
    z = np.array([1.0, 0.0, 1.0])
    assert np.array_equal(g_kernel(t, z), [g_kernel(a, b) for a, b in zip(t, z)])


def test_g_negative_time_rejected():
    with pytest.raises(ValueError):
        g_kernel(-0.1, 0.0)


# -- solver ---------------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def uniform_volterra():
    m = M.uniform()
    return m, solve_volterra(VolterraProblem(m, np.linspace(-1.5, 1.5, 151), 1.0))


def test_off_support_zero(uniform_volterra):
    _, b = uniform_volterra
    assert np.all(b.r[np.abs(b.xs) >= 1.0 - 1e-12] == 0.0)


def test_symmetric_exactly(uniform_volterra):
    _, b = uniform_volterra
    assert np.array_equal(b.r, b.r[::-1])


def test_monotone_in_abs_x(uniform_volterra):
    _, b = uniform_volterra
    half = b.r[b.xs >= 0]
    assert np.all(np.diff(half) <= 0)
    assert b.method == "volterra" and b.regularized


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_residual_against_quadrature(uniform_volterra):
    # the continuous equation with r interpolated linearly and integrated adaptively;
    # the bound reflects the 0.02 solver grid, not the bisection tolerance
    m, b = uniform_volterra
    r_of = lambda y: np.interp(abs(y), b.xs[b.xs >= 0], b.r[b.xs >= 0])
    worst = 0.0
    for x in b.xs[(b.xs > 0) & (b.xs < 1)][::5]:
        rx = r_of(x)
        lhs = -abs(x) - M.potential(m, x)
        f = lambda y: g_kernel(max(rx - r_of(y), 0.0), x - y) * 0.5
        integral = quad(f, x, 1.0, limit=200)[0] + quad(f, -1.0, -x, limit=200)[0]
        worst = max(worst, abs(lhs - (g_kernel(rx, x) - integral)))
    assert worst < 1e-3


def test_bracket_perturbation_does_not_move_solution(uniform_volterra):
    m, b = uniform_volterra
    other = solve_volterra(VolterraProblem(m, b.xs, 2.7))
    assert np.max(np.abs(other.r - b.r)) <= 10 * 1e-8 * 2.7


def test_gaussian_flat_at_second_moment():
    m = M.gaussian_truncated(0.5)
    b = solve_volterra(VolterraProblem(m, np.linspace(-3, 3, 301), 1.0))
    central = np.abs(b.xs) <= 1.5
    assert np.max(np.abs(b.r[central] - 0.25)) < 1e-3


@pytest.mark.parametrize("m, r0", [(M.uniform(), 0.3951), (M.sqrt_abs(), 0.5995), (M.abs_density(), 0.8026)], ids=["uniform", "sqrt_abs", "abs"])
def test_origin_value_near_pde(m, r0):
    # PDE values from a dx=0.02, dt=1e-4 solve, frozen
    b = solve_volterra(VolterraProblem(m, np.linspace(-1, 1, 201), 2.0))
    assert b.r[100] == pytest.approx(r0, abs=0.01)


def test_scaled_measure_scales_barrier():
    m = M.abs_density()
    lam = 0.81
    xs = np.linspace(-1, 1, 101)
    b1 = solve_volterra(VolterraProblem(m, xs, 2.0))
    bl = solve_volterra(VolterraProblem(M.scale_measure(m, lam), math.sqrt(lam) * xs, 2.0))
    assert np.max(np.abs(bl.r - lam * b1.r)) < 1e-6


# -- errors -----------------------------------------------------------------------------------------

def test_rejects_atoms():
    with pytest.raises(ValueError, match="atom"):
        VolterraProblem(M.two_point(-1.0, 1.0), np.linspace(-1, 1, 5), 1.0)


def test_rejects_asymmetric_support():
    m = M.Measure(panels=(M.Panel(-1.0, 1.0, (0.5, 0.5)),), support=(-1.0, 1.5))
    with pytest.raises(ValueError, match="symmetric"):
        VolterraProblem(m, np.linspace(-1, 1, 5), 1.0)


def test_rejects_asymmetric_grid():
    with pytest.raises(ValueError):
        VolterraProblem(M.uniform(), np.array([-1.0, 0.0, 0.5, 1.0]), 1.0)


def test_rejects_bad_horizon():
    with pytest.raises(ValueError):
        VolterraProblem(M.uniform(), np.linspace(-1, 1, 5), 0.0)


def test_bracket_failure_reports_node():
    with pytest.raises(BracketError) as info:
        solve_volterra(VolterraProblem(M.uniform(), np.linspace(-1, 1, 41), 0.1))
    err = info.value
    assert 0 < err.x < 1
    assert err.residuals[0] < 0 and err.residuals[1] < 0
