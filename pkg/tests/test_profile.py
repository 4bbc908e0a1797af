import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad, solve_ivp

from spiralvortex.profile import profile_table, solve_ground_state


def oracle_zero(gamma: float, c: float = 1.0):
    """Independent LSODA shooting from u(0) = c; returns the zero and a dense solution."""

    def rhs(r, y):
        return [y[1], -y[1] / r - max(y[0], 0.0) ** gamma]

    r1 = 1e-9
    y0 = [c - c**gamma * r1**2 / 4, -c**gamma * r1 / 2]
    ev = lambda r, y: y[0]  # noqa: E731
    ev.terminal = True
    sol = solve_ivp(rhs, [r1, 1e8], y0, method="LSODA", rtol=1e-13, atol=1e-16, events=ev,
                    dense_output=True)
    return float(sol.t_events[0][0]), sol.sol


def test_frozen_values(profile):
    assert profile.r0 == pytest.approx(127.2276, abs=5e-5)
    assert profile.nu0 == pytest.approx(1.71334, abs=5e-6)
    assert profile.mass == pytest.approx(1.977746, abs=5e-7)
    assert profile.core == 1 / profile.r0


def test_r0_against_independent_shooting(profile):
    r0, _ = oracle_zero(19.0)
    assert profile.r0 == pytest.approx(r0, rel=1e-8)


@pytest.mark.parametrize("c", [0.5, 2.0])
def test_scaling_idempotence(profile, c):
    g = profile.gamma
    r0c, sol = oracle_zero(g, c)
    r = np.linspace(0.0, 0.999, 60)
    rr = np.maximum(r * r0c, 1e-9)
    nu_c = r0c ** (2 / (g - 1)) * sol(rr)[0]
    assert np.max(np.abs(nu_c - profile.nu(r))) < 1e-8 * profile.nu0


def test_boundary_normalization(profile):
    assert abs(profile.nu(1.0)) < 1e-12
    assert abs(profile.dnu(0.0)) < 1e-10


def test_ode_residual(profile):
    r = np.linspace(0.0, 1.0, 1002)[1:-1]
    res = profile.ode_residual(r)
    assert np.max(np.abs(res)) / profile.nu0**profile.gamma < 1e-8


def test_mass_identity(profile):
    assert profile.mass_quadrature() == pytest.approx(profile.mass, rel=1e-6)


def test_gamma_gluing(profile):
    assert profile.Gamma(np.array([1.0]))[0] == 0.0
    left = profile.dnu(1.0 - 1e-15)
    right = profile.dGamma(np.array([1.0]))[0]
    assert left == pytest.approx(right, rel=1e-9)
    assert right == pytest.approx(profile.dnu1, rel=1e-15)
    # the two branches agree to first order across r = 1
    h = 1e-6
    g = profile.Gamma(np.array([1 - h, 1 + h]))
    assert (g[1] - g[0]) / (2 * h) == pytest.approx(profile.dnu1, rel=1e-6)


@pytest.mark.parametrize("eps", [0.1, 0.05])
def test_rescaled_laplacian(profile, eps):
    # sixth-order stencil in x and y on Gamma(|x|/eps) against -eps^-2 U(|x|/eps)
    rng = np.random.default_rng(3)
    rad = eps * np.concatenate([rng.uniform(0.002, 0.99, 40), rng.uniform(1.01, 3.0, 10)])
    ang = rng.uniform(0, 2 * np.pi, rad.size)
    x, y = rad * np.cos(ang), rad * np.sin(ang)
    h = 1e-4 * eps
    c2 = np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90])
    offs = np.arange(-3, 4) * h
    f = lambda X, Y: profile.Gamma(np.hypot(X, Y) / eps)  # noqa: E731
    lap = sum(c * (f(x + o, y) + f(x, y + o)) for c, o in zip(c2, offs)) / h**2
    target = -profile.U(rad / eps) / eps**2
    scale = profile.nu0**profile.gamma / eps**2
    assert np.max(np.abs(lap - target)) / scale < 1e-6


def test_U_support_and_max(profile):
    r = np.linspace(1.0, 5.0, 50)
    assert np.all(profile.U(r) == 0)
    grid = np.linspace(0, 1, 2001)
    u = profile.U(grid)
    assert u[0] == pytest.approx(profile.nu0**profile.gamma, rel=1e-12)
    assert u[0] == u.max()


@pytest.mark.parametrize("eps", [1.0, 0.1, 0.01])
def test_epsilon_mass(profile, eps):
    pts = eps * profile.nu.breaks[1:-1]
    val, _ = quad(lambda r: float(profile.U(np.array([r / eps]))[0]) * r, 0, eps, points=pts,
                  limit=400, epsabs=0, epsrel=1e-13)
    assert 2 * np.pi * val / eps**2 == pytest.approx(profile.mass, rel=1e-8)


def test_strictly_decreasing(profile):
    r = np.unique(np.concatenate([np.sort(profile.nu.breaks), np.linspace(0, 1, 4001)]))
    assert np.all(np.diff(profile.nu(r)) < 0)


def test_profile_table_columns(profile):
    r = np.linspace(0, 2, 9)
    tab = profile_table(profile, r)
    assert tab.shape[0] == 9
    assert np.array_equal(tab[:, 0], r)


def test_rejects_bad_gamma():
    with pytest.raises(ValueError):
        solve_ground_state(1.0)


@settings(max_examples=6, deadline=None)
@given(gamma=st.floats(2.0, 25.0))
def test_mass_identity_any_gamma(gamma):
    p = solve_ground_state(gamma)
    assert p.mass_quadrature() == pytest.approx(p.mass, rel=1e-6)
    r0, _ = oracle_zero(gamma)
    assert p.r0 == pytest.approx(r0, rel=1e-7)
