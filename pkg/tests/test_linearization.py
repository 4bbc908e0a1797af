import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spiralvortex.linearization import (
    entry_bound,
    exp_pm_B,
    matrix_A,
    matrix_B,
    nonlinear_difference,
    propagate_linearized,
    to_complex,
    to_real,
    trig_coefficients,
)
from spiralvortex.pointvortex import kr_velocity, synthesize_config

from conftest import admissible_masses

masses_st = st.tuples(st.floats(0.3, 3.0), st.floats(0.3, 3.0)).map(lambda p: admissible_masses(*p))


def test_trig_symmetry(kr_config):
    for t in [0.0, 3.3, 250.0]:
        S, C = trig_coefficients(kr_config, t)
        assert np.array_equal(S, S.T) and np.array_equal(C, C.T)
        assert np.all(np.diag(S) == 0) and np.all(np.diag(C) == 0)
    with pytest.raises(ValueError):
        trig_coefficients(kr_config, -1.0)


def test_A_matches_jacobian(kr_config):
    # central differences of the Kirchhoff-Routh field at the spiral, scaled by 2 pi (1 + t/tau)
    for t in [0.0, 2.0 * kr_config.tau]:
        z = kr_config.position(t)
        J = np.zeros((6, 6))
        h = 1e-6
        for c in range(6):
            e = np.zeros(6)
            e[c] = h
            dp = to_real(kr_velocity(kr_config.masses, z + to_complex(e)))
            dm = to_real(kr_velocity(kr_config.masses, z - to_complex(e)))
            J[:, c] = (dp - dm) / (2 * h)
        A = matrix_A(kr_config, t) / (2 * np.pi * (1 + t / kr_config.tau))
        assert np.max(np.abs(J - A)) < 1e-8 * np.max(np.abs(A))


def test_translation_kernel(kr_config, rng):
    for t in rng.uniform(0, 100 * kr_config.tau, 10):
        a, b = rng.normal(size=2)
        v = np.tile([a, b], 3)
        assert np.max(np.abs(matrix_A(kr_config, t) @ v)) < 1e-13


def test_B_at_zero(kr_config):
    assert np.array_equal(matrix_B(kr_config, 0.0), np.zeros((6, 6)))
    Ep, Em = exp_pm_B(kr_config, 0.0)
    assert np.array_equal(Ep, np.eye(6)) and np.array_equal(Em, np.eye(6))


def test_B_derivative_second_order(kr_config, rng):
    tau = kr_config.tau
    hs = np.array([0.04, 0.02, 0.01]) * tau
    for t in rng.uniform(0.5, 100, 10) * tau:
        target = -matrix_A(kr_config, t) / (2 * np.pi * (1 + t / tau))
        err = [np.max(np.abs((matrix_B(kr_config, t + h) - matrix_B(kr_config, t - h)) / (2 * h) - target))
               for h in hs]
        order = np.log2(np.array(err[:-1]) / np.array(err[1:]))
        assert np.all(np.abs(order - 2) < 0.05), order


def test_B_entry_bound(kr_config):
    L13 = kr_config.L0[2]
    bound = 2 * np.max(np.abs(kr_config.masses)) / (4 * np.pi * L13**2 * kr_config.Lam) * 2
    for t in np.linspace(0, 100, 201) * kr_config.tau:
        assert np.max(np.abs(matrix_B(kr_config, t))) <= bound


def test_exp_inverse_pair(kr_config):
    for t in np.linspace(0, 100, 51) * kr_config.tau:
        Ep, Em = exp_pm_B(kr_config, t)
        assert np.max(np.abs(Ep @ Em - np.eye(6))) < 1e-12


@settings(max_examples=15, deadline=None)
@given(masses=masses_st, frac=st.floats(0, 100))
def test_exp_entry_bound(masses, frac):
    cfg = synthesize_config(masses)
    Ep, Em = exp_pm_B(cfg, frac * cfg.tau)
    bound = entry_bound(cfg)
    assert np.max(np.abs(Ep)) <= bound and np.max(np.abs(Em)) <= bound


def test_propagation_at_zero(kr_config, rng):
    z0 = rng.normal(size=6)
    prop = propagate_linearized(kr_config, z0, [0.0, kr_config.tau])
    assert np.array_equal(prop.route_a[0], z0)
    assert np.array_equal(prop.route_b[0], z0)
    assert np.all(np.isfinite(prop.discrepancy))


def test_route_b_richardson(kr_config, rng):
    z0 = rng.normal(size=6)
    z0 /= np.linalg.norm(z0)
    t = np.array([1.0, 5.0]) * kr_config.tau
    lin = propagate_linearized(kr_config, z0, t).route_b
    errs = [np.max(np.abs(nonlinear_difference(kr_config, z0, d, t) - lin)) for d in [1e-3, 1e-4, 1e-5]]
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(np.abs(np.log10(ratios) - 1) < 0.1), errs


def test_route_b_bounded(kr_config, rng):
    z0 = rng.normal(size=6)
    t = np.linspace(0, 100, 101) * kr_config.tau
    zb = propagate_linearized(kr_config, z0, t).route_b
    assert np.max(np.linalg.norm(zb, axis=1)) <= 6 * entry_bound(kr_config) * np.linalg.norm(z0)
