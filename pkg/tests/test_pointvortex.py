import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from spiralvortex.integrate import StepSizeError
from spiralvortex.pointvortex import (
    ConfigurationError,
    check_constraints,
    config_from_positions,
    growth_exponent,
    integrate_kr,
    kr_velocity,
    length_constraints,
    pair_lengths,
    signed_area,
    spiral_constants,
    synthesize_config,
)

from conftest import admissible_masses

masses_st = st.tuples(st.floats(0.2, 5.0), st.floats(0.2, 5.0)).map(lambda p: admissible_masses(*p))


def test_reference_configuration(kr_config):
    L12, L23, L13 = kr_config.L0
    assert L13 == pytest.approx(1.0, rel=1e-14)
    assert L12 == pytest.approx(np.sqrt(2), rel=1e-14)
    assert L23 == pytest.approx(np.sqrt(3), rel=1e-14)
    assert signed_area(kr_config.z0) == pytest.approx(np.sqrt(2) / 2, rel=1e-14)
    assert kr_config.tau == pytest.approx(3 * np.sqrt(2) * np.pi, rel=1e-13)
    assert kr_config.Lam == pytest.approx(5 / (12 * np.pi), rel=1e-13)
    assert kr_config.tau == pytest.approx(13.3286, abs=1e-4)
    assert kr_config.Lam == pytest.approx(0.132629, abs=1e-6)


def test_constants_from_independent_integration(kr_config):
    # scipy's DOP853 on the real form, then fit the similarity law
    m = kr_config.masses

    def rhs(t, y):
        z = y[:3] + 1j * y[3:]
        w = np.zeros(3, complex)
        for j in range(3):
            for k in range(3):
                if k != j:
                    w[j] += m[k] / (2j * np.pi * (z[j] - z[k]))
        v = np.conj(w)
        return np.concatenate([v.real, v.imag])

    tau = kr_config.tau
    t = np.linspace(0, 10 * tau, 41)
    y0 = np.concatenate([kr_config.z0.real, kr_config.z0.imag])
    sol = solve_ivp(rhs, (0, t[-1]), y0, t_eval=t, method="DOP853", rtol=1e-12, atol=1e-14)
    z = sol.y[:3].T + 1j * sol.y[3:].T
    L2 = pair_lengths(z) ** 2
    slope = np.polyfit(t, L2[:, 2] / L2[0, 2] - 1, 1)[0]
    assert 1 / slope == pytest.approx(tau, rel=1e-8)
    rot = np.unwrap(np.angle(z[:, 0] / kr_config.z0[0]))
    lam = np.polyfit(tau * np.log1p(t / tau), rot, 1)[0]
    assert lam == pytest.approx(kr_config.Lam, rel=1e-8)


@given(s=st.floats(0.1, 10.0))
def test_scaling(s, kr_config):
    tau, lam = spiral_constants(kr_config.masses, s * kr_config.z0)
    assert tau == pytest.approx(s**2 * kr_config.tau, rel=1e-12)
    assert lam == pytest.approx(kr_config.Lam / s**2, rel=1e-12)


def test_inverse_tau_vanishes_with_m3(kr_config):
    m3 = -np.array([1e-1, 1e-2, 1e-3, 1e-4])
    inv = np.array([1 / spiral_constants([1.0, 1.0, m], kr_config.z0)[0] for m in m3])
    assert np.allclose(inv / m3, inv[0] / m3[0], rtol=1e-12)
    assert abs(inv[-1]) < 1e-4


def test_constraint_examples(kr_config):
    assert check_constraints(kr_config.masses, kr_config.z0).ok()
    rep = check_constraints([1.0, 1.0, 1.0], kr_config.z0)
    assert not rep.ok()
    assert rep.harmonic_mean == pytest.approx(3.0)
    res = length_constraints([1.0, 1.0, -0.5], [1.0, 1.0, 1.0])
    assert not res["non_equilateral"][1]
    assert not res["ordering"][1]
    ok = length_constraints([1.0, 1.0, -0.5], kr_config.L0)
    assert all(flag for _, flag in ok.values())
    assert abs(ok["angular_momentum"][0]) < 1e-14


@pytest.mark.parametrize("bad", [[1.0, 1.0, 1.0], [1.0, -1.0, -0.5], [1.0, 1.0, -2.0], [1.0, 1.0]])
def test_synthesize_rejects(bad):
    with pytest.raises(ConfigurationError):
        synthesize_config(bad)


def test_synthesize_rejects_equilateral():
    with pytest.raises(ConfigurationError):
        synthesize_config([1.0, 1.0, -0.5], L13=1.0, L12=1.0)


def test_config_from_positions_roundtrip(kr_config):
    cfg = config_from_positions(kr_config.masses, kr_config.z0)
    assert cfg.tau == kr_config.tau and cfg.Lam == kr_config.Lam
    with pytest.raises(ConfigurationError):
        config_from_positions(kr_config.masses, np.conj(kr_config.z0))


def test_closed_form_position(kr_config):
    t = np.array([0.0, 1.0, 7.5, 100.0]) * kr_config.tau
    z = kr_config.position(t)
    assert np.array_equal(z[0], kr_config.z0)
    mod = np.abs(z) / np.abs(kr_config.z0)
    assert np.allclose(mod, np.sqrt(1 + t / kr_config.tau)[:, None], rtol=1e-13)
    assert np.allclose(pair_lengths(z), kr_config.lengths(t), rtol=1e-13)


def test_velocity_examples(kr_config):
    z = np.array([0.0, 5.0, -3.0 + 1j], complex)
    assert np.allclose(kr_velocity([1.0, 0.0, 0.0], z)[0], 0.0)
    d, m = 2.0, 1.3
    v = kr_velocity([m, m], np.array([-d / 2, d / 2], complex))
    assert np.allclose(np.abs(v), m / (2 * np.pi * d), rtol=1e-14)
    assert v[0] == pytest.approx(-v[1], rel=1e-14)
    assert abs(v[0].real) < 1e-16
    v = kr_velocity(kr_config.masses, kr_config.z0)
    assert np.allclose(v, kr_config.velocity(0.0), rtol=1e-12, atol=0)
    ref = kr_config.z0 * (0.5 + 1j * kr_config.Lam * kr_config.tau) / kr_config.tau
    assert np.max(np.abs(v - ref) / np.abs(ref)) < 1e-12


def test_swap_equal_masses(kr_config):
    z = kr_config.z0
    v = kr_velocity(kr_config.masses, z)
    w = kr_velocity(kr_config.masses, z[[1, 0, 2]])
    assert np.allclose(w, v[[1, 0, 2]], rtol=1e-14)


def test_integrated_spiral(kr_config):
    t = np.linspace(0, 50, 201) * kr_config.tau
    tr = integrate_kr(kr_config.masses, kr_config.z0, t, tol=1e-10)
    ref = kr_config.position(t)
    assert np.max(np.abs(tr.z - ref) / np.abs(ref)) < 1e-6
    drift = np.abs(tr.z @ kr_config.masses - kr_config.z0 @ kr_config.masses)
    assert drift.max() < 1e-8
    assert growth_exponent(1 + t[1:] / kr_config.tau, tr.lengths()[1:, 2]) == pytest.approx(0.5, abs=1e-6)


def test_two_vortex_period():
    m, d = 1.0, 1.0
    T = 2 * np.pi**2 * d**2 / m
    t = np.linspace(0, T, 9)
    tr = integrate_kr([m, m], np.array([-d / 2, d / 2], complex), t, tol=1e-12)
    ang = np.unwrap(np.angle(tr.z[:, 1]))
    assert 2 * np.pi * t[-1] / ang[-1] == pytest.approx(T, rel=1e-6)


def test_collision_aborts(kr_config):
    # the mirrored triangle collapses self-similarly at t = |tau|
    z = np.conj(kr_config.z0)
    tau, _ = spiral_constants(kr_config.masses, z)
    assert tau == pytest.approx(-kr_config.tau, rel=1e-13)
    with pytest.raises(StepSizeError, match="underflows"):
        integrate_kr(kr_config.masses, z, [0.0, 2 * kr_config.tau], tol=1e-10)


@settings(max_examples=10, deadline=None)
@given(masses=masses_st)
def test_integration_matches_closed_form(masses):
    cfg = synthesize_config(masses)
    t = np.linspace(0, 5, 21) * cfg.tau
    tr = integrate_kr(cfg.masses, cfg.z0, t, tol=1e-11)
    ref = cfg.position(t)
    assert np.max(np.abs(tr.z - ref) / np.abs(ref)) < 1e-6
    m = cfg.masses
    assert np.max(np.abs(tr.z @ m)) < 1e-8
    I = np.abs(tr.z) ** 2 @ m
    assert np.max(np.abs(I - I[0])) < 1e-7 * np.max(np.abs(tr.z) ** 2 @ np.abs(m))


@settings(max_examples=25, deadline=None)
@given(masses=masses_st)
def test_invariants_along_closed_form(masses):
    cfg = synthesize_config(masses)
    t = np.linspace(0, 100, 101) * cfg.tau
    for L in cfg.lengths(t):
        res = length_constraints(cfg.masses, L, tol=1e-10)
        assert all(flag for _, flag in res.values()), res
