import numpy as np
import pytest

from spiralvortex.approximation import (
    RegimeError,
    VortexCoefficients,
    assemble_first_approximation,
    eta0,
    expansion_mode,
    expansion_terms,
    full_log,
    kr_consistency,
    nonlinear_functional_N,
    remainder5,
    residual_sweep,
)
from spiralvortex.io import fit_slope
from spiralvortex.linearization import matrix_A, to_complex

EPS = [0.1, 0.05, 0.025]


@pytest.fixture(scope="module")
def T0(kr_config):
    return kr_config.T0()


@pytest.fixture(scope="module")
def by_eps(kr_config, profile, cache, T0):
    return [assemble_first_approximation(kr_config, profile, e, 2 * T0, cache=cache) for e in EPS]


@pytest.fixture(scope="module")
def by_t(kr_config, profile, cache, T0):
    return [assemble_first_approximation(kr_config, profile, 0.05, s * T0, cache=cache) for s in (2, 4, 8)]


def unit_disk_points(n=200, seed=0):
    rng = np.random.default_rng(seed)
    return np.sqrt(rng.uniform(0, 1, n)) * np.exp(2j * np.pi * rng.uniform(size=n))


def zero_coefficients():
    return VortexCoefficients(C={l: 0j for l in (2, 3, 4)}, Cdot={l: 0j for l in (2, 3, 4)}, D={2: 0j, 4: 0j})


# ---------------------------------------------------------------- expansion terms


def test_expansion_at_origin(kr_config, T0):
    terms = expansion_terms(np.zeros(1, complex), kr_config, 0.05, 2 * T0, 0)
    assert set(terms) == {1, 2}
    for vals in terms.values():
        assert all(np.all(v == 0) for v in vals)


@pytest.mark.parametrize("r", [0.1, 0.5, 1.0])
def test_expansion_modes_average_to_zero(kr_config, T0, r):
    y = r * np.exp(2j * np.pi * np.arange(64) / 64)
    for vals in expansion_terms(y, kr_config, 0.1, 2 * T0, 1).values():
        for E in vals[:3]:
            assert abs(np.mean(E)) < 1e-17


def test_expansion_matches_log_projection(kr_config, T0):
    xi = kr_config.position(2 * T0)
    d = xi[0] - xi[2]
    n = 64
    for r in [0.3, 1.0]:
        y = r * np.exp(2j * np.pi * np.arange(n) / n)
        c = np.fft.fft(full_log(y, 0.1, d)) / n
        keep = np.zeros(n, bool)
        keep[[2, 3, 4, n - 2, n - 3, n - 4]] = True
        proj = np.real(np.fft.ifft(np.where(keep, c, 0)) * n)
        E = sum(expansion_mode(y, 0.1, d, l) for l in (2, 3, 4))
        assert np.max(np.abs(E - proj)) < 1e-10


def test_remainder_series_branch():
    d = 1.0 + 0.3j
    y = unit_disk_points(50) * 0.4 * abs(d) / 0.5
    direct = full_log(y, 0.5, d) - sum(expansion_mode(y, 0.5, d, l) for l in range(1, 5))
    assert np.max(np.abs(remainder5(y, 0.5, d) - direct)) < 1e-13


def test_remainder_order(kr_config, T0):
    y = unit_disk_points()
    sup = [max(np.max(np.abs(v[3])) for v in expansion_terms(y, kr_config, e, 2 * T0, 0).values()) for e in EPS]
    assert fit_slope(EPS, sup).slope == pytest.approx(5, abs=0.1)


# ---------------------------------------------------------------- layers


@pytest.mark.parametrize("layer", [1, 2])
def test_elliptic_plug_back(by_eps, layer):
    for j in range(3):
        assert by_eps[1].elliptic_residual(j, layer) < 1e-6


def test_green_consistency(by_eps):
    for j in range(3):
        assert by_eps[1].green_consistency(j) < 1e-5


def test_layers_zero_mass_and_moment(by_eps):
    fa = by_eps[0]
    for j in range(3):
        y, W = fa.quadrature()
        F = fa.inner_fields(j, y)
        scale = np.sum(W * np.abs(F["phi1"][0] + F["phi2"][0]))
        assert np.all(np.abs(fa.layer_moments(j)) < 1e-12 * scale)


def test_layer_angular_content(by_eps):
    fa = by_eps[0]
    n = 64
    r = np.linspace(0.001, 0.99, 40)
    y = r[:, None] * np.exp(2j * np.pi * np.arange(n) / n)[None, :]
    F = fa.inner_fields(0, y)
    c2 = np.fft.fft(F["phi2"][0], axis=1) / n
    assert np.max(np.abs(c2[:, [0, 1, 3]])) < 1e-12 * np.max(np.abs(c2[:, [2, 4]]))
    c1 = np.fft.fft(F["phi1"][0], axis=1) / n
    assert np.max(np.abs(c1[:, [0, 1]])) < 1e-12 * np.max(np.abs(c1[:, [2, 3, 4]]))


@pytest.mark.parametrize("l", [2, 3, 4])
def test_phi1_slopes(by_eps, l):
    for j in range(3):
        s = fit_slope(EPS, [fa.layer_sup(j)[f"phi1_{l}"] for fa in by_eps]).slope
        assert s == pytest.approx(l, abs=0.1)


@pytest.mark.parametrize("key", ["psi2", "phi2"])
def test_second_layer_slopes(by_eps, by_t, T0, key):
    assert fit_slope(EPS, [fa.layer_sup(0)[key] for fa in by_eps]).slope == pytest.approx(4, abs=0.3)
    ts = [2 * T0, 4 * T0, 8 * T0]
    assert fit_slope(ts, [fa.layer_sup(0)[key] for fa in by_t]).slope == pytest.approx(-2, abs=0.3)


# ---------------------------------------------------------------- outer correction


def test_psi_out_slopes(by_eps, by_t, T0):
    sups = [sum(fa.psi_out_sup()) for fa in by_eps]
    assert fit_slope(EPS, sups).slope == pytest.approx(4, abs=0.3)
    for j in range(3):
        s = fit_slope(EPS, [fa.psi_out_dot_gradU(j) for fa in by_eps]).slope
        assert s == pytest.approx(5, abs=0.3)
    s = fit_slope([2 * T0, 4 * T0, 8 * T0], [fa.psi_out_dot_gradU(0) for fa in by_t]).slope
    assert s == pytest.approx(-2.5, abs=0.3)


def test_psi_out_matches_modal_exterior(by_eps):
    # beyond 2K every cutoff is zero and psi_out is the sum of the exterior modal fields
    fa = by_eps[0]
    xs = fa.xi()
    Ks = fa.cutoff_radius()
    rng = np.random.default_rng(1)
    x = rng.uniform(-30, 30, 400) + 1j * rng.uniform(-30, 30, 400)
    x = x[np.all(np.abs(x[:, None] - xs[None, :]) > 2.05 * Ks, axis=1)]
    ref = sum(fa.kappa[k] * fa.inner_fields(k, (x - xs[k]) / fa.eps)["psi1"][0] for k in range(3))
    assert np.max(np.abs(fa.psi_out(x)[0] - ref)) < 1e-10 * np.max(np.abs(ref))


def test_zero_layers_give_zero_outer_fields(kr_config, profile, cache, T0):
    fa = assemble_first_approximation(kr_config, profile, 0.05, 2 * T0, cache=cache)
    fa.coeffs = [zero_coefficients() for _ in range(3)]
    x = fa.xi()[0] + fa.cutoff_radius() * np.linspace(1.1, 3, 20)
    assert np.all(fa.psi_out(x)[0] == 0)
    assert fa.residual_E2().sup == 0


def test_cutoff_derivatives_supported_on_annulus():
    rho = np.linspace(0, 3, 301)
    e, d1, d2 = eta0(rho)
    out = (rho <= 1) | (rho >= 2)
    assert np.all(d1[out] == 0) and np.all(d2[out] == 0)
    assert np.all(e[rho <= 1] == 1) and np.all(e[rho >= 2] == 0)


# ---------------------------------------------------------------- nonlinear functional


def test_N_zero_perturbation(kr_config):
    assert nonlinear_functional_N(kr_config.masses, 0, kr_config.z0, np.zeros(3)) == 0


def test_N_rejects_coincident(kr_config):
    with pytest.raises(ValueError):
        nonlinear_functional_N(kr_config.masses, 0, kr_config.z0, [kr_config.z0[1] - kr_config.z0[0], 0, 0])


def test_N_linearization(kr_config, rng):
    t = 3.0 * kr_config.tau
    base = kr_config.position(t)
    zeta = rng.normal(size=6)
    lin = to_complex(matrix_A(kr_config, t) @ zeta / (2 * np.pi * (1 + t / kr_config.tau)))
    for j in range(3):
        err = [abs(nonlinear_functional_N(kr_config.masses, j, base, d * to_complex(zeta)) / d - lin[j])
               for d in [1e-3, 1e-4, 1e-5]]
        ratios = np.array(err[:-1]) / np.array(err[1:])
        assert np.all(np.abs(np.log10(ratios) - 1) < 0.1), err


def test_N_time_decay(kr_config, T0):
    # perturbations at the admissible size eps^(4 - sigma) t^(-3/2)
    eps, sigma = 0.05, 0.1
    ts = T0 * np.array([2.0, 4.0, 8.0, 16.0])
    direction = np.array([1.0, 1j, -1.0 + 0.5j]) / 2
    vals = [abs(nonlinear_functional_N(kr_config.masses, 0, kr_config.position(t),
                                       eps ** (4 - sigma) * t**-1.5 * direction)) for t in ts]
    assert fit_slope(ts, vals).slope == pytest.approx(-2.5, abs=0.3)


# ---------------------------------------------------------------- assembled field


def test_regime_check(kr_config, profile, cache, T0):
    with pytest.raises(RegimeError):
        assemble_first_approximation(kr_config, profile, 1.0, T0, cache=cache)


def test_spiral_is_kr_solution(kr_config, T0):
    assert kr_consistency(kr_config, 2 * T0) < 1e-15


def test_total_mass(by_eps, kr_config):
    fa = by_eps[0]
    y, W = fa.quadrature()
    tot = 0.0
    for j in range(3):
        tot += np.sum(W * fa.eps**2 * fa.omega_star(fa.xi()[j] + fa.eps * y))
    assert tot == pytest.approx(kr_config.masses.sum(), rel=1e-10)


@pytest.mark.parametrize("s", [1.0, 2.0, 10.0, 100.0])
def test_cutoffs_separate_cores(kr_config, profile, cache, T0, s):
    fa = assemble_first_approximation(kr_config, profile, 0.1, s * T0, cache=cache)
    xs = fa.xi()
    Ks = fa.cutoff_radius()
    y = unit_disk_points(100)
    for j in range(3):
        x = xs[j] + fa.eps * y
        assert np.all(eta0(np.abs(x - xs[j]) / Ks)[0] == 1)
        for k in range(3):
            if k != j:
                assert np.all(eta0(np.abs(x - xs[k]) / Ks)[0] == 0)


def test_leading_order_stream_solves_elliptic_equation(by_eps):
    # Laplacian of Psi_0 equals -omega_0 away from the centres
    fa = by_eps[1]
    rng = np.random.default_rng(5)
    rad = fa.eps * rng.uniform(0.01, 1.5, 60)
    x = fa.xi()[1] + rad * np.exp(2j * np.pi * rng.uniform(size=60))
    h = 1e-4 * fa.eps
    c2 = np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90])
    lap = sum(c * (fa.Psi0(x + k * h) + fa.Psi0(x + 1j * k * h)) for c, k in zip(c2, range(-3, 4))) / h**2
    w = fa.omega0(x)
    assert np.max(np.abs(lap + w)) < 1e-6 * np.max(np.abs(fa.omega0(fa.xi())))


# ---------------------------------------------------------------- residuals


def test_E1_mass_and_scaling(by_eps, by_t, T0):
    for j in range(3):
        re = [fa.residual_E1(j) for fa in by_eps]
        rt = [fa.residual_E1(j) for fa in by_t]
        for r in re + rt:
            assert abs(r.mass) <= 1e-8 * r.sup
        assert fit_slope(EPS, [r.sup for r in re]).slope == pytest.approx(5, abs=0.3)
        assert fit_slope([2 * T0, 4 * T0, 8 * T0], [r.sup for r in rt]).slope == pytest.approx(-2.5, abs=0.3)


def test_E1_ingredients_vanish_off_disk(by_eps):
    fa = by_eps[0]
    y = np.linspace(1.0 + 1e-9, 2.0, 11) * np.exp(0.3j)
    F = fa.inner_fields(0, y)
    assert np.all(F["phi1"][0] == 0) and np.all(F["phi2"][0] == 0)
    assert np.all(F["phi1"][1] == 0) and np.all(F["phi2"][1] == 0)
    assert np.all(fa.profile.V(np.abs(y)) == 0)


def test_E2_scaling(by_eps):
    sups = [fa.residual_E2().sup for fa in by_eps]
    assert fit_slope(EPS, sups).slope == pytest.approx(6, abs=0.5)


def test_residual_sweep_table(kr_config, profile, cache, T0):
    tab = residual_sweep(kr_config, profile, [0.1, 0.05], [2 * T0], cache=cache)
    assert tab.shape == (6, 6)
    assert np.array_equal(tab[:3, 2], [0, 1, 2])
    assert np.all(tab[:, 3] > 0)
