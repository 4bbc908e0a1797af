"""End-to-end acceptance checks, one group per headline property.

Each ``criterion_k`` returns a list of :class:`Check`; nothing is asserted here
so callers (the test suite and the ``accept`` command) decide how to report.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from . import euler2d as eu
from .approximation import ModalCache, assemble_first_approximation
from .io import fit_slope
from .linearization import entry_bound, exp_pm_B, matrix_A, matrix_B, nonlinear_difference, propagate_linearized
from .modal import far_field_exponent, homogeneous_solution, rho_l, solve_mode, weighted_spectrum
from .pointvortex import (
    ConfigurationError,
    check_constraints,
    growth_exponent,
    integrate_kr,
    length_constraints,
    synthesize_config,
)
from .profile import solve_ground_state

DEFAULT_MASSES = (1.0, 1.0, -0.5)


@dataclass
class Check:
    criterion: int
    name: str
    passed: bool
    value: float
    target: str
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"[{tag}] criterion {self.criterion} {self.name}: {self.value:.6g} vs {self.target}{extra}"


def _profile(state: dict):
    if "profile" not in state:
        state["profile"] = solve_ground_state(19.0)
    return state["profile"]


def _profile_and_cache(state: dict):
    _profile(state)
    if "cache" not in state:
        state["cache"] = ModalCache.build(state["profile"])
    return state["profile"], state["cache"]


def criterion_1(state: dict | None = None) -> list[Check]:
    cfg = synthesize_config(DEFAULT_MASSES, 1.0)
    t = np.linspace(0.0, 50 * cfg.tau, 501)
    traj = integrate_kr(cfg.masses, cfg.z0, t, tol=1e-10)
    exact = cfg.position(t)
    rel = float(np.max(np.abs(traj.z - exact) / np.abs(exact)))
    L = traj.lengths()
    expo = [growth_exponent(1 + t[1:] / cfg.tau, L[1:, p]) for p in range(3)]
    dev = float(max(abs(e - 0.5) for e in expo))
    return [
        Check(1, "tau closed form", abs(cfg.tau - 3 * np.sqrt(2) * np.pi) < 1e-12 * cfg.tau,
              cfg.tau, "3 sqrt(2) pi = 13.3286"),
        Check(1, "Lambda closed form", abs(cfg.Lam - 5 / (12 * np.pi)) < 1e-12,
              cfg.Lam, "5/(12 pi) = 0.132629"),
        Check(1, "KR vs spiral over 50 tau", rel < 1e-6, rel, "< 1e-6 relative"),
        Check(1, "length growth exponent", dev < 1e-4, dev, "|slope - 0.5| < 1e-4"),
    ]


def criterion_2(state: dict | None = None) -> list[Check]:
    cfg = synthesize_config(DEFAULT_MASSES, 1.0)
    rep = check_constraints(cfg.masses, cfg.z0)
    table = length_constraints(cfg.masses, cfg.L0)
    res = max(abs(table["harmonic_mean"][0]), abs(table["angular_momentum"][0]), rep.max_residual())
    all_hold = all(ok for _, ok in table.values()) and rep.ok(1e-12)
    rejected = {}
    for label, masses, L0 in [
        ("harmonic mean", (1.0, 1.0, 1.0), (np.sqrt(2), np.sqrt(3), 1.0)),
        ("mass signs", (1.0, -2.0, 2.0), (np.sqrt(2), np.sqrt(3), 1.0)),
        ("equilateral", DEFAULT_MASSES, (1.0, 1.0, 1.0)),
        ("angular momentum", DEFAULT_MASSES, (1.2, np.sqrt(3), 1.0)),
    ]:
        tab = length_constraints(masses, L0)
        rejected[label] = not all(ok for _, ok in tab.values())
    for label, masses in [("synthesis (1,1,1)", (1.0, 1.0, 1.0)), ("synthesis m3>0", (1.0, 2.0, 3.0))]:
        try:
            synthesize_config(masses, 1.0)
            rejected[label] = False
        except ConfigurationError:
            rejected[label] = True
    try:
        synthesize_config(DEFAULT_MASSES, 1.0, L12=1.0)  # forces L23 = L13 = L12
        rejected["synthesis equilateral"] = False
    except ConfigurationError:
        rejected["synthesis equilateral"] = True
    bad = [k for k, v in rejected.items() if not v]
    return [
        Check(2, "constraints on synthesized config", all_hold and res <= 1e-12, res, "all hold, residual <= 1e-12"),
        Check(2, "violated configs rejected", not bad, float(len(bad)), "0 accepted",
              f"{sum(rejected.values())}/{len(rejected)} rejected"),
    ]


def criterion_3(state: dict | None = None, seed: int = 7) -> list[Check]:
    cfg = synthesize_config(DEFAULT_MASSES, 1.0)
    rng = np.random.default_rng(seed)
    zeta0 = rng.standard_normal(6)
    zeta0 /= np.linalg.norm(zeta0)
    t = np.array([cfg.tau, 5 * cfg.tau])
    ref = propagate_linearized(cfg, zeta0, t, tol=1e-13).route_b
    deltas = [1e-3, 1e-4, 1e-5]
    errs = [float(np.max(np.abs(nonlinear_difference(cfg, zeta0, d, t) - ref))) for d in deltas]
    orders = [np.log10(errs[i] / errs[i + 1]) for i in range(2)]
    rich_ok = all(abs(o - 1) < 0.1 for o in orders)

    ts = rng.uniform(0.5, 100.0, 10) * cfg.tau
    fd_orders = []
    for s in ts:
        e = []
        for h in (0.4, 0.2, 0.1):
            hh = h * cfg.tau * 0.1
            dB = (matrix_B(cfg, s + hh) - matrix_B(cfg, s - hh)) / (2 * hh)
            e.append(np.max(np.abs(dB + matrix_A(cfg, s) / (2 * np.pi * (1 + s / cfg.tau)))))
        fd_orders.append(np.log2(e[0] / e[1]))
        fd_orders.append(np.log2(e[1] / e[2]))
    fd_dev = float(np.max(np.abs(np.array(fd_orders) - 2)))

    bound = entry_bound(cfg)
    worst = 0.0
    for s in np.linspace(0, 100 * cfg.tau, 100):
        Ep, Em = exp_pm_B(cfg, s)
        worst = max(worst, float(np.max(np.abs(Ep))), float(np.max(np.abs(Em))))
    return [
        Check(3, "route B vs nonlinear, Richardson order", rich_ok, float(max(orders, key=lambda o: abs(o - 1))),
              "order 1 +- 0.1", "errors " + ", ".join(f"{e:.2e}" for e in errs)),
        Check(3, "dB/dt finite-difference order", fd_dev < 0.1, 2 + fd_dev, "order 2 +- 0.1",
              f"max deviation over 10 random times {fd_dev:.3g}"),
        Check(3, "exp(+-B) entry bound at 100 times", worst <= bound, worst, f"<= {bound:.6g}"),
    ]


def criterion_4(state: dict | None = None) -> list[Check]:
    state = {} if state is None else state
    p = _profile(state)
    r = np.linspace(0, 1, 1002)[1:-1]
    res = float(np.max(np.abs(p.ode_residual(r)) / (p.r0**2 * p.nu0)))
    mq = p.mass_quadrature()
    mrel = abs(mq - p.mass) / p.mass
    vals = []
    for eps in (1.0, 0.1, 0.01):
        pts = eps * p.nu.breaks[1:-1]
        v, _ = quad(lambda s: float(p.U(np.array([s / eps]))[0]) * s, 0.0, eps, points=pts, limit=400,
                    epsabs=0.0, epsrel=1e-13)
        vals.append(2 * np.pi * v / eps**2)
    spread = float((max(vals) - min(vals)) / p.mass)
    return [
        Check(4, "ODE residual (shooting variables)", res < 1e-8, res, "< 1e-8"),
        Check(4, "mass 2 pi |nu'(1)| vs integral", mrel < 1e-6, mrel, "< 1e-6 relative"),
        Check(4, "eps-independence of rescaled mass", spread < 1e-8, spread, "< 1e-8 relative"),
    ]


def criterion_5(state: dict | None = None) -> list[Check]:
    state = {} if state is None else state
    p = _profile(state)
    z1 = homogeneous_solution(p, 1)
    r = np.concatenate([np.geomspace(1e-4 * p.core, 1.0, 400), np.linspace(1.0, 50.0, 200)])
    target = -2 * p.dGamma(r) / p.nu0**p.gamma
    z1err = float(np.max(np.abs(z1(r) - target)) / np.max(np.abs(target)))
    expo = {k: far_field_exponent(homogeneous_solution(p, k)) for k in (2, 3, 4)}
    edev = max(abs(e - k) / k for k, e in expo.items())
    ri = np.concatenate([np.geomspace(1e-3 * p.core, 1.0, 500)[:-1], np.linspace(0.01, 0.99, 500)])
    res = max(float(np.max(np.abs(rho_l(p, k).residual(ri)))) for k in (2, 3, 4))
    res = max(res, float(np.max(np.abs(solve_mode(p, 1, g=lambda s: s).residual(ri)))))
    sp = weighted_spectrum(p, modes=(0, 1, 2, 3), nev=3)
    mu0 = float(sp.eigenvalues[0][0])
    mu1 = float(sp.eigenvalues[1][0])
    nxt = sp.next_above_cluster()
    return [
        Check(5, "zeta_1 = -Gamma' (normalized)", z1err < 1e-8, z1err, "< 1e-8"),
        Check(5, "far-field exponents k = 2, 3, 4", edev < 0.01, float(edev), "< 1% relative",
              ", ".join(f"k={k}: {e:.5f}" for k, e in expo.items())),
        Check(5, "solve_mode residuals", res < 1e-7, res, "< 1e-7 (relative to largest term)"),
        Check(5, "mu_0 = 0", abs(mu0) < 1e-6, abs(mu0), "< 1e-6"),
        Check(5, "mu_1 = mu_2 = 1 (modes +-1)", abs(mu1 - 1) < 1e-3, abs(mu1 - 1), "< 1e-3"),
        Check(5, "next eigenvalue above cluster", nxt > 1.05, nxt, "> 1.05"),
    ]


def criterion_6(state: dict | None = None) -> list[Check]:
    state = {} if state is None else state
    p, cache = _profile_and_cache(state)
    cfg = synthesize_config(DEFAULT_MASSES, 1.0)
    T0 = cfg.T0()
    eps_list = [0.1, 0.05, 0.025]
    t_list = [2 * T0, 4 * T0, 8 * T0]
    by_eps = [assemble_first_approximation(cfg, p, e, 2 * T0, cache=cache) for e in eps_list]
    by_t = [assemble_first_approximation(cfg, p, 0.05, s, cache=cache) for s in t_list]
    out = []
    worst_mass = 0.0
    se, st = [], []
    for j in range(3):
        r_e = [fa.residual_E1(j) for fa in by_eps]
        r_t = [fa.residual_E1(j) for fa in by_t]
        se.append(fit_slope(eps_list, [r.sup for r in r_e]).slope)
        st.append(fit_slope(t_list, [r.sup for r in r_t]).slope)
        for r in r_e + r_t:
            worst_mass = max(worst_mass, abs(r.mass) / r.sup)
    out.append(Check(6, "sup E1 slope in eps", all(abs(s - 5) <= 0.3 for s in se),
                     max(se, key=lambda s: abs(s - 5)), "5 +- 0.3", "per vortex " + ", ".join(f"{s:.3f}" for s in se)))
    out.append(Check(6, "sup E1 slope in t", all(abs(s + 2.5) <= 0.3 for s in st),
                     max(st, key=lambda s: abs(s + 2.5)), "-2.5 +- 0.3",
                     "per vortex " + ", ".join(f"{s:.3f}" for s in st)))
    out.append(Check(6, "zero-mass identity of E1", worst_mass <= 1e-8, worst_mass, "<= 1e-8 relative to sup"))
    e2 = fit_slope(eps_list, [fa.residual_E2().sup for fa in by_eps]).slope
    out.append(Check(6, "sup E2_out slope in eps", abs(e2 - 6) <= 0.5, e2, "6 +- 0.5"))
    worst = 0.0
    detail = []
    for j in range(3):
        sups = [fa.layer_sup(j) for fa in by_eps]
        for l in (2, 3, 4):
            s = fit_slope(eps_list, [d[f"phi1_{l}"] for d in sups]).slope
            worst = max(worst, abs(s - l))
            if j == 0:
                detail.append(f"l={l}: {s:.4f}")
    out.append(Check(6, "phi_j1^(l) sup slopes", worst <= 0.1, worst, "|slope - l| <= 0.1", ", ".join(detail)))
    return out


def criterion_7(state: dict | None = None, threads: int = 1) -> list[Check]:
    state = {} if state is None else state
    p = _profile(state)
    cfg = synthesize_config(DEFAULT_MASSES, 1.0)
    eps = cfg.L0[2] / 40
    horizon = 5 * cfg.tau
    sep = float(np.max(cfg.lengths(cfg.T0() + horizon)))
    box = 8 * sep
    out = []
    try:
        run = eu.run_and_track(cfg, p, eps, horizon, 512, box, threads=threads)
        dev = run.max_dev()
        out.append(Check(7, "blob centers track spiral", dev < 0.5 * eps, dev / eps, "< 0.5 eps"))
        out.append(Check(7, "mass outside 3 eps balls", run.max_outside() < 1e-6, run.max_outside(), "< 1e-6"))
        se = run.separation_exponent(cfg.tau)
        out.append(Check(7, "separation exponent", abs(se - 0.5) <= 0.02, se, "0.5 +- 0.02"))
    except eu.ResolutionError as e:
        for name, target in [("blob centers track spiral", "< 0.5 eps"), ("mass outside 3 eps balls", "< 1e-6"),
                             ("separation exponent", "0.5 +- 0.02")]:
            out.append(Check(7, name, False, float("nan"), target, f"not run at n=512: {e}"))

    prof = eu.BumpProfile(8)
    d = 1.5
    f = eu.blob_field(256, 2 * np.pi, np.array([-d / 2, d / 2], dtype=complex), np.array([1.0, 1.0]) / prof.mass,
                      0.3, prof, 0.0, threads)
    solver = eu.SpectralEuler(256, 2 * np.pi, threads)
    dt = 0.5 * solver.cfl_limit(f, f.circulation())
    inv0 = eu.invariants(f)
    g = eu.evolve(f, dt, 1000, solver)
    drift = eu.conservation_drift(inv0, eu.invariants(g))
    worst = max(drift["circulation"], drift["impulse"])
    out.append(Check(7, "circulation and impulse drift per 1000 steps", worst < 1e-8, worst, "< 1e-8 relative",
                     f"circulation {drift['circulation']:.2e}, impulse {drift['impulse']:.2e}, two compact blobs n=256"))
    measured, exact = eu.two_blob_period(eps=0.2, d=1.0, n=256, box=6.0, nsteps=300, threads=threads)
    rel = abs(measured - exact) / exact
    out.append(Check(7, "two-blob co-rotation period", rel < 0.02, rel, "< 2% of 2 pi^2 d^2/m",
                     f"measured {measured:.5f}, point vortex {exact:.5f}"))
    return out


CRITERIA: dict[int, Callable[..., list[Check]]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4,
    5: criterion_5, 6: criterion_6, 7: criterion_7,
}


def run_all(which: list[int] | None = None, echo: Callable[[str], None] | None = print) -> list[Check]:
    state: dict = {}
    out = []
    for k in which or sorted(CRITERIA):
        for c in CRITERIA[k](state):
            out.append(c)
            if echo is not None:
                echo(c.line())
    return out
