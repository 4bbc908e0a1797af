"""Command-line driver: ``spiralvortex <command> [--config FILE] [--out DIR] [--threads N] [--seed S]``.

Every command writes CSV tables and a ``summary.json`` into the output
directory and exits with 0 only if all invariants it checks hold.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import euler2d as eu
from .io import ConfigError, RunConfig, fit_slope, write_csv, write_json
from .pointvortex import (
    ConfigurationError,
    config_from_positions,
    growth_exponent,
    integrate_kr,
    length_constraints,
    spiral_constants,
    synthesize_config,
)

EXIT_FAIL = 1
EXIT_USAGE = 2


class CheckFailed(RuntimeError):
    """An invariant checked by a command did not hold."""


def _lengths(cfg: RunConfig) -> np.ndarray:
    """``(L12, L23, L13)`` requested by the configuration; NaN where no real length exists."""
    m = np.asarray(cfg.masses, dtype=float)
    L13 = float(cfg.L13)
    with np.errstate(all="ignore"):
        L12 = float(cfg.L12) if cfg.L12 is not None else L13 * np.sqrt(-m[1] / m[2])
        L23 = np.sqrt(-(m[0] / m[2]) * L12**2 - (m[0] / m[1]) * L13**2)
    return np.array([L12, L23, L13])


def _config(cfg: RunConfig):
    spiral = synthesize_config(cfg.masses, cfg.L13, cfg.L12)
    if cfg.orientation == "negative":
        # mirrored triangle: the same lengths traversed clockwise
        z = np.conj(spiral.z0)
        tau, lam = spiral_constants(spiral.masses, z)
        if not tau > 0:
            raise ConfigurationError(f"negative orientation gives tau = {tau:.6g} <= 0 (collapsing family)")
        return config_from_positions(spiral.masses, z)
    return spiral


def cmd_spiral(cfg: RunConfig, out: Path, args) -> dict:
    if args.config is not None:
        cfg.require("masses")
    L0 = _lengths(cfg)
    if np.all(np.isfinite(L0)) and np.all(L0 > 0):
        table = length_constraints(cfg.masses, L0)
    else:
        # only the mass conditions can be evaluated
        table = {k: v for k, v in length_constraints(cfg.masses, np.ones(3)).items()
                 if k in ("mass_signs", "harmonic_mean")}
        table["real_lengths"] = (float("nan"), False)
    report = {name: {"residual": r, "pass": ok} for name, (r, ok) in table.items()}
    write_json(out / "constraints.json", {"lengths": L0, "constraints": report})
    failed = [name for name, (_, ok) in table.items() if not ok]
    if failed:
        raise CheckFailed("constraint violated: " + ", ".join(failed))
    sc = _config(cfg)
    t = np.linspace(0.0, cfg.horizon * sc.tau, cfg.samples)
    traj = integrate_kr(sc.masses, sc.z0, t, tol=cfg.tol)
    exact = sc.position(t)
    rel = float(np.max(np.abs(traj.z - exact) / np.abs(exact)))
    L = traj.lengths()
    z = traj.z
    write_csv(out / "trajectory.csv", ["t", "x1", "y1", "x2", "y2", "x3", "y3", "L12", "L23", "L13"],
              np.column_stack([t, z[:, 0].real, z[:, 0].imag, z[:, 1].real, z[:, 1].imag,
                               z[:, 2].real, z[:, 2].imag, L]))
    center = np.sum(sc.masses * z, axis=1)
    ang = np.sum(sc.masses * np.abs(z) ** 2, axis=1)
    expo = [growth_exponent(1 + t[1:] / sc.tau, L[1:, p]) for p in range(3)]
    summary = {
        "tau": sc.tau, "Lambda": sc.Lam, "T0": sc.T0(), "z0": [[c.real, c.imag] for c in sc.z0],
        "L0": sc.L0, "max_rel_error_vs_spiral": rel, "growth_exponents": expo,
        "center_drift": float(np.max(np.abs(center - center[0]))),
        "angular_impulse_drift": float(np.max(np.abs(ang - ang[0]))),
        "steps": traj.stats.accepted, "rejected": traj.stats.rejected,
        "max_local_error": traj.stats.max_error_estimate,
    }
    summary["pass"] = bool(rel < 1e-6 and summary["center_drift"] < 1e-8)
    return summary


def cmd_linearize(cfg: RunConfig, out: Path, args) -> dict:
    from .linearization import entry_bound, linearization_table, nonlinear_difference, propagate_linearized

    sc = _config(cfg)
    t = np.linspace(0.0, cfg.t_max * sc.tau, cfg.samples)
    tab = linearization_table(sc, t)
    write_csv(out / "linearization.csv", ["t", "normA", "normB", "maxExpEntry", "bound"], tab)
    rng = np.random.default_rng(args.seed)
    zeta0 = rng.standard_normal(6)
    zeta0 /= np.linalg.norm(zeta0)
    tp = np.array([sc.tau, 5 * sc.tau])
    prop = propagate_linearized(sc, zeta0, tp)
    errs = [float(np.max(np.abs(nonlinear_difference(sc, zeta0, d, tp) - prop.route_b))) for d in cfg.deltas]
    orders = [float(np.log(errs[i] / errs[i + 1]) / np.log(cfg.deltas[i] / cfg.deltas[i + 1]))
              for i in range(len(errs) - 1)]
    bound_ok = bool(np.all(tab[:, 3] <= entry_bound(sc)))
    return {"zeta0": zeta0, "seed": args.seed, "deltas": cfg.deltas, "nonlinear_errors": errs,
            "richardson_orders": orders, "route_a_discrepancy": prop.discrepancy,
            "bound": entry_bound(sc), "max_exp_entry": float(tab[:, 3].max()), "bound_holds": bound_ok,
            "pass": bound_ok and all(abs(o - 1) < 0.1 for o in orders)}


def cmd_profile(cfg: RunConfig, out: Path, args) -> dict:
    from .profile import profile_table, solve_ground_state

    p = solve_ground_state(cfg.gamma, cfg.nodes)
    r = np.concatenate([np.geomspace(1e-4 * p.core, 1.0, cfg.samples, endpoint=False),
                        np.linspace(1.0, 5.0, 41)])
    write_csv(out / "profile.csv", ["r", "nu", "dnu", "U"], profile_table(p, r))
    ri = np.linspace(0, 1, 1002)[1:-1]
    res = float(np.max(np.abs(p.ode_residual(ri)) / (p.r0**2 * p.nu0)))
    mrel = abs(p.mass_quadrature() - p.mass) / p.mass
    return {"gamma": p.gamma, "r0": p.r0, "nu0": p.nu0, "dnu1": p.dnu1, "mass": p.mass,
            "grid_size": int(p.nu.coeffs.size), "ode_residual": res, "mass_relative_difference": mrel,
            "pass": bool(res < 1e-8 and mrel < 1e-6)}


def cmd_modal(cfg: RunConfig, out: Path, args) -> dict:
    from .modal import far_field_exponent, homogeneous_solution, rho_l, weighted_spectrum
    from .profile import solve_ground_state

    p = solve_ground_state(cfg.gamma, cfg.nodes)
    r = np.geomspace(1e-3 * p.core, 1.0, cfg.samples, endpoint=False)
    modes = {}
    worst = 0.0
    for k in cfg.modes:
        hom = homogeneous_solution(p, k, cfg.nodes)
        sol = rho_l(p, k, cfg.nodes)
        res = sol.residual(r)
        worst = max(worst, float(np.max(np.abs(res))))
        write_csv(out / f"mode_{abs(k)}.csv", ["r", "zeta_k", "psi_k", "residual"],
                  np.column_stack([r, hom(r), sol.psi(r), res]))
        modes[str(k)] = {"far_field_exponent": far_field_exponent(hom) if abs(k) >= 2 else None,
                         "max_residual": float(np.max(np.abs(res)))}
    sp = weighted_spectrum(p, modes=cfg.spectrum_modes, nev=cfg.nev)
    eig = {"eigenvalues": {str(k): v for k, v in sp.eigenvalues.items()},
            "next_above_cluster": sp.next_above_cluster()}
    write_json(out / "spectrum.json", eig)
    ok = worst < 1e-7 and sp.next_above_cluster() > 1.05
    if 0 in sp.eigenvalues:
        ok = ok and abs(sp.eigenvalues[0][0]) < 1e-6
    if 1 in sp.eigenvalues:
        ok = ok and abs(sp.eigenvalues[1][0] - 1) < 1e-3
    return {"modes": modes, **eig, "pass": bool(ok)}


def cmd_approx(cfg: RunConfig, out: Path, args) -> dict:
    from .approximation import ModalCache, residual_sweep
    from .profile import solve_ground_state

    if cfg.slope and len(cfg.epsilons) < 3 and len(cfg.t_over_T0) < 3:
        raise ConfigError("a slope fit needs a sweep of at least three values")
    sc = _config(cfg)
    p = solve_ground_state(cfg.gamma, cfg.nodes)
    cache = ModalCache.build(p, cfg.nodes)
    ts = [f * sc.T0() for f in cfg.t_over_T0]
    rows = residual_sweep(sc, p, cfg.epsilons, ts, cache)
    write_csv(out / "residuals.csv", ["epsilon", "t", "j", "supE1", "massE1", "supE2"], rows)
    summary: dict = {"T0": sc.T0(), "K": sc.cutoff_K()}
    rel_mass = float(np.max(np.abs(rows[:, 4]) / rows[:, 3]))
    summary["max_relative_massE1"] = rel_mass
    ok = rel_mass <= 1e-8
    if cfg.slope:
        slopes = {}
        for j in range(3):
            if len(cfg.epsilons) >= 3:
                for s in ts:
                    sel = (rows[:, 2] == j) & (rows[:, 1] == s)
                    f = fit_slope(rows[sel, 0], rows[sel, 3])
                    slopes[f"supE1_eps_j{j}_t{s:.6g}"] = {"slope": f.slope, "stderr": f.stderr}
            if len(ts) >= 3:
                for e in cfg.epsilons:
                    sel = (rows[:, 2] == j) & (rows[:, 0] == e)
                    f = fit_slope(rows[sel, 1], rows[sel, 3])
                    slopes[f"supE1_t_j{j}_eps{e:.6g}"] = {"slope": f.slope, "stderr": f.stderr}
        if len(cfg.epsilons) >= 3:
            for s in ts:
                sel = (rows[:, 2] == 0) & (rows[:, 1] == s)
                f = fit_slope(rows[sel, 0], rows[sel, 5])
                slopes[f"supE2_eps_t{s:.6g}"] = {"slope": f.slope, "stderr": f.stderr}
        summary["slopes"] = slopes
    summary["pass"] = bool(ok)
    return summary


def _vortex_profile(name: str, gamma: float, nodes: int):
    if name == "bump":
        return eu.BumpProfile()
    if name == "gaussian":
        return eu.GaussianProfile()
    from .profile import solve_ground_state

    return solve_ground_state(gamma, nodes)


def cmd_simulate(cfg: RunConfig, out: Path, args) -> dict:
    sc = _config(cfg)
    prof = _vortex_profile(cfg.vortex_profile, cfg.gamma, cfg.nodes)
    eps = cfg.eps_over_L13 * sc.L0[2]
    t0 = sc.T0() if cfg.t_start is None else cfg.t_start * sc.tau
    horizon = cfg.sim_horizon * sc.tau
    start, dt, gamma = None, cfg.dt, None
    if cfg.resume:
        start, meta = eu.read_checkpoint(cfg.resume, args.threads)
        dt = meta.get("dt", dt) if dt is None else dt
        gamma = meta.get("gamma")
        box = start.box
    else:
        box = cfg.box if cfg.box is not None else cfg.box_factor * float(np.max(sc.lengths(t0 + horizon)))
    run = eu.run_and_track(sc, prof, eps, horizon, cfg.n, box, dt, samples=cfg.samples, threads=args.threads,
                           t0=t0, start=start, checkpoint=out / "checkpoint", gamma=gamma,
                           cells=cfg.min_cells, box_factor=cfg.box_factor)
    write_csv(out / "diagnostics.csv", ["t", "j", "circ", "cx", "cy", "dev", "support_radius",
                                        "mass_outside_3eps"], run.table())
    return {"epsilon": eps, "n": run.final.n, "box": run.final.box, "dt": run.dt, "steps": run.steps,
            "t_end": run.final.t, "max_dev": run.max_dev(), "max_dev_over_eps": run.max_dev() / eps,
            "max_mass_outside_3eps": run.max_outside(), "conservation": run.conservation,
            "pass": bool(run.max_dev() < 0.5 * eps and run.max_outside() < 1e-6)}


def cmd_accept(cfg: RunConfig, out: Path, args) -> dict:
    from .acceptance import run_all

    checks = run_all(args.criteria, echo=print)
    return {"checks": [c.__dict__ for c in checks], "pass": all(c.passed for c in checks)}


COMMANDS = {
    "spiral": cmd_spiral, "linearize": cmd_linearize, "profile": cmd_profile, "modal": cmd_modal,
    "approx": cmd_approx, "simulate": cmd_simulate, "accept": cmd_accept,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spiralvortex", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, default=None, help="JSON run configuration")
        sp.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--seed", type=int, default=0)
        if name == "accept":
            sp.add_argument("--criteria", type=int, nargs="*", default=None, help="subset of criteria 1-7")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed < 0 or args.seed >= 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = RunConfig.load(args.config)
    except (ConfigError, OSError, TypeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    (out / "failure.json").unlink(missing_ok=True)
    try:
        summary = COMMANDS[args.command](cfg, out, args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (CheckFailed, ConfigurationError, eu.ResolutionError, eu.CFLError, eu.BlobLostError) as e:
        write_json(out / "failure.json", {"command": args.command, "error": type(e).__name__, "message": str(e)})
        print(f"{args.command} failed: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAIL
    summary["config"] = cfg.to_dict()
    summary["seed"] = args.seed
    summary["threads"] = args.threads
    write_json(out / "summary.json", summary)
    return 0 if summary.get("pass", True) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
