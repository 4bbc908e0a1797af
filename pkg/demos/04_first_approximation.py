"""
The first approximation and its error
=====================================

Around each vortex the leading profile is corrected by two layers of modes
2-4 and an outer multipole field. The remaining inner error scales like
``eps^5 / t^(5/2)`` and carries no mass.
"""

# %%
from spiralvortex.approximation import ModalCache, assemble_first_approximation
from spiralvortex.io import fit_slope
from spiralvortex.pointvortex import synthesize_config
from spiralvortex.profile import solve_ground_state

cfg = synthesize_config([1.0, 1.0, -0.5])
p = solve_ground_state()
cache = ModalCache.build(p)  # the radial solves, shared by every (eps, t)
T0 = cfg.T0()
print(f"T0 = {T0:.4f} = {T0 / cfg.tau:.1f} tau, K = {cfg.cutoff_K()}")

# %%
# Sweep eps at fixed time.
eps = [0.1, 0.05, 0.025]
fields = [assemble_first_approximation(cfg, p, e, 2 * T0, cache=cache) for e in eps]
for j in range(3):
    res = [fa.residual_E1(j) for fa in fields]
    f = fit_slope(eps, [r.sup for r in res])
    print(f"vortex {j}: slope {f.slope:.3f} +- {f.stderr:.1e}, mass/sup {max(abs(r.mass) / r.sup for r in res):.1e}")

# %%
# Sweep time at fixed eps.
ts = [2 * T0, 4 * T0, 8 * T0]
fields_t = [assemble_first_approximation(cfg, p, 0.05, s, cache=cache) for s in ts]
print("time slope:", fit_slope(ts, [fa.residual_E1(0).sup for fa in fields_t]).slope)

# %%
# The cutoff error lives on the annuli and is much smaller still.
print("outer error slope:", fit_slope(eps, [fa.residual_E2().sup for fa in fields]).slope)
