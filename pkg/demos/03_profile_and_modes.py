"""
The vortex profile and its linearized operator
==============================================

The core profile is the positive ground state of ``Delta u + u^gamma = 0``
rescaled to vanish on the unit circle. Its linearization has a kernel spanned
by the translations and nothing else at the bottom of the spectrum.
"""

# %%
import numpy as np

from spiralvortex.modal import far_field_exponent, homogeneous_solution, rho_l, weighted_spectrum
from spiralvortex.profile import solve_ground_state

p = solve_ground_state(19.0)
print(f"r0 = {p.r0:.4f}, nu(0) = {p.nu0:.5f}, M = {p.mass:.6f}")
print("mass by quadrature:", p.mass_quadrature())
print("core radius 1/r0 =", p.core)

# %%
# Radial samples of the profile, the stream function and the vorticity.
r = np.array([0.0, 0.5 * p.core, p.core, 0.05, 0.5, 1.0, 2.0])
for ri, g, u in zip(r, p.Gamma(r), p.U(r)):
    print(f"r = {ri:8.5f}  Gamma = {g: .6f}  U = {u:.6e}")

# %%
# Homogeneous solutions grow like ``r^k`` outside the core.
for k in (2, 3, 4):
    print(k, far_field_exponent(homogeneous_solution(p, k)))

# %%
# The mode solutions feeding the first correction layer.
for l in (2, 3, 4):
    s = rho_l(p, l)
    print(f"rho_{l}: P(0) = {s.P(np.zeros(1))[0]: .6e}")

# %%
# Lowest weighted eigenvalues per angular mode: 0 (constants), 1 (translations),
# and a gap above.
sp = weighted_spectrum(p, modes=(0, 1, 2, 3), nev=3)
for k, ev in sp.eigenvalues.items():
    print(k, np.round(ev, 6))
print("next eigenvalue above the cluster:", sp.next_above_cluster())
