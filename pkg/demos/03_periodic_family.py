"""Small-amplitude periodic traveling waves bifurcating from the resonator mode."""

from mimlattice.dispersion import LatticeParams, kernel_scalars
from mimlattice.periodic import solve_periodic

p = LatticeParams(c=2.0, kappa=1.0, mu=1e-2)
s = kernel_scalars(p)
print(f"omega_mu = {s.omega_mu:.10f}")
for a in (0.0, 1e-3, 1e-2, 3e-2):
    pt = solve_periodic(a, p)
    print(f"a = {a:6.0e}   omega(a) - omega_mu = {pt.omega - s.omega_mu:+.3e}   "
          f"|psi| = {pt.psi.norm():.3e}   residual {pt.residual:.1e}")
