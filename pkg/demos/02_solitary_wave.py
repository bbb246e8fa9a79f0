"""The monatomic solitary wave and its refinement for small resonator mass."""

import numpy as np

from mimlattice.dispersion import LatticeParams
from mimlattice.monatomic import monatomic_residual, refine_limit, solve_sigma
from mimlattice.spectral import DomainSpec

c = 1.3
wave = solve_sigma(c, DomainSpec(40.0, 1024))
print(f"c = {c}: peak {wave.sigma.samples().max():.6f}, "
      f"residual {monatomic_residual(wave.sigma, c).sup_norm():.2e}")

x = np.array([0.0, 2.0, 5.0, 10.0])
for xi, v in zip(x, wave.sigma(x)):
    print(f"  sigma({xi:4.1f}) = {v:.6e}")

# second-component residual of the refined limit shrinks like mu^2
for mu in (1e-2, 3e-3, 1e-3):
    ref = refine_limit(wave, LatticeParams(c, 1.0, mu))
    print(f"mu = {mu:6.0e}: e1 residual {ref.e1_residual:.1e}, e2 residual {ref.e2_residual:.3e}")
