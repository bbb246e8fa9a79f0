"""Dispersion of the mass-in-mass chain and the resonator frequency.

Prints the two branches at a few wavenumbers, the frequency pair
(Omega_mu, omega_mu) for a handful of mass ratios, and the antiresonant
masses where sin(Omega_mu / 2) vanishes.
"""

import numpy as np

from mimlattice.dispersion import (
    LatticeParams,
    Omega_mu,
    admissible_mass,
    antiresonance_mass,
    in_admissible_set,
    lambda_pm,
    solve_omega_mu,
)

p = LatticeParams(c=2.0, kappa=1.0, mu=1e-2)

# acoustic branch stays below kappa (1 + mu), optical branch above
K = np.linspace(0, np.pi, 5)
lm, lp = lambda_pm(K, p)
for k, a, b in zip(K, lm, lp):
    print(f"K = {k:5.3f}   lambda- = {a:9.6f}   lambda+ = {b:9.6f}")

print()
for mu in (1e-2, 3e-3, 1e-3, 3e-4):
    q = p.with_mu(mu)
    W, w = Omega_mu(q), solve_omega_mu(q)
    tag = "admissible" if in_admissible_set(q) else "near antiresonance"
    print(f"mu = {mu:7.1e}   Omega = {W:9.4f}   omega - Omega = {w - W:.3e}   ({tag})")

print()
for n in (1, 2, 3):
    print(f"n = {n}: antiresonant mu = {antiresonance_mass(n, p):.7f}, "
          f"nearby admissible mu = {admissible_mass(n, p):.7f}")
