"""Launch a computed nanopteron on a finite chain and watch it travel.

Solving for the profiles and integrating both take a few seconds.
"""

from mimlattice.dispersion import LatticeParams
from mimlattice.nanopteron import solve_nanopteron
from mimlattice.simulation import SimConfig, init_from_profiles, run

p = LatticeParams(c=1.3, kappa=1.0, mu=3e-3)
sol = solve_nanopteron(p)
cfg = SimConfig(n_beads=4000, t_final=50 / p.c, record_every=1000)
state = init_from_profiles(sol.p1, sol.p2, p, cfg)
res = run(state, p, cfg, sol.p1, sol.p2)

for t, e in zip(res.times, res.shape_error):
    print(f"t = {t:7.3f}   shape error {e:.2e}")
for k, v in res.summary(p.c).items():
    print(f"{k:>18}: {v}")
