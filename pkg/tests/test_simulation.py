import math

import numpy as np
import pytest

from mimlattice.dispersion import LatticeParams
from mimlattice.monatomic import solve_sigma
from mimlattice.nanopteron import ProfileFunction
from mimlattice.periodic import solve_periodic
from mimlattice.simulation import (
    BoundaryContaminationError,
    ChainState,
    SimConfig,
    accelerations,
    energy,
    energy_density,
    init_from_profiles,
    measure_shape_error,
    momentum,
    relative_displacements,
    run,
    step_verlet,
)
from mimlattice.spectral import DomainSpec, Parity, TrigSeries

P = LatticeParams(1.3, 1.0, 3e-3)


def random_state(rng, n=12, scale=0.1):
    return ChainState(*(scale * rng.standard_normal(n) for _ in range(4)))


def bump(x, d=0):
    # smooth even test profile
    g = np.exp(-0.1 * np.asarray(x, float) ** 2)
    x = np.asarray(x, float)
    if d == 0:
        return 0.1 * g
    if d == 1:
        return 0.1 * (-0.2 * x) * g
    return 0.1 * (0.04 * x**2 - 0.2) * g


# -- forces and energy -----------------------------------------------------


def test_uniform_stretch_is_equilibrium():
    # interior forces telescope; the free end beads feel the unbalanced bond
    d = 0.3
    U = d * np.arange(10.0)
    s = ChainState(U, U.copy(), np.zeros(10), np.zeros(10))
    a, b = accelerations(s, P)
    assert np.max(np.abs(a[1:-1])) < 1e-14 and np.max(np.abs(b)) == 0.0
    assert a[0] == pytest.approx(d + d * d) and a[-1] == pytest.approx(-(d + d * d))
    a, b = accelerations(ChainState.rest(10), P)
    assert np.max(np.abs(a)) == 0.0


def test_single_bond_newton_third_law():
    U = np.zeros(6)
    U[3:] = 0.2
    s = ChainState(U, U.copy(), np.zeros(6), np.zeros(6))
    a, b = accelerations(s, P)
    f = 0.2 + 0.04
    np.testing.assert_allclose(a, [0, 0, f, -f, 0, 0], atol=1e-15)
    rng = np.random.default_rng(1)
    s = random_state(rng)
    a, b = accelerations(s, P)
    assert abs(np.sum(a) + P.mu * np.sum(b)) < 1e-14


def test_forces_are_energy_gradient(rng):
    s = random_state(rng)
    a, b = accelerations(s, P)
    h = 1e-6
    for j in range(s.n_beads):
        e = np.zeros(s.n_beads)
        e[j] = h
        dU = (energy(ChainState(s.U + e, s.u, s.Udot, s.udot), P) - energy(ChainState(s.U - e, s.u, s.Udot, s.udot), P)) / (2 * h)
        du = (energy(ChainState(s.U, s.u + e, s.Udot, s.udot), P) - energy(ChainState(s.U, s.u - e, s.Udot, s.udot), P)) / (2 * h)
        assert a[j] == pytest.approx(-dU, abs=1e-8)
        assert P.mu * b[j] == pytest.approx(-du, abs=1e-8)


def test_energy_basics():
    assert energy(ChainState.rest(5), P) == 0.0
    U = np.zeros(5)
    u = np.zeros(5)
    u[2] = -0.3
    s = ChainState(U, u, np.zeros(5), np.zeros(5))
    assert energy(s, P) == pytest.approx(0.5 * P.kappa * 0.09, rel=1e-15)
    assert np.sum(energy_density(random_state(np.random.default_rng(2)), P)) == pytest.approx(
        energy(random_state(np.random.default_rng(2)), P), rel=1e-13
    )


def test_too_short_chain():
    with pytest.raises(ValueError):
        accelerations(ChainState.rest(2), P)


# -- integrator ------------------------------------------------------------


def test_equilibrium_is_fixed():
    s = ChainState.rest(8)
    for _ in range(10):
        s = step_verlet(s, P, 0.01)
    assert np.max(np.abs(s.U)) == 0.0


def test_time_reversible(rng):
    s0 = random_state(rng, scale=0.05)
    dt = 0.05 / P.Omega
    s = s0
    for _ in range(50):
        s = step_verlet(s, P, dt)
    for _ in range(50):
        s = step_verlet(s, P, -dt)
    for a, b in ((s.U, s0.U), (s.u, s0.u), (s.Udot, s0.Udot), (s.udot, s0.udot)):
        assert np.max(np.abs(a - b)) < 1e-12


def test_resonator_frequency():
    # identical bead-resonator pairs never stretch the bonds; r = U - u obeys
    # r'' = -kappa (1 + 1/mu) r
    p = LatticeParams(1.3, 1.0, 0.1)
    w = math.sqrt(p.kappa * (1 + p.mu) / p.mu)
    T = 2.0
    errs = []
    for dt in (0.01, 0.005):
        s = ChainState(np.zeros(3), np.full(3, -0.1), np.zeros(3), np.zeros(3))
        for _ in range(int(round(T / dt))):
            s = step_verlet(s, p, dt)
        errs.append(abs((s.U - s.u)[0] - 0.1 * math.cos(w * T)))
    assert errs[1] < 1e-3
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_long_run_conservation():
    n = 200
    cfg = SimConfig(n_beads=n, t_final=0.0)
    s0 = init_from_profiles(bump, None, P, cfg, x0=100.0, support=30.0)
    dt = 0.05 / P.Omega
    steps = 100_000
    res = run(s0, P, SimConfig(n_beads=n, dt=dt, t_final=steps * dt, record_every=10_000))
    assert res.steps == steps
    assert res.energy_drift < 1e-6
    # 1e-10 per 1e4 steps
    assert res.momentum_drift < 1e-10 * steps / 1e4


def test_energy_error_is_second_order():
    n = 200
    s0 = init_from_profiles(bump, None, P, SimConfig(n_beads=n, t_final=0.0), x0=100.0, support=30.0)
    drift = []
    for f in (0.099, 0.0495):
        dt = f / P.Omega
        drift.append(run(s0, P, SimConfig(n_beads=n, dt=dt, t_final=20.0, record_every=50)).energy_drift)
    assert drift[0] / drift[1] == pytest.approx(4.0, rel=0.15)


def test_dt_guard():
    s = ChainState.rest(10)
    with pytest.raises(ValueError):
        run(s, P, SimConfig(n_beads=10, dt=0.2 / P.Omega, t_final=1.0))


# -- initialization and shape ---------------------------------------------


def test_zero_profiles_give_rest():
    zero = lambda x, d=0: np.zeros_like(np.asarray(x, float))
    s = init_from_profiles(zero, zero, P, SimConfig(n_beads=300, t_final=10))
    assert energy(s, P) == 0.0


def test_reconstruction_and_localization():
    cfg = SimConfig(n_beads=300, t_final=10)
    s = init_from_profiles(bump, bump, P, cfg)
    R, r = relative_displacements(s)
    j = np.arange(300.0)
    np.testing.assert_allclose(R, bump(j[:-1] - s.origin), atol=1e-12)
    np.testing.assert_allclose(r, bump(j - s.origin), atol=1e-12)
    e = energy_density(s, P)
    inside = np.abs(j - s.origin) <= 20
    assert e[inside].sum() >= 0.99 * e.sum()
    # the medium ahead of the wave is at rest
    assert s.U[-1] == 0.0 and s.Udot[-1] == 0.0


def test_insufficient_length():
    with pytest.raises(ValueError):
        init_from_profiles(bump, bump, P, SimConfig(n_beads=100, t_final=50))


def test_shape_error_at_start():
    s = init_from_profiles(bump, bump, P, SimConfig(n_beads=300, t_final=10))
    err, shift = measure_shape_error(s, bump, bump, P.c)
    assert err < 1e-12 and shift == 0.0


def test_boundary_contamination():
    s = init_from_profiles(bump, None, P, SimConfig(n_beads=150, t_final=0.0), x0=75.0, support=20.0)
    with pytest.raises(BoundaryContaminationError):
        run(s, P, SimConfig(n_beads=150, t_final=80.0, record_every=500, coupled=False), p1=bump)


def test_monatomic_control():
    c = 1.3
    wave = solve_sigma(c, DomainSpec(40.0, 1024))
    p = LatticeParams(c, 1.0, 0.0)
    prof = ProfileFunction(wave.sigma, shift=0.0)
    cfg = SimConfig(n_beads=4000, t_final=50 / c, coupled=False, record_every=2000)
    s = init_from_profiles(prof, None, p, cfg)
    res = run(s, p, cfg, p1=prof)
    assert res.shape_error.max() < 1e-4
    assert abs(res.fitted_speed - c) / c < 1e-4
    assert res.energy_drift < 1e-6


def test_periodic_wave_frequency():
    p = LatticeParams(2.0, 1.0, 1e-2)
    pt = solve_periodic(1e-2, p)
    zero = TrigSeries.zeros(DomainSpec(10.0, 16), Parity.EVEN)
    R = ProfileFunction(zero, pt, pt.a, 0, shift=0.5)
    r = ProfileFunction(zero, pt, pt.a, 1)
    f_expect = p.c * pt.omega / (2 * np.pi)
    t_final = 20 / f_expect
    cfg = SimConfig(n_beads=400, t_final=t_final)
    s = init_from_profiles(R, r, p, cfg, x0=200.0, support=0.0)
    mid = 200
    dt = cfg.resolved_dt(p)
    ts, ys = [0.0], [(s.U - s.u)[mid]]
    for i in range(int(round(t_final / dt))):
        s = step_verlet(s, p, dt)
        ts.append(s.t)
        ys.append((s.U - s.u)[mid])
    ts, ys = np.array(ts), np.array(ys)
    k = np.nonzero(np.sign(ys[:-1]) != np.sign(ys[1:]))[0]
    zc = ts[k] - ys[k] * (ts[k + 1] - ts[k]) / (ys[k + 1] - ys[k])
    f_meas = (len(zc) - 1) / (2 * (zc[-1] - zc[0]))
    assert f_meas == pytest.approx(f_expect, rel=5e-3)
