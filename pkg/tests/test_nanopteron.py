import math

import numpy as np
import pytest
from scipy.integrate import quad

from mimlattice.dispersion import LatticeParams, admissible_mass, antiresonance_mass, in_admissible_set, kernel_scalars
from mimlattice.io import fit_loglog
from mimlattice.monatomic import solve_sigma
from mimlattice.nanopteron import (
    InadmissibleMassError,
    NanopteronConfig,
    NanopteronState,
    amplitude_sweep,
    apply_L_mu,
    build_chi,
    build_context,
    compute_terms,
    h_terms,
    iota,
    iterate,
    l_terms,
    nanopteron_domain,
    op_A,
    op_B,
    op_B_norm,
    project,
    solve_nanopteron,
)
from mimlattice.spectral import Parity, TrigSeries, apply_delta, fine_grid, multiply_samples


def random_odd(rng, dom, decay=0.01):
    c = rng.standard_normal(dom.n_half + 1) * np.exp(-decay * np.arange(dom.n_half + 1))
    return TrigSeries(dom, Parity.ODD, c)


# -- solvability functional ------------------------------------------------


def test_iota_of_resonant_sine(nano_ctx13):
    dom = nano_ctx13.wave.domain
    g = TrigSeries.mode(dom, dom.resonant_index, Parity.ODD)
    assert iota(g, nano_ctx13.ops) == pytest.approx(dom.half_length, rel=1e-15)


def test_iota_ignores_other_modes(nano_ctx13, rng):
    dom = nano_ctx13.wave.domain
    g = random_odd(rng, dom)
    c = np.array(g.coeffs)
    c[dom.resonant_index] = 0.0
    assert iota(g.with_coeffs(c), nano_ctx13.ops) == 0.0


def test_iota_matches_quadrature(nano_ctx13):
    dom = nano_ctx13.wave.domain
    Om = nano_ctx13.scal.Omega_mu
    f = lambda x: np.tanh(x) / np.cosh(x)
    g = TrigSeries.from_function(dom, f, Parity.ODD)
    L = dom.half_length
    exact, _ = quad(lambda x: f(x) * math.sin(Om * x), -L, L, limit=2000)
    assert iota(g, nano_ctx13.ops) == pytest.approx(exact, abs=1e-8)


def test_iota_needs_matched_domain(wave13, nano_ctx13):
    with pytest.raises(ValueError):
        iota(TrigSeries.zeros(wave13.domain, Parity.ODD), nano_ctx13.ops)


# -- chi -------------------------------------------------------------------


def test_chi_odd_and_admissible(nano_ctx13, params13):
    # delta of the even product sigma cos(Omega x) is odd, as iota requires
    ops = nano_ctx13.ops
    assert ops.chi.parity is Parity.ODD
    assert ops.chi.odd_part_energy() < 1e-12 * ops.chi.l2_norm() ** 2
    assert abs(ops.iota_chi) > ops.c_chi * params13.mu**2


def test_chi_projection_identity(nano_ctx13, params13):
    # moving delta onto sin(Omega x) gives 4 mu^2 upsilon sin(Omega/2) int sigma cos^2(Omega x)
    ctx = nano_ctx13
    s, Om = ctx.scal, ctx.scal.Omega_mu
    xf = fine_grid(ctx.wave.domain)
    h = xf[1] - xf[0]
    integral = h * np.sum(ctx.wave.sigma.samples_on(len(xf)) * np.cos(Om * xf) ** 2)
    expect = 4 * params13.mu**2 * s.upsilon_mu * math.sin(Om / 2) * integral
    assert ctx.ops.iota_chi == pytest.approx(expect, rel=1e-10)


def test_chi_vanishes_at_antiresonance():
    p = LatticeParams(1.3, 1.0, 0.0)
    mu_n = antiresonance_mass(2, p)
    assert math.sin(LatticeParams(1.3, 1.0, mu_n).Omega / 2) ** 2 < 1e-24
    with pytest.raises(InadmissibleMassError):
        build_context(LatticeParams(1.3, 1.0, mu_n))


def test_build_chi_rejects_small_iota(nano_ctx13, params13):
    ctx = nano_ctx13
    with pytest.raises(InadmissibleMassError):
        build_chi(params13, ctx.wave, ctx.scal, c_chi=1e6)


# -- A and B ---------------------------------------------------------------


def test_op_A_basics(nano_ctx13, rng):
    ops = nano_ctx13.ops
    dom = nano_ctx13.wave.domain
    assert op_A(ops.chi, ops) == pytest.approx(1.0, rel=1e-15)
    f, g = random_odd(rng, dom), random_odd(rng, dom)
    assert op_A(2.0 * f - 3.0 * g, ops) == pytest.approx(2 * op_A(f, ops) - 3 * op_A(g, ops), rel=1e-12)
    c = np.array(f.coeffs)
    c[dom.resonant_index] = 0.0
    assert op_A(f.with_coeffs(c), ops) == 0.0


def test_projection_kills_resonant_mode(nano_ctx13, rng):
    g = random_odd(rng, nano_ctx13.wave.domain)
    assert iota(project(g, nano_ctx13.ops), nano_ctx13.ops) == 0.0


def test_reconstruction_identity(nano_ctx13):
    ops = nano_ctx13.ops
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        g = random_odd(rng, nano_ctx13.wave.domain)
        back = apply_L_mu(op_B(g, ops), ops) + op_A(g, ops) * ops.chi
        worst = max(worst, np.linalg.norm((back - g).coeffs) / np.linalg.norm(g.coeffs))
    assert worst < 1e-9


def test_op_B_zero(nano_ctx13):
    z = TrigSeries.zeros(nano_ctx13.wave.domain, Parity.ODD)
    assert np.max(np.abs(op_B(z, nano_ctx13.ops).coeffs)) == 0.0


@pytest.fixture(scope="module")
def contexts12():
    mus = [1e-2, 3e-3, 1e-3]
    return mus, [build_context(LatticeParams(1.2, 1.0, m)) for m in mus]


def test_op_B_norm_growth(contexts12):
    mus, ctxs = contexts12
    fit = fit_loglog(mus, [op_B_norm(c.ops) for c in ctxs])
    assert fit.within(-0.5, 0.15)


# -- term bundle -----------------------------------------------------------


def test_terms_at_zero_state(nano_ctx13, params13):
    st = NanopteronState.zero(nano_ctx13.wave.domain)
    terms = compute_terms(st, nano_ctx13)
    for name, t in terms.items():
        want = Parity.EVEN if name.startswith("h") else Parity.ODD
        assert t.parity is want
        if name != "l1":
            assert np.max(np.abs(t.coeffs)) == 0.0, name
    # l1 is the second-equation defect of the refined core
    assert terms["l1"].sup_norm() == nano_ctx13.refined.e2_residual
    assert terms["l1"].sup_norm() <= 50 * params13.mu**2


def test_l1_scales_like_mu_squared(contexts12):
    mus, ctxs = contexts12
    fit = fit_loglog(mus, [c.l1.sup_norm() for c in ctxs])
    assert fit.within(2.0, 0.15)


def test_l6_scaling():
    # ||l6|| / |a| = C(Omega) mu^{7/2}; the prefactor carries |sin(Omega/2)|^3 from
    # the frequency shift and the half-step difference, so it is divided out
    c = 1.2
    mus = [m for m in np.geomspace(1e-3, 1e-2, 12) if in_admissible_set(LatticeParams(c, 1.0, m))]
    vals, pref = [], []
    for m in mus:
        p = LatticeParams(c, 1.0, m)
        dom = nanopteron_domain(p)
        w = solve_sigma(c, dom)
        sc = kernel_scalars(p)
        xf = fine_grid(dom)
        diff = np.cos(sc.omega_mu * xf) - np.cos(sc.Omega_mu * xf)
        l6 = (2 * m**2 * sc.upsilon_mu) * apply_delta(multiply_samples(w.sigma, diff, Parity.EVEN))
        vals.append(l6.sup_norm())
        pref.append(abs(math.sin(sc.Omega_mu / 2)) ** 3)
    assert len(mus) >= 6
    fit = fit_loglog(mus, np.array(vals) / np.array(pref))
    assert fit.within(3.5, 0.2)
    ratio = np.array(vals) / np.array(mus) ** 3.5
    assert ratio.max() < 10.0


def test_l6_is_linear_in_a(nano_ctx13):
    dom = nano_ctx13.wave.domain
    st = NanopteronState(TrigSeries.zeros(dom, Parity.EVEN), TrigSeries.zeros(dom, Parity.ODD), 1e-3)
    l6 = l_terms(st, nano_ctx13)["l6"]
    np.testing.assert_allclose(l6.coeffs, 1e-3 * nano_ctx13.l6_unit.coeffs, rtol=0, atol=1e-30)


def test_h4_is_quadratic(nano_ctx13, rng):
    dom = nano_ctx13.wave.domain
    e1 = TrigSeries.from_function(dom, lambda x: 1e-3 * np.exp(-(x**2)), Parity.EVEN)
    z2 = TrigSeries.zeros(dom, Parity.ODD)
    h = h_terms(NanopteronState(e1, z2, 0.0), nano_ctx13, z2)["h4"]
    h2 = h_terms(NanopteronState(2.0 * e1, z2, 0.0), nano_ctx13, z2)["h4"]
    assert h2.sup_norm() == pytest.approx(4 * h.sup_norm(), rel=1e-13)


# -- iteration -------------------------------------------------------------


def test_sweeps_keep_parity_and_mean(nano_ctx13):
    st = NanopteronState.zero(nano_ctx13.wave.domain)
    for _ in range(4):
        terms = compute_terms(st, nano_ctx13)
        hsum = sum((t for k, t in terms.items() if k.startswith("h")), TrigSeries.zeros(st.eta1.domain, Parity.EVEN))
        assert hsum.mean == 0.0
        st = iterate(st, nano_ctx13)
        assert st.eta1.parity is Parity.EVEN and st.eta2.parity is Parity.ODD


def test_fixed_point_certificate(nano13, nano_ctx13):
    again = iterate(nano13.state, nano_ctx13)
    assert again.last_delta < 1e-12


def test_contraction(nano13):
    r = nano13.delta_ratios()
    assert np.all(r[2:] < 0.5)


def test_jacobi_agrees(params13, nano_ctx13, nano13):
    from dataclasses import replace

    nano_ctx13.cfg = replace(nano_ctx13.cfg, jacobi=True)
    try:
        sol = solve_nanopteron(params13, nano_ctx13.cfg, ctx=nano_ctx13)
    finally:
        nano_ctx13.cfg = replace(nano_ctx13.cfg, jacobi=False)
    assert sol.status == "converged"
    assert abs(sol.state.a - nano13.state.a) < 1e-15
    assert (sol.state.eta1 - nano13.state.eta1).sup_norm() < 1e-12


# -- solutions -------------------------------------------------------------


def test_solution_residual(nano13):
    assert nano13.status == "converged"
    assert nano13.full_residual < 1e-8
    r1, r2 = nano13.residual_components
    assert max(r1, r2) == nano13.full_residual


def test_profiles_are_shifted(nano13):
    x = np.linspace(-5, 5, 11)
    s1 = nano13.refined.varsigma(nano13.wave)[0] + nano13.state.eta1
    np.testing.assert_allclose(nano13.p1.localized_part(x), s1(x + 0.5), atol=1e-14)
    assert nano13.p2.shift == 0.0


def test_profiles_satisfy_lattice_equations(nano13, params13):
    # independent check of the unshifted first equation on the bond profile
    p = params13
    x = np.linspace(-20, 20, 81)
    R, r = nano13.p1, nano13.p2
    V = lambda y: y + y**2
    g1 = p.c**2 * R(x, 2) - (V(R(x + 1)) - 2 * V(R(x)) + V(R(x - 1))) + p.kappa * (r(x + 1) - r(x))
    g2 = p.c**2 * p.mu * r(x, 2) + p.kappa * (1 + p.mu) * r(x) - p.mu * (V(R(x)) - V(R(x - 1)))
    assert np.max(np.abs(g1)) < 1e-8
    assert np.max(np.abs(g2)) < 1e-8


def test_window_doubling(nano13, params13):
    big = solve_nanopteron(params13, NanopteronConfig(min_half_length=80.0, modes=4096))
    assert big.state.a == pytest.approx(nano13.state.a, rel=1e-4)
    x = np.linspace(-30, 30, 301)
    assert np.max(np.abs(big.p1(x) - nano13.p1(x))) < 1e-12
    assert np.max(np.abs(big.p2(x) - nano13.p2(x))) < 1e-12


def test_inadmissible_refused_at_boundary():
    p = LatticeParams(1.3, 1.0, 0.0)
    for n in (1, 2):
        with pytest.raises(InadmissibleMassError):
            solve_nanopteron(p.with_mu(antiresonance_mass(n, p)))
    assert in_admissible_set(p.with_mu(admissible_mass(1, p)))


def test_amplitude_sweep_rows(tmp_path):
    template = LatticeParams(1.3, 1.0, 1e-2)
    mu_n = antiresonance_mass(3, template)
    rows = amplitude_sweep([3e-3, mu_n], template, path=tmp_path / "s.csv")
    assert rows[0]["status"] == "converged"
    assert rows[1]["status"] == "inadmissible"
    assert (tmp_path / "s.csv").read_text().count("\n") == 3
    assert abs(rows[0]["iota_chi"]) > 0


def test_chi_lower_bound_across_sweep(contexts12):
    mus, ctxs = contexts12
    for m, c in zip(mus, ctxs):
        q = abs(c.ops.iota_chi) / m**2
        assert c.ops.c_chi < q < 100.0
