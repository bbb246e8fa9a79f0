"""Nanopteron traveling waves: localized core plus an exact periodic ripple.

The wave is written ``rho = varsigma + a phi^a + eta`` with ``varsigma`` the
refined core, ``a phi^a`` a periodic solution of amplitude ``a`` and ``eta``
a localized remainder.  Substituting gives

* ``H_c eta1 = h1 + h2 + h3 + h4 + h5`` (even), and
* ``L_mu eta2 + a chi = l1 + ... + l6`` (odd),

where ``L_mu`` has symbol ``-c^2 mu k^2 + kappa (1 + mu)``, which vanishes at
``Omega_mu``.  The second equation is solvable only if the right-hand side
has no ``sin(Omega_mu x)`` content; this fixes ``a``.  The three updates are
iterated to a fixed point.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .dispersion import (
    DispersionScalars,
    LatticeParams,
    check_validity,
    in_admissible_set,
    kernel_scalars,
)
from .monatomic import (
    MonatomicWave,
    RefinedLimit,
    refine_limit,
    second_component,
    solve_Hc,
    solve_sigma,
)
from .periodic import PeriodicFamilyPoint, lab_residual, solve_periodic
from .spectral import (
    DomainSpec,
    Parity,
    TrigSeries,
    apply_A,
    apply_delta,
    domain_for_frequency,
    fine_grid,
    multiply_samples,
)

__all__ = [
    "NanopteronConfig",
    "NanopteronState",
    "SolvabilityOps",
    "NanopteronContext",
    "NanopteronSolution",
    "ProfileFunction",
    "InadmissibleMassError",
    "NanopteronDivergenceError",
    "FrequencyCollisionError",
    "iota",
    "build_chi",
    "chi_identity_leading",
    "op_A",
    "op_B",
    "op_B_norm",
    "apply_L_mu",
    "compute_terms",
    "iterate",
    "build_context",
    "solve_nanopteron",
    "amplitude_sweep",
    "nanopteron_domain",
]


class InadmissibleMassError(ValueError):
    pass


class NanopteronDivergenceError(RuntimeError):
    pass


class FrequencyCollisionError(RuntimeError):
    pass


@dataclass(frozen=True)
class NanopteronConfig:
    """Numerical settings of a nanopteron solve.

    ``c_chi`` is the lower bound constant in ``|iota[chi]| > c_chi mu^2``;
    when ``None`` it defaults to one tenth of the smallest leading
    coefficient allowed on the admissible set.
    """

    min_half_length: float = 40.0
    modes: int = 2048
    tol: float = 1e-13
    max_sweeps: int = 60
    petviashvili_tol: float = 1e-11
    newton_tol: float = 1e-11
    periodic_tol: float = 1e-12
    K_trunc: int = 64
    a_cap: float = 0.05
    c_chi: float | None = None
    jacobi: bool = False
    floor: float = 1e-14

    # ``floor`` is relative: amplitudes below ``floor * L * ||sum l|| / |iota[chi]|``
    # cannot be told apart from roundoff in the solvability coefficient.


@dataclass(frozen=True)
class NanopteronState:
    eta1: TrigSeries
    eta2: TrigSeries
    a: float
    iter: int = 0
    last_delta: float = float("inf")

    def __post_init__(self):
        if self.eta1.parity is not Parity.EVEN or self.eta2.parity is not Parity.ODD:
            raise ValueError("eta1 must be even and eta2 odd")

    @classmethod
    def zero(cls, domain: DomainSpec) -> "NanopteronState":
        return cls(
            TrigSeries.zeros(domain, Parity.EVEN), TrigSeries.zeros(domain, Parity.ODD), 0.0
        )

    def distance(self, other: "NanopteronState") -> float:
        return max(
            (self.eta1 - other.eta1).sup_norm(),
            (self.eta2 - other.eta2).sup_norm(),
            abs(self.a - other.a),
        )


@dataclass(frozen=True)
class SolvabilityOps:
    chi: TrigSeries
    iota_chi: float
    resonant_index: int
    symbol: np.ndarray
    c_chi: float


def nanopteron_domain(
    p: LatticeParams, min_half_length: float = 40.0, modes: int = 2048
) -> DomainSpec:
    """Frequency-matched domain with ``N >= 4 n*`` raised to a power of two."""
    Om = p.Omega
    n_star = max(1, math.ceil(Om * min_half_length / math.pi - 1e-9))
    need = 1 << max(2, (4 * n_star - 1).bit_length())
    return domain_for_frequency(Om, min_half_length, max(modes, need))


# --------------------------------------------------------------------------
# solvability functional and the operators A_mu, B_mu


def iota(g: TrigSeries, ops_or_index) -> float:
    """``integral of g(x) sin(Omega x)`` over the period, i.e. ``L b_{n*}``."""
    if g.parity is not Parity.ODD:
        raise ValueError("iota acts on odd series")
    n = ops_or_index.resonant_index if isinstance(ops_or_index, SolvabilityOps) else ops_or_index
    if n is None or g.domain.resonant_index != n:
        raise ValueError("series domain is not matched to the resonant frequency")
    return float(g.domain.half_length * g.coeffs[n])


def chi_identity_leading(p: LatticeParams, wave: MonatomicWave, scal: DispersionScalars) -> float:
    """``mu^2 sin^2(Omega/2) alpha ||sigma||_L1``."""
    return p.mu**2 * math.sin(0.5 * scal.Omega_mu) ** 2 * scal.alpha_mu * wave.sigma.l1_norm()


def build_chi(
    p: LatticeParams,
    wave: MonatomicWave,
    scal: DispersionScalars,
    c_chi: float | None = None,
) -> SolvabilityOps:
    """``chi = -2 mu^2 upsilon delta[sigma cos(Omega x)]`` and ``iota[chi]``."""
    dom = wave.domain
    n = dom.resonant_index
    if n is None or dom.target_frequency != scal.Omega_mu:
        raise ValueError("domain does not carry Omega_mu as a grid mode")
    cos_om = np.cos(scal.Omega_mu * fine_grid(dom))
    prod = multiply_samples(wave.sigma, cos_om, Parity.EVEN)
    chi = (-2.0 * p.mu**2 * scal.upsilon_mu) * apply_delta(prod)
    ic = iota(chi, n)
    if c_chi is None:
        # |sin(Omega/2)| > 1/2 on the admissible set
        c_chi = 0.1 * 0.25 * scal.alpha_mu * wave.sigma.l1_norm()
    if not abs(ic) > c_chi * p.mu**2:
        raise InadmissibleMassError(
            f"|iota[chi]| = {abs(ic):.3g} <= {c_chi:.3g} mu^2; mu too close to an antiresonance"
        )
    k = dom.wavenumbers
    symbol = -(p.c**2) * p.mu * k**2 + p.kappa * (1.0 + p.mu)
    off = np.delete(np.abs(symbol[1:]), n - 1)
    scale = p.kappa * (1.0 + p.mu)
    if off.size and off.min() < 1e-12 * scale:
        raise FrequencyCollisionError("L_mu symbol nearly vanishes at a non-resonant mode")
    return SolvabilityOps(chi, ic, n, symbol, c_chi)


def op_A(g: TrigSeries, ops: SolvabilityOps) -> float:
    return iota(g, ops) / ops.iota_chi


def project(g: TrigSeries, ops: SolvabilityOps) -> TrigSeries:
    """``g - (iota[g] / iota[chi]) chi``; its resonant coefficient is exactly 0."""
    out = np.array((g - op_A(g, ops) * ops.chi).coeffs)
    out[ops.resonant_index] = 0.0
    return g.with_coeffs(out)


def op_B(g: TrigSeries, ops: SolvabilityOps, p: LatticeParams | None = None) -> TrigSeries:
    """Odd ``f`` with ``L_mu f = P g`` and no resonant component."""
    pg = project(g, ops)
    f = np.zeros_like(pg.coeffs)
    mask = np.ones(len(f), dtype=bool)
    mask[0] = False
    mask[ops.resonant_index] = False
    f[mask] = pg.coeffs[mask] / ops.symbol[mask]
    return pg.with_coeffs(f)


def apply_L_mu(f: TrigSeries, ops: SolvabilityOps) -> TrigSeries:
    return f.with_coeffs(ops.symbol * f.coeffs)


def op_B_norm(ops: SolvabilityOps) -> float:
    """Operator 2-norm of ``B_mu`` on sine coefficients (modes ``1..N/2``)."""
    n = len(ops.symbol)
    chi = ops.chi.coeffs[1:]
    L = ops.chi.domain.half_length
    # P = I - chi e_{n*}^T L / iota[chi], then divide by the symbol off n*
    P = np.eye(n - 1) - np.outer(chi, np.eye(n - 1)[ops.resonant_index - 1]) * (L / ops.iota_chi)
    sym = ops.symbol[1:]
    keep = np.arange(1, n) != ops.resonant_index
    inv = np.divide(1.0, sym, out=np.zeros_like(sym), where=keep)
    return float(np.linalg.norm(inv[:, None] * P, 2))


# --------------------------------------------------------------------------
# the term bundle


class ProfileFunction:
    """A profile ``localized(x + shift) + a * ripple(x + shift)`` with derivatives.

    ``localized`` is a :class:`TrigSeries` and ``ripple`` a periodic family
    point whose lab-frame component ``component`` is used.  The localized
    part is set to zero outside ``[-L, L]`` so that its periodic copies do
    not leak onto a long chain.
    """

    def __init__(self, localized, ripple=None, a=0.0, component=0, shift=0.0):
        self.localized = localized
        self.ripple = ripple
        self.a = float(a)
        self.component = component
        self.shift = float(shift)

    def localized_part(self, x, derivative: int = 0):
        y = np.asarray(x, dtype=float) + self.shift
        inside = np.abs(y) <= self.localized.domain.half_length
        out = np.zeros_like(y)
        out[inside] = self.localized(y[inside], derivative)
        return out

    def ripple_part(self, x, derivative: int = 0):
        x = np.asarray(x, dtype=float)
        if self.ripple is None or self.a == 0.0:
            return np.zeros_like(x)
        return self.ripple.lab_profile(x + self.shift, derivative, self.a)[self.component]

    def __call__(self, x, derivative: int = 0):
        return self.localized_part(x, derivative) + self.ripple_part(x, derivative)


@dataclass(eq=False)
class NanopteronContext:
    """Upstream objects shared by all sweeps of one solve."""

    p: LatticeParams
    wave: MonatomicWave
    refined: RefinedLimit
    scal: DispersionScalars
    ops: SolvabilityOps
    cfg: NanopteronConfig
    periodic: PeriodicFamilyPoint
    periodic0: PeriodicFamilyPoint
    l1: TrigSeries = field(init=False)
    varsigma1: TrigSeries = field(init=False)
    l6_unit: TrigSeries = field(init=False)
    periodic_solves: int = 0

    def __post_init__(self):
        p = self.p
        s1, s2 = self.refined.varsigma(self.wave)
        self.varsigma1 = s1
        self.l1 = -second_component(s1, s2, p)
        xf = fine_grid(self.wave.domain)
        diff = np.cos(self.scal.omega_mu * xf) - np.cos(self.scal.Omega_mu * xf)
        self.l6_unit = (2.0 * p.mu**2 * self.scal.upsilon_mu) * apply_delta(
            multiply_samples(self.wave.sigma, diff, Parity.EVEN)
        )

    def periodic_for(self, a: float) -> PeriodicFamilyPoint:
        """Periodic point at amplitude ``a``, re-solved only on relative change > 1e-3."""
        cur = self.periodic.a
        if a == cur or (cur != 0.0 and abs(a - cur) <= 1e-3 * abs(cur)):
            return self.periodic
        self.periodic = solve_periodic(
            a,
            self.p,
            tol=self.cfg.periodic_tol,
            K_trunc=self.cfg.K_trunc,
            a_cap=self.cfg.a_cap,
            scalars=self.scal,
        )
        self.periodic_solves += 1
        return self.periodic


def _phi1_fine(ctx: NanopteronContext, pt: PeriodicFamilyPoint) -> np.ndarray:
    return pt.lab_profile(fine_grid(ctx.wave.domain))[0]


def l_terms(state: NanopteronState, ctx: NanopteronContext) -> dict:
    p, a, eta1 = ctx.p, state.a, state.eta1
    pt = ctx.periodic_for(a)
    phi1 = _phi1_fine(ctx, pt)
    phi1_0 = _phi1_fine(ctx, ctx.periodic0)
    sig, zeta1 = ctx.wave.sigma, ctx.refined.zeta1
    terms = {"l1": ctx.l1}
    terms["l2"] = p.mu * apply_delta(eta1 + 2.0 * (ctx.varsigma1 * eta1) + eta1 * eta1)
    terms["l3"] = (2.0 * a * p.mu) * apply_delta(multiply_samples(eta1, phi1, Parity.EVEN))
    terms["l4"] = (2.0 * a * p.mu) * apply_delta(
        multiply_samples(sig, phi1 - phi1_0, Parity.EVEN)
    )
    terms["l5"] = (2.0 * a * p.mu**2) * apply_delta(multiply_samples(zeta1, phi1, Parity.EVEN))
    terms["l6"] = a * ctx.l6_unit
    return terms


def h_terms(state: NanopteronState, ctx: NanopteronContext, eta2_new: TrigSeries) -> dict:
    p, a, eta1 = ctx.p, state.a, state.eta1
    pt = ctx.periodic_for(a)
    phi1 = _phi1_fine(ctx, pt)
    return {
        "h1": (2.0 * p.mu) * apply_A(ctx.refined.zeta1 * eta1),
        "h2": (2.0 * a) * apply_A(multiply_samples(ctx.varsigma1, phi1, Parity.EVEN)),
        "h3": (2.0 * a) * apply_A(multiply_samples(eta1, phi1, Parity.EVEN)),
        "h4": apply_A(eta1 * eta1),
        "h5": -p.kappa * apply_delta(eta2_new),
    }


def _check_parities(terms: dict):
    for name, t in terms.items():
        want = Parity.EVEN if name.startswith("h") else Parity.ODD
        if t.parity is not want:
            raise AssertionError(f"term {name} has parity {t.parity.value}")


def compute_terms(state: NanopteronState, ctx: NanopteronContext) -> dict:
    """All ``h`` and ``l`` terms at the current state (``h5`` from the current ``eta2``)."""
    terms = l_terms(state, ctx)
    terms.update(h_terms(state, ctx, state.eta2))
    _check_parities(terms)
    return terms


def _sum(series: list) -> TrigSeries:
    out = series[0]
    for s in series[1:]:
        out = out + s
    return out


def iterate(state: NanopteronState, ctx: NanopteronContext) -> NanopteronState:
    """One sweep of the fixed-point map.

    Gauss-Seidel order (default): new ``eta2`` and ``a`` from the ``l``
    terms, then new ``eta1`` from ``h`` terms that already use them.  With
    ``ctx.cfg.jacobi`` all three updates use the old state.
    """
    ls = l_terms(state, ctx)
    _check_parities(ls)
    rhs2 = _sum(list(ls.values()))
    eta2 = op_B(rhs2, ctx.ops)
    a = op_A(rhs2, ctx.ops)
    if abs(a) > ctx.cfg.a_cap:
        raise NanopteronDivergenceError(f"amplitude {a:.3g} left the periodic family range")
    if ctx.cfg.jacobi:
        hs = h_terms(state, ctx, state.eta2)
    else:
        hs = h_terms(replace(state, a=a), ctx, eta2)
    _check_parities(hs)
    eta1 = solve_Hc(_sum(list(hs.values())), ctx.wave)
    new = NanopteronState(eta1, eta2, a, state.iter + 1)
    return replace(new, last_delta=new.distance(state))


# --------------------------------------------------------------------------
# driver


@dataclass(eq=False)
class NanopteronSolution:
    state: NanopteronState
    periodic: PeriodicFamilyPoint
    refined: RefinedLimit
    p1: ProfileFunction
    p2: ProfileFunction
    full_residual: float
    params: LatticeParams
    scalars: DispersionScalars
    ops: SolvabilityOps
    wave: MonatomicWave
    deltas: list
    status: str
    below_floor: bool
    residual_components: tuple = (float("nan"), float("nan"))

    @property
    def eta_norm(self) -> float:
        return max(self.state.eta1.sup_norm(), self.state.eta2.sup_norm())

    def delta_ratios(self) -> np.ndarray:
        d = np.asarray(self.deltas)
        ok = (d[:-1] > 0) & np.isfinite(d[:-1])
        return d[1:][ok] / d[:-1][ok]

    def metadata(self) -> dict:
        s = self.scalars
        return {
            "c": self.params.c,
            "kappa": self.params.kappa,
            "mu": self.params.mu,
            "Omega_mu": s.Omega_mu,
            "omega_mu": s.omega_mu,
            "abs_sin_half_Omega": abs(math.sin(0.5 * s.Omega_mu)),
            "iota_chi": self.ops.iota_chi,
            "a": self.state.a,
            "a_below_floor": self.below_floor,
            "eta_norm": self.eta_norm,
            "full_residual": self.full_residual,
            "sweeps": self.state.iter,
            "deltas": [float(d) for d in self.deltas],
            "half_length": self.wave.domain.half_length,
            "num_modes": self.wave.domain.num_modes,
            "resonant_index": self.ops.resonant_index,
            "status": self.status,
        }

    def table(self) -> dict:
        x = self.wave.domain.grid
        return {
            "x": x,
            "p1": self.p1(x),
            "p2": self.p2(x),
            "ripple1": self.p1.ripple_part(x),
            "ripple2": self.p2.ripple_part(x),
            "localized1": self.p1.localized_part(x),
            "localized2": self.p2.localized_part(x),
        }


def build_context(
    p: LatticeParams,
    cfg: NanopteronConfig = NanopteronConfig(),
    wave: MonatomicWave | None = None,
) -> NanopteronContext:
    """Solve every upstream problem on a frequency-matched domain.

    A precomputed ``wave`` is reused if it lives on that domain.
    """
    if not p.mu > 0:
        raise InadmissibleMassError("mu must be positive")
    if not in_admissible_set(p):
        raise InadmissibleMassError(
            f"|sin(Omega/2)| = {abs(math.sin(0.5 * p.Omega)):.4f} <= 1/2 for mu={p.mu:g}"
        )
    check_validity(p)
    dom = nanopteron_domain(p, cfg.min_half_length, cfg.modes)
    if wave is None:
        wave = solve_sigma(p.c, dom, tol=cfg.petviashvili_tol)
    elif not (wave.domain.same_as(dom) and wave.domain.resonant_index == dom.resonant_index):
        raise ValueError("supplied wave does not live on the frequency-matched domain")
    refined = refine_limit(wave, p, tol=cfg.newton_tol)
    scal = kernel_scalars(p)
    ops = build_chi(p, wave, scal, cfg.c_chi)
    pt0 = solve_periodic(0.0, p, tol=cfg.periodic_tol, K_trunc=cfg.K_trunc, scalars=scal)
    return NanopteronContext(p, wave, refined, scal, ops, cfg, pt0, pt0)


def full_residual(ctx: NanopteronContext, state: NanopteronState, x=None):
    """Sup norms of both traveling-wave equations at ``varsigma + a phi + eta``."""
    s1, s2 = ctx.refined.varsigma(ctx.wave)
    pt = ctx.periodic_for(state.a)
    r1 = ProfileFunction(s1 + state.eta1, pt, state.a, 0)
    r2 = ProfileFunction(s2 + state.eta2, pt, state.a, 1)
    if x is None:
        x = ctx.wave.domain.grid
    g1, g2 = lab_residual(r1, r2, np.asarray(x), ctx.p)
    return float(np.max(np.abs(g1))), float(np.max(np.abs(g2)))


def solve_nanopteron(
    p: LatticeParams,
    cfg: NanopteronConfig = NanopteronConfig(),
    ctx: NanopteronContext | None = None,
) -> NanopteronSolution:
    """Iterate from ``(eta, a) = (0, 0)`` to the fixed point and assemble profiles.

    The returned ``p1`` is the bond-stretch profile ``rho1(x + 1/2)`` and
    ``p2`` the resonator profile ``rho2(x)``.
    """
    if ctx is None:
        ctx = build_context(p, cfg)
    state = NanopteronState.zero(ctx.wave.domain)
    deltas = []
    growing = 0
    status = "max_sweeps"
    for _ in range(cfg.max_sweeps):
        new = iterate(state, ctx)
        deltas.append(new.last_delta)
        if len(deltas) > 1 and deltas[-2] > 0 and deltas[-1] >= deltas[-2]:
            growing += 1
        else:
            growing = 0
        state = new
        if growing >= 5:
            raise NanopteronDivergenceError(
                f"delta ratio >= 1 for 5 sweeps (last delta {deltas[-1]:.3g})"
            )
        if state.last_delta < cfg.tol:
            status = "converged"
            break
    pt = ctx.periodic_for(state.a)
    s1, s2 = ctx.refined.varsigma(ctx.wave)
    p1 = ProfileFunction(s1 + state.eta1, pt, state.a, 0, shift=0.5)
    p2 = ProfileFunction(s2 + state.eta2, pt, state.a, 1)
    res = full_residual(ctx, state)
    # roundoff level of a = iota[sum l] / iota[chi]
    l_scale = _sum(list(l_terms(state, ctx).values())).sup_norm()
    a_floor = cfg.floor * ctx.wave.domain.half_length * l_scale / abs(ctx.ops.iota_chi)
    below = abs(state.a) < a_floor
    return NanopteronSolution(
        state=state,
        periodic=pt,
        refined=ctx.refined,
        p1=p1,
        p2=p2,
        full_residual=max(res),
        params=p,
        scalars=ctx.scal,
        ops=ctx.ops,
        wave=ctx.wave,
        deltas=deltas,
        status=status,
        below_floor=bool(below),
        residual_components=res,
    )


SWEEP_COLUMNS = [
    "mu",
    "Omega_mu",
    "omega_mu",
    "abs_sin_half_Omega",
    "iota_chi",
    "a_mu",
    "eta_norm",
    "residual",
    "sweeps",
    "status",
]


def _sweep_row(mu: float, template: LatticeParams, cfg: NanopteronConfig) -> dict:
    p = template.with_mu(mu)
    row = {k: "" for k in SWEEP_COLUMNS}
    row["mu"] = mu
    row["Omega_mu"] = p.Omega
    row["abs_sin_half_Omega"] = abs(math.sin(0.5 * p.Omega))
    if not in_admissible_set(p):
        row["status"] = "inadmissible"
        return row
    try:
        sol = solve_nanopteron(p, cfg)
    except Exception as exc:  # recorded per row, the sweep goes on
        row["status"] = f"error:{type(exc).__name__}"
        return row
    row.update(
        omega_mu=sol.scalars.omega_mu,
        iota_chi=sol.ops.iota_chi,
        a_mu=sol.state.a,
        eta_norm=sol.eta_norm,
        residual=sol.full_residual,
        sweeps=sol.state.iter,
        status="below_floor" if sol.below_floor and sol.status == "converged" else sol.status,
    )
    return row


def amplitude_sweep(
    mu_list,
    template: LatticeParams,
    cfg: NanopteronConfig = NanopteronConfig(),
    path=None,
    jobs: int = 1,
) -> list[dict]:
    """Solve at each ``mu`` and collect one table row per value.

    Inadmissible masses are flagged and skipped; failures are recorded in
    the ``status`` column.  Rows are written to ``path`` as CSV if given.
    """
    mus = [float(m) for m in mu_list]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_sweep_row, mus, [template] * len(mus), [cfg] * len(mus)))
    else:
        rows = [_sweep_row(m, template, cfg) for m in mus]
    if path is not None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
            w.writeheader()
            for r in rows:
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return rows
