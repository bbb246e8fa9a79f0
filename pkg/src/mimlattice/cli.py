"""Command-line front end: ``python -m mimlattice <command> --config run.json``.

Commands write CSV/JSON files into the output directory and record each
stage in ``manifest.json``.  Exit codes: 0 ok, 2 configuration or missing
dependency, 3 inadmissible or out-of-range mass ratio, 4 non-convergence.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

from .dispersion import (
    ValidityError,
    antiresonance_mass,
    check_validity,
    in_admissible_set,
    kernel_scalars,
    lambda_pm,
)
from .io import ConfigError, RunConfig, RunManifest, fit_loglog, read_json, write_csv, write_json, write_rows
from .monatomic import ConditioningError, ConvergenceError, MonatomicWave, refine_limit, solve_sigma
from .nanopteron import (
    SWEEP_COLUMNS,
    InadmissibleMassError,
    NanopteronConfig,
    NanopteronDivergenceError,
    ProfileFunction,
    amplitude_sweep,
    build_context,
    nanopteron_domain,
    solve_nanopteron,
)
from .periodic import (
    PeriodicCoeffs,
    PeriodicConvergenceError,
    PeriodicFamilyPoint,
    solve_periodic,
    verify_in_lab_frame,
)
from .simulation import BlowUpError, BoundaryContaminationError, SimConfig, init_from_profiles, run
from .spectral import DomainSpec, Parity, TrigSeries

EXIT_OK, EXIT_CONFIG, EXIT_INADMISSIBLE, EXIT_NONCONVERGENCE = 0, 2, 3, 4


class DependencyError(RuntimeError):
    pass


def _exit_code(exc: BaseException) -> tuple[int, str]:
    if isinstance(exc, (ConfigError, DependencyError)):
        return EXIT_CONFIG, "config"
    if isinstance(exc, ValidityError):
        return EXIT_INADMISSIBLE, f"validity:{exc.guard}"
    if isinstance(exc, InadmissibleMassError):
        return EXIT_INADMISSIBLE, "inadmissible"
    if isinstance(exc, (ConvergenceError, ConditioningError, PeriodicConvergenceError,
                        NanopteronDivergenceError, BlowUpError, BoundaryContaminationError)):
        return EXIT_NONCONVERGENCE, "nonconvergence"
    raise exc


def _nano_cfg(cfg: RunConfig) -> NanopteronConfig:
    t = cfg.tolerances
    return NanopteronConfig(
        min_half_length=cfg.grid.min_half_length,
        modes=cfg.grid.modes,
        tol=t.nanopteron,
        petviashvili_tol=t.petviashvili,
        newton_tol=t.newton,
        periodic_tol=t.periodic,
        K_trunc=cfg.periodic.K_trunc,
        a_cap=cfg.periodic.a_cap,
    )


# --------------------------------------------------------------------------
# commands; each returns the list of files it wrote


def cmd_dispersion(cfg: RunConfig, out: Path) -> list:
    p = cfg.params
    K = np.linspace(-np.pi, np.pi, cfg.dispersion.k_points)
    lm, lp = lambda_pm(K, p)
    files = [write_csv(out / "dispersion.csv", {"K": K, "lambda_minus": lm, "lambda_plus": lp})]
    check_validity(p)
    s = kernel_scalars(p)
    mus = {}
    for n in range(1, 11):
        try:
            mus[f"mu_{n}"] = antiresonance_mass(n, p)
        except ValueError:
            mus[f"mu_{n}"] = None
    scalars = {
        "Omega_mu": s.Omega_mu,
        "omega_mu": s.omega_mu,
        "alpha_mu": s.alpha_mu,
        "upsilon_mu": s.upsilon_mu,
        "z_mu": s.z_mu,
        "antiresonance_masses": mus,
        "abs_sin_half_Omega": abs(math.sin(0.5 * s.Omega_mu)),
        "admissible": in_admissible_set(p),
    }
    files.append(write_json(out / "scalars.json", scalars))
    return files


def _solitary_domain(cfg: RunConfig) -> DomainSpec:
    p = cfg.params
    if p.mu > 0:
        return nanopteron_domain(p, cfg.grid.min_half_length, cfg.grid.modes)
    return DomainSpec(cfg.grid.min_half_length, cfg.grid.modes)


def cmd_solitary(cfg: RunConfig, out: Path) -> list:
    p = cfg.params
    dom = _solitary_domain(cfg)
    wave = solve_sigma(p.c, dom, tol=cfg.tolerances.petviashvili)
    meta = wave.metadata()
    meta["domain"] = _domain_dict(dom)
    meta["coeffs"] = wave.sigma.coeffs
    files = [write_csv(out / "sigma.csv", wave.table())]
    if p.mu > 0:
        check_validity(p)
        ref = refine_limit(wave, p, tol=cfg.tolerances.newton)
        meta["refined"] = {"mu": ref.mu, "e1_residual": ref.e1_residual,
                           "e2_residual": ref.e2_residual,
                           "newton_iterations": ref.newton_iterations}
        files.append(write_csv(out / "refined.csv", {"x": dom.grid, "zeta1": ref.zeta1.samples(),
                                                     "zeta2": ref.zeta2.samples()}))
    files.append(write_json(out / "solitary.json", meta))
    return files


def _domain_dict(d: DomainSpec) -> dict:
    return {"half_length": d.half_length, "num_modes": d.num_modes,
            "resonant_index": d.resonant_index, "target_frequency": d.target_frequency}


def _load_wave(cfg: RunConfig, out: Path) -> MonatomicWave:
    path = out / "solitary.json"
    if not path.exists():
        raise DependencyError(f"missing dependency 'solitary': run the solitary command into {out}")
    meta = read_json(path)
    want = _solitary_domain(cfg)
    dom = DomainSpec(**meta["domain"])
    if meta["c"] != cfg.params.c or not dom.same_as(want) or dom.resonant_index != want.resonant_index:
        raise DependencyError("stale 'solitary' outputs: re-run solitary with this config")
    sigma = TrigSeries(dom, Parity.EVEN, np.asarray(meta["coeffs"], dtype=float))
    return MonatomicWave(sigma, meta["c"], meta["residual"], meta["decay_fit_q"],
                         meta["iterations"], meta["stabilization"])


def cmd_periodic(cfg: RunConfig, out: Path) -> list:
    p = cfg.params
    check_validity(p)
    scal = kernel_scalars(p)
    rows, files = [], []
    for i, a in enumerate(cfg.periodic.amplitudes):
        pt = solve_periodic(float(a), p, tol=cfg.tolerances.periodic,
                            K_trunc=cfg.periodic.K_trunc, a_cap=cfg.periodic.a_cap, scalars=scal)
        files.append(write_csv(out / f"periodic_{i}.csv", pt.table()))
        meta = pt.metadata()
        meta["lab_residual"] = verify_in_lab_frame(pt)
        rows.append(meta)
    files.append(write_json(out / "periodic.json", {"points": rows}))
    return files


def _nanopteron_from_wave(cfg: RunConfig, wave: MonatomicWave):
    ncfg = _nano_cfg(cfg)
    ctx = build_context(cfg.params, ncfg, wave=wave)
    return solve_nanopteron(cfg.params, ncfg, ctx=ctx)


def cmd_nanopteron(cfg: RunConfig, out: Path) -> list:
    wave = _load_wave(cfg, out)
    sol = _nanopteron_from_wave(cfg, wave)
    if sol.status != "converged":
        raise NanopteronDivergenceError(f"nanopteron iteration ended with status {sol.status}")
    meta = sol.metadata()
    pt = sol.periodic
    meta["state"] = {
        "domain": _domain_dict(wave.domain),
        "rho1_localized": sol.p1.localized.coeffs,
        "rho2_localized": sol.p2.localized.coeffs,
        "a": sol.state.a,
        "periodic": {"a": pt.a, "omega": pt.omega, "profile1": pt.profile.phi1,
                     "profile2": pt.profile.phi2},
    }
    files = [write_csv(out / "nanopteron_profile.csv", sol.table()),
             write_json(out / "nanopteron.json", meta)]
    return files


def _load_profiles(cfg: RunConfig, out: Path):
    path = out / "nanopteron.json"
    if not path.exists():
        raise DependencyError(f"missing dependency 'nanopteron': run the nanopteron command into {out}")
    meta = read_json(path)
    p = cfg.params
    if meta["mu"] != p.mu or meta["c"] != p.c or meta["kappa"] != p.kappa:
        raise DependencyError("stale 'nanopteron' outputs: re-run nanopteron with this config")
    st = meta["state"]
    dom = DomainSpec(**st["domain"])
    r1 = TrigSeries(dom, Parity.EVEN, np.asarray(st["rho1_localized"], dtype=float))
    r2 = TrigSeries(dom, Parity.ODD, np.asarray(st["rho2_localized"], dtype=float))
    per = st["periodic"]
    prof = PeriodicCoeffs(per["profile1"], per["profile2"])
    scal = kernel_scalars(p)
    pt = PeriodicFamilyPoint(per["a"], p.mu, per["omega"], prof - prof, prof * per["a"], prof,
                             float("nan"), float("nan"), 0, p, scal)
    a = st["a"]
    return ProfileFunction(r1, pt, a, 0, shift=0.5), ProfileFunction(r2, pt, a, 1)


def cmd_simulate(cfg: RunConfig, out: Path) -> list:
    p = cfg.params
    p1, p2 = _load_profiles(cfg, out)
    so = cfg.simulation
    t_final = so.t_final if so.t_final is not None else 50.0 / abs(p.c)
    scfg = SimConfig(n_beads=so.n_beads, dt=so.dt, t_final=t_final, record_every=so.record_every)
    state = init_from_profiles(p1, p2, p, scfg)
    snaps = {"t": [], "j": [], "R": [], "r": []}

    def snapshot(s):
        R = np.append(np.diff(s.U), np.nan)
        snaps["t"].extend([s.t] * s.n_beads)
        snaps["j"].extend(range(s.n_beads))
        snaps["R"].extend(R)
        snaps["r"].extend(s.U - s.u)

    res = run(state, p, scfg, p1, p2, snapshot=snapshot)
    summary = res.summary(p.c)
    summary["shape_errors"] = res.shape_error
    summary["times"] = res.times
    summary["energy_within_tolerance"] = bool(res.energy_drift < cfg.tolerances.sim_energy)
    return [write_csv(out / "trajectory.csv", snaps), write_json(out / "simulation.json", summary)]


def sweep_fits(rows: list) -> dict:
    """Slope fits over the converged rows of a sweep table."""
    good = [r for r in rows if r["status"] in ("converged", "below_floor")]
    out = {"rows_used": len(good)}
    if len(good) >= 2:
        mu = [r["mu"] for r in good]
        out["eta_norm_vs_mu"] = fit_loglog(mu, [r["eta_norm"] for r in good]).as_dict()
        out["omega_shift_vs_mu"] = fit_loglog(
            mu, [r["omega_mu"] - r["Omega_mu"] for r in good]).as_dict()
        ratios = [r["iota_chi"] / r["mu"] ** 2 for r in good]
        out["iota_chi_over_mu2"] = {"min": min(ratios), "max": max(ratios)}
        above = [r for r in good if r["status"] == "converged"]
        if len(above) >= 2:
            s = sorted(above, key=lambda r: r["mu"])[:2]
            out["a_local_slope_small_end"] = fit_loglog(
                [r["mu"] for r in s], [r["a_mu"] for r in s]).slope
    return out


def cmd_sweep(cfg: RunConfig, out: Path, jobs: int = 1) -> list:
    if not cfg.sweep:
        raise ConfigError("sweep command needs a 'sweep' list of mass ratios")
    rows = amplitude_sweep(cfg.sweep, cfg.params, _nano_cfg(cfg), jobs=jobs)
    files = [write_rows(out / "sweep.csv", rows, SWEEP_COLUMNS)]
    files.append(write_json(out / "sweep_fit.json", sweep_fits(rows)))
    return files


COMMANDS = {
    "dispersion": cmd_dispersion,
    "solitary": cmd_solitary,
    "periodic": cmd_periodic,
    "nanopteron": cmd_nanopteron,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mimlattice", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", help="output directory (overrides output_dir)")
    ap.add_argument("--mu", type=float, help="override params.mu")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes for sweep")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.config)
        if args.mu is not None:
            cfg = cfg.with_mu(args.mu)
        if args.out:
            cfg = cfg.with_output(args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest.open(out, cfg.to_dict())
    t0 = time.perf_counter()
    try:
        if args.command == "sweep":
            files = cmd_sweep(cfg, out, jobs=args.jobs)
        else:
            files = COMMANDS[args.command](cfg, out)
    except Exception as exc:
        code, reason = _exit_code(exc)
        manifest.record_stage(args.command, "error", time.perf_counter() - t0, f"{reason}: {exc}")
        manifest.save(out)
        print(f"{args.command} failed ({reason}): {exc}", file=sys.stderr)
        return code
    for f in files:
        manifest.add_file(f)
    manifest.record_stage(args.command, "ok", time.perf_counter() - t0, outputs=files)
    manifest.save(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
