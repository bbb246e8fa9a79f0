import json
import math

import numpy as np
import pytest

from mimlattice.cli import main
from mimlattice.dispersion import LatticeParams, antiresonance_mass
from mimlattice.io import ConfigError, RunConfig, fit_loglog, file_digest, read_json, write_csv


def config(tmp_path, **over):
    d = {
        "schema_version": 1,
        "params": {"c": 2.0, "kappa": 1.0, "mu": 0.01},
        "grid": {"min_half_length": 40, "modes": 2048},
        "dispersion": {"k_points": 257},
    }
    d.update(over)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(d))
    return path


def cli(cfg, out, *args):
    return main([*args, "--config", str(cfg), "--out", str(out)])


# -- configuration ---------------------------------------------------------


def test_config_round_trip():
    d = {"schema_version": 1, "params": {"c": 1.3, "kappa": 1.0, "mu": 0.003}, "sweep": [0.01, 0.003]}
    cfg = RunConfig.from_dict(d)
    again = RunConfig.from_dict(cfg.to_dict())
    assert again == cfg
    assert cfg.sweep == (0.01, 0.003)


@pytest.mark.parametrize(
    "bad",
    [
        {"params": {"c": 1.3, "kappa": 1.0, "mu": 0.003}},
        {"schema_version": 2, "params": {"c": 1.3, "kappa": 1.0, "mu": 0.003}},
        {"schema_version": 1, "params": {"c": 1.3, "kappa": 1.0, "mu": 0.003}, "extra": 1},
        {"schema_version": 1, "params": {"c": 1.3, "kappa": 1.0, "mu": 0.003, "nu": 1}},
        {"schema_version": 1, "params": {"c": 1.3, "kappa": 1.0, "mu": 0.003}, "grid": {"modes": 1000}},
        {"schema_version": 1, "params": {"c": 1.3, "kappa": 1.0, "mu": 0.003}, "grid": {"cells": 1}},
        {"schema_version": 1, "params": {"c": 1.3, "kappa": 1.0, "mu": 0.003}, "tolerances": {"newton": 0}},
        {"schema_version": 1, "params": {"c": 0.5, "kappa": 1.0, "mu": 0.003}},
        {"schema_version": 1, "params": {"c": 1.3, "kappa": 1.0}},
    ],
)
def test_config_rejected(bad):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(bad)


def test_csv_floats_round_trip(tmp_path):
    x = np.random.default_rng(0).standard_normal(50)
    path = write_csv(tmp_path / "a.csv", {"x": x})
    back = np.loadtxt(path, delimiter=",", skiprows=1)
    assert np.array_equal(back, x)


def test_fit_loglog_exact_power():
    x = np.geomspace(1e-4, 1e-1, 7)
    fit = fit_loglog(x, 3.0 * x**1.5)
    assert fit.slope == pytest.approx(1.5, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-10)
    assert fit.ci_low <= 1.5 <= fit.ci_high


def test_fit_loglog_needs_points():
    with pytest.raises(ValueError):
        fit_loglog([1.0], [1.0])


# -- commands --------------------------------------------------------------


def test_dispersion_command(tmp_path):
    out = tmp_path / "o"
    assert cli(config(tmp_path), out, "dispersion") == 0
    s = read_json(out / "scalars.json")
    assert s["Omega_mu"] == pytest.approx(5.02494, abs=1e-5)
    assert s["admissible"] is True
    assert s["antiresonance_masses"]["mu_1"] == pytest.approx(1 / (16 * math.pi**2 - 1))
    rows = (out / "dispersion.csv").read_text().strip().splitlines()
    assert len(rows) == 1 + 257
    m = read_json(out / "manifest.json")
    assert set(m["files"]) == {"dispersion.csv", "scalars.json"}
    for name, entry in m["files"].items():
        assert entry["sha256"] == file_digest(out / name)
    assert m["stages"]["dispersion"]["status"] == "ok"


def test_dispersion_flags_inadmissible(tmp_path):
    mu1 = antiresonance_mass(1, LatticeParams(2.0, 1.0, 0.01))
    out = tmp_path / "o"
    assert main(["dispersion", "--config", str(config(tmp_path)), "--out", str(out), "--mu", str(mu1)]) == 0
    assert read_json(out / "scalars.json")["admissible"] is False


def test_exit_code_config(tmp_path):
    cfg = config(tmp_path, bogus=True)
    assert cli(cfg, tmp_path / "o", "dispersion") == 2


def test_exit_code_validity(tmp_path):
    cfg = config(tmp_path, params={"c": 2.0, "kappa": 1.0, "mu": 0.3})
    assert cli(cfg, tmp_path / "o", "dispersion") == 3


def test_exit_code_inadmissible(tmp_path):
    mu1 = antiresonance_mass(1, LatticeParams(2.0, 1.0, 0.01))
    cfg = config(tmp_path, params={"c": 2.0, "kappa": 1.0, "mu": mu1})
    out = tmp_path / "o"
    assert cli(cfg, out, "solitary") == 0
    assert cli(cfg, out, "nanopteron") == 3
    m = read_json(out / "manifest.json")
    assert m["stages"]["nanopteron"]["status"] == "error"
    assert m["stages"]["nanopteron"]["reason"].startswith("inadmissible")


def test_exit_code_nonconvergence(tmp_path):
    cfg = config(tmp_path, tolerances={"petviashvili": 1e-30})
    assert cli(cfg, tmp_path / "o", "solitary") == 4


def test_missing_dependency_named(tmp_path, capsys):
    cfg = config(tmp_path, params={"c": 1.3, "kappa": 1.0, "mu": 0.003})
    assert cli(cfg, tmp_path / "fresh", "nanopteron") == 2
    assert "solitary" in capsys.readouterr().err
    assert cli(cfg, tmp_path / "fresh2", "simulate") == 2
    assert "nanopteron" in capsys.readouterr().err


def test_pipeline_and_determinism(tmp_path):
    cfg = config(
        tmp_path,
        params={"c": 1.3, "kappa": 1.0, "mu": 0.003},
        periodic={"amplitudes": [0.0, 0.001]},
        simulation={"n_beads": 400, "t_final": 2.0, "record_every": 200},
    )
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        for cmd in ("dispersion", "solitary", "periodic", "nanopteron", "simulate"):
            assert cli(cfg, out, cmd) == 0, cmd
    for name in ("dispersion.csv", "sigma.csv", "refined.csv", "periodic_0.csv", "periodic_1.csv",
                 "nanopteron_profile.csv", "trajectory.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    nano = read_json(a / "nanopteron.json")
    assert nano["status"] in ("converged", "below_floor")
    assert nano["full_residual"] < 1e-8
    sim = read_json(a / "simulation.json")
    assert sim["max_shape_error"] < 1e-2
    m = read_json(a / "manifest.json")
    assert set(m["stages"]) == {"dispersion", "solitary", "periodic", "nanopteron", "simulate"}
    for name, entry in m["files"].items():
        assert entry["sha256"] == file_digest(a / name)


def test_sweep_command(tmp_path):
    cfg = config(tmp_path, params={"c": 1.3, "kappa": 1.0, "mu": 0.003}, sweep=[1e-2, 3e-3, 1e-3, 3e-4])
    out = tmp_path / "o"
    assert cli(cfg, out, "sweep", "--jobs", "2") == 0
    lines = (out / "sweep.csv").read_text().strip().splitlines()
    assert len(lines) == 5
    status = [ln.rsplit(",", 1)[1] for ln in lines[1:]]
    # at c = 1.3 the two smallest masses sit too close to antiresonances
    assert status == ["converged", "converged", "inadmissible", "inadmissible"]
    fit = read_json(out / "sweep_fit.json")
    assert fit["rows_used"] == 2
    assert {"eta_norm_vs_mu", "omega_shift_vs_mu", "iota_chi_over_mu2"} <= set(fit)


def test_sweep_requires_list(tmp_path):
    assert cli(config(tmp_path), tmp_path / "o", "sweep") == 2
