"""Run configuration, manifests and plain-text result files."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import platform
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import scipy
from scipy import stats

from .dispersion import LatticeParams

__all__ = [
    "SCHEMA_VERSION",
    "ConfigError",
    "RunConfig",
    "RunManifest",
    "SlopeFit",
    "fit_loglog",
    "write_csv",
    "write_json",
    "read_json",
    "file_digest",
]

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GridConfig:
    min_half_length: float = 40.0
    modes: int = 2048


@dataclass(frozen=True)
class Tolerances:
    petviashvili: float = 1e-11
    newton: float = 1e-11
    periodic: float = 1e-12
    nanopteron: float = 1e-13
    sim_energy: float = 1e-6


@dataclass(frozen=True)
class DispersionOptions:
    k_points: int = 1001


@dataclass(frozen=True)
class PeriodicOptions:
    amplitudes: tuple = (0.0, 1e-3, 1e-2)
    K_trunc: int = 64
    a_cap: float = 0.05


@dataclass(frozen=True)
class SimulationOptions:
    n_beads: int = 4000
    t_final: float | None = None
    dt: float | None = None
    record_every: int = 1000


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI run depends on.

    Loaded from JSON; unknown keys at any level are rejected.
    """

    params: LatticeParams
    grid: GridConfig = GridConfig()
    tolerances: Tolerances = Tolerances()
    sweep: tuple | None = None
    seed: int = 0
    output_dir: str = "out"
    dispersion: DispersionOptions = DispersionOptions()
    periodic: PeriodicOptions = PeriodicOptions()
    simulation: SimulationOptions = SimulationOptions()

    def __post_init__(self):
        m = self.grid.modes
        if m < 4 or m & (m - 1):
            raise ConfigError(f"grid.modes must be a power of two, got {m}")
        if not self.grid.min_half_length > 0:
            raise ConfigError("grid.min_half_length must be positive")
        for f in fields(Tolerances):
            if not getattr(self.tolerances, f.name) > 0:
                raise ConfigError(f"tolerance {f.name} must be positive")
        if self.sweep is not None and not all(0 < m < 1 for m in self.sweep):
            raise ConfigError("sweep masses must lie in (0, 1)")

    def to_dict(self) -> dict:
        d = {
            "schema_version": SCHEMA_VERSION,
            "params": {"c": self.params.c, "kappa": self.params.kappa, "mu": self.params.mu},
            "grid": asdict(self.grid),
            "tolerances": asdict(self.tolerances),
            "sweep": list(self.sweep) if self.sweep is not None else None,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "dispersion": asdict(self.dispersion),
            "periodic": {**asdict(self.periodic), "amplitudes": list(self.periodic.amplitudes)},
            "simulation": asdict(self.simulation),
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        d = dict(d)
        version = d.pop("schema_version", None)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {version!r}; expected {SCHEMA_VERSION}")
        known = {"params", "grid", "tolerances", "sweep", "seed", "output_dir",
                 "dispersion", "periodic", "simulation"}
        _reject_unknown(d, known, "config")
        if "params" not in d:
            raise ConfigError("config needs a params block")
        pd = d["params"]
        _reject_unknown(pd, {"c", "kappa", "mu"}, "params")
        try:
            params = LatticeParams(float(pd["c"]), float(pd["kappa"]), float(pd["mu"]))
        except KeyError as exc:
            raise ConfigError(f"params missing {exc}") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"params: {exc}") from None
        kw = {"params": params}
        for name, typ in (("grid", GridConfig), ("tolerances", Tolerances),
                          ("dispersion", DispersionOptions), ("periodic", PeriodicOptions),
                          ("simulation", SimulationOptions)):
            if name in d:
                kw[name] = _build(typ, d[name], name)
        if d.get("sweep") is not None:
            kw["sweep"] = tuple(float(m) for m in d["sweep"])
        if "seed" in d:
            kw["seed"] = int(d["seed"])
        if "output_dir" in d:
            kw["output_dir"] = str(d["output_dir"])
        try:
            return cls(**kw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(d)

    def with_mu(self, mu: float) -> "RunConfig":
        try:
            params = self.params.with_mu(mu)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return _replace(self, params=params)

    def with_output(self, out: str) -> "RunConfig":
        return _replace(self, output_dir=str(out))


def _replace(cfg, **kw):
    from dataclasses import replace

    return replace(cfg, **kw)


def _reject_unknown(d, known, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    extra = sorted(set(d) - set(known))
    if extra:
        raise ConfigError(f"unknown keys in {where}: {', '.join(extra)}")


def _build(typ, d, where):
    names = {f.name for f in fields(typ)}
    _reject_unknown(d, names, where)
    vals = {}
    for f in fields(typ):
        if f.name in d:
            v = d[f.name]
            if isinstance(v, list):
                v = tuple(v)
            vals[f.name] = v
    try:
        return typ(**vals)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


# --------------------------------------------------------------------------
# outputs


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return v


def write_csv(path, columns: dict) -> Path:
    """Write equal-length columns; floats use ``repr`` so files round-trip exactly."""
    path = Path(path)
    names = list(columns)
    cols = [np.asarray(columns[n]) for n in names]
    n = len(cols[0])
    if any(len(c) != n for c in cols):
        raise ValueError("columns must have equal length")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for i in range(n):
            w.writerow([_fmt(c[i].item() if hasattr(c[i], "item") else c[i]) for c in cols])
    return path


def write_rows(path, rows: list, columns: list) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns)
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k, "")) for k in columns})
    return path


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return [_jsonable(v) for v in o.tolist()]
    if isinstance(o, (np.floating, float)):
        f = float(o)
        return f if math.isfinite(f) else repr(f)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    return o


def write_json(path, obj) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


# --------------------------------------------------------------------------
# slope fits


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    ci_low: float
    ci_high: float
    n: int

    def within(self, target: float, tol: float) -> bool:
        return abs(self.slope - target) <= tol

    def as_dict(self) -> dict:
        return asdict(self)


def fit_loglog(x, y) -> SlopeFit:
    """Least-squares slope of ``log y`` against ``log x`` with a 95% interval."""
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    ok = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    lx, ly = np.log(x[ok]), np.log(y[ok])
    n = len(lx)
    if n < 2:
        raise ValueError("need at least two positive points for a slope fit")
    res = stats.linregress(lx, ly)
    if n > 2:
        half = stats.t.ppf(0.975, n - 2) * res.stderr
    else:
        half = float("nan")
    return SlopeFit(float(res.slope), float(res.intercept),
                    float(res.slope - half), float(res.slope + half), n)


# --------------------------------------------------------------------------
# manifest


@dataclass
class RunManifest:
    """Record of a run directory: config, versions, stages and output digests."""

    config: dict
    versions: dict = field(default_factory=dict)
    stages: dict = field(default_factory=dict)
    files: dict = field(default_factory=dict)

    FILENAME = "manifest.json"

    @classmethod
    def open(cls, out_dir, config: dict) -> "RunManifest":
        from . import __version__

        path = Path(out_dir) / cls.FILENAME
        m = cls(config)
        if path.exists():
            old = read_json(path)
            m.stages = old.get("stages", {})
            m.files = old.get("files", {})
        m.versions = {
            "mimlattice": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        }
        return m

    def record_stage(self, name, status, seconds, reason=None, outputs=()):
        self.stages[name] = {"status": status, "seconds": round(float(seconds), 6),
                             "reason": reason, "outputs": [Path(o).name for o in outputs]}

    def add_file(self, path):
        path = Path(path)
        self.files[path.name] = {"sha256": file_digest(path), "bytes": path.stat().st_size}

    def save(self, out_dir) -> Path:
        return write_json(Path(out_dir) / self.FILENAME, asdict(self))
