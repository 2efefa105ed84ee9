"""Run configuration: INI-style sections of flat key = value pairs.

Every recognised key has a default; the effective configuration (defaults
included) can be written back out with :meth:`RunConfig.dump`.
"""

import configparser
import io
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InvalidInputError
from .params import DimensionlessParams, PhysicalScales, nondimensionalize
from .spectral import Grid

_NONE = "none"

# section -> key -> default (as text, parsed by type below)
DEFAULTS = {
    "grid": {"n": "128", "L": repr(2 * math.pi), "nz": "16", "collocation": "legendre"},
    "dimensionless": {"eps": "0.1", "mu": "0.1", "beta": "0.0", "gamma": "1.0", "bond": "inf", "d": "1"},
    "physical": {"H0": _NONE, "a_surf": _NONE, "a_bott": _NONE, "Lx": _NONE, "Ly": _NONE,
                 "g": "9.81", "rho": "1000.0", "sigma": "0.073"},
    "initial": {"preset": "single-mode", "amplitude": "1.0", "k": "1", "width": "1.0", "center": _NONE,
                "psi_amplitude": "0.0", "zeta_file": _NONE, "psi_file": _NONE, "format": "text"},
    "bathymetry": {"preset": "flat", "amplitude": "0.5", "k": "1", "width": "1.0", "center": _NONE,
                   "file": _NONE, "format": "text"},
    "integrator": {"dt": "0.05", "T_end": "10.0", "scheme": "lawson", "system": "original",
                   "adaptive": "false", "rtol": "1e-8", "dt_min": "1e-10", "solver_tol": "1e-10",
                   "method": "pcg", "filter": "false"},
    "monitors": {"enabled": "true", "h_min": _NONE, "a0": _NONE, "energy_factor": "2.0", "N_d": "2",
                 "interval": _NONE},
    "output": {"directory": ".", "records": "diagnostics.jsonl", "interval": "1.0", "energies": "false",
               "sweep": "sweep.csv", "swlimit": "swlimit.csv", "echo": "effective_config.ini"},
    "sweep": {"eps": _NONE, "mu": _NONE, "beta": _NONE, "bond_mu": _NONE, "gamma": _NONE,
              "T_cap": _NONE, "censored": "exclude", "workers": "1"},
    "swlimit": {"mu": "1e-2,1e-3,1e-4", "T": "1.0", "dt": "0.005", "check_every": "20"},
}

FLOATS = {
    "grid": {"L"}, "dimensionless": {"eps", "mu", "beta", "gamma", "bond"},
    "physical": {"H0", "a_surf", "a_bott", "Lx", "Ly", "g", "rho", "sigma"},
    "initial": {"amplitude", "width", "center", "psi_amplitude"},
    "bathymetry": {"amplitude", "width", "center"},
    "integrator": {"dt", "T_end", "rtol", "dt_min", "solver_tol"},
    "monitors": {"h_min", "a0", "energy_factor", "interval"},
    "output": {"interval"},
    "sweep": {"T_cap"},
    "swlimit": {"T", "dt"},
}
INTS = {"grid": {"nz"}, "dimensionless": {"d"}, "initial": {"k"}, "bathymetry": {"k"},
        "monitors": {"N_d"}, "sweep": {"workers"}, "swlimit": {"check_every"}}
BOOLS = {"integrator": {"adaptive", "filter"}, "monitors": {"enabled"}, "output": {"energies"}}
LISTS = {"grid": {"n"}, "sweep": {"eps", "mu", "beta", "bond_mu", "gamma"}, "swlimit": {"mu"}}
POSITIVE = {("integrator", "dt"), ("integrator", "T_end"), ("integrator", "rtol"), ("integrator", "dt_min"),
            ("integrator", "solver_tol"), ("monitors", "energy_factor"), ("monitors", "h_min"),
            ("monitors", "a0"), ("monitors", "interval"), ("output", "interval"), ("sweep", "T_cap"), ("swlimit", "T"),
            ("swlimit", "dt")}


def _parse_float(text, where):
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(f"{where}: expected a number, got {text!r}") from None
    if math.isnan(v):
        raise ConfigError(f"{where}: NaN is not allowed")
    return v


def _parse_bool(text, where):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{where}: expected true/false, got {text!r}")


def _parse(section, key, text):
    where = f"[{section}] {key}"
    text = text.strip()
    if text.lower() == _NONE:
        return None
    if key in FLOATS.get(section, ()):
        return _parse_float(text, where)
    if key in INTS.get(section, ()):
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"{where}: expected an integer, got {text!r}") from None
    if key in BOOLS.get(section, ()):
        return _parse_bool(text, where)
    if key in LISTS.get(section, ()):
        items = [t for t in text.replace(";", ",").split(",") if t.strip()]
        conv = int if (section, key) == ("grid", "n") else float
        try:
            return [conv(t) for t in items]
        except ValueError:
            raise ConfigError(f"{where}: bad list {text!r}") from None
    return text


@dataclass
class RunConfig:
    raw: dict
    values: dict
    params: DimensionlessParams
    grid: Grid
    source: str | None = None
    explicit: set = field(default_factory=set)

    def __getitem__(self, section):
        return self.values[section]

    def get(self, section, key):
        return self.values[section][key]

    @property
    def uses_physical(self):
        return "physical" in {s for s, _ in self.explicit}

    def with_params(self, **changes):
        """Copy with some dimensionless parameters replaced."""
        raw = {s: dict(v) for s, v in self.raw.items()}
        raw.pop("physical", None)
        raw.setdefault("dimensionless", {})
        p = self.params.replace(**changes)
        for k, v in p.as_dict().items():
            raw["dimensionless"][k] = repr(v) if isinstance(v, float) else str(v)
        return build_config(raw, self.source)

    def dump(self, stream=None):
        """Write the effective configuration, defaults included."""
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        for section, keys in DEFAULTS.items():
            if section == "physical" and not self.uses_physical:
                continue
            if section == "dimensionless" and self.uses_physical:
                continue
            cp.add_section(section)
            for k in keys:
                cp.set(section, k, self.raw.get(section, {}).get(k, DEFAULTS[section][k]))
        if self.uses_physical:
            cp.add_section("derived")
            for k, v in self.params.as_dict().items():
                cp.set("derived", k, repr(v))
        out = stream if stream is not None else io.StringIO()
        cp.write(out)
        return None if stream is not None else out.getvalue()

    # builders --------------------------------------------------------------
    def resolve_path(self, path):
        if path is None or os.path.isabs(path) or self.source is None:
            return path
        return os.path.join(os.path.dirname(os.path.abspath(self.source)), path)

    def initial(self):
        from .evolution import SurfaceState, initial_state, load_field
        c = self.values["initial"]
        if c["preset"] == "file":
            fmt = c["format"]
            zeta = load_field(self.resolve_path(c["zeta_file"]), self.grid, fmt)
            psi = load_field(self.resolve_path(c["psi_file"]), self.grid, fmt) if c["psi_file"] else np.zeros(self.grid.shape)
            return SurfaceState(zeta, psi)
        return initial_state(self.grid, c["preset"], amplitude=c["amplitude"], k=c["k"], width=c["width"],
                             center=c["center"], psi_amplitude=c["psi_amplitude"], params=self.params)

    def bottom(self):
        from .evolution import bottom_profile, load_field
        c = self.values["bathymetry"]
        if c["preset"] == "file":
            return load_field(self.resolve_path(c["file"]), self.grid, c["format"])
        return bottom_profile(self.grid, c["preset"], amplitude=c["amplitude"], k=c["k"], width=c["width"],
                              center=c["center"])

    def model(self):
        from .evolution import WaterWavesModel
        g = self.values["grid"]
        it = self.values["integrator"]
        return WaterWavesModel(self.grid, self.params, self.bottom(), nz=g["nz"], solver_tol=it["solver_tol"],
                               method=it["method"], integrator=it["scheme"], system=it["system"],
                               filter=it["filter"], collocation=g["collocation"])


def _read_raw(text):
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse configuration: {exc}") from None
    return {s: dict(cp.items(s)) for s in cp.sections()}


def apply_overrides(raw, overrides):
    """Apply ``section.key=value`` overrides to a raw section dict."""
    raw = {s: dict(v) for s, v in raw.items()}
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        lhs, value = item.split("=", 1)
        if "." not in lhs:
            raise ConfigError(f"override {item!r} must name a section, e.g. dimensionless.eps=0.1")
        section, key = lhs.strip().split(".", 1)
        raw.setdefault(section, {})[key] = value.strip()
    return raw


def build_config(raw, source=None):
    unknown = []
    for section, keys in raw.items():
        if section not in DEFAULTS:
            if section == "derived":
                continue
            unknown.append(f"[{section}]")
            continue
        for k in keys:
            if k not in DEFAULTS[section]:
                unknown.append(f"[{section}] {k}")
    if unknown:
        raise ConfigError("unknown configuration keys: " + ", ".join(unknown))
    if raw.get("physical") and raw.get("dimensionless"):
        raise ConfigError("both [physical] and [dimensionless] given; the parameters are ambiguous")
    values = {}
    for section, keys in DEFAULTS.items():
        given = raw.get(section, {})
        values[section] = {k: _parse(section, k, given.get(k, default)) for k, default in keys.items()}
    for section, key in POSITIVE:
        v = values[section][key]
        if v is not None and not v > 0:
            raise ConfigError(f"[{section}] {key} must be > 0, got {v!r}")
    g = values["grid"]
    n = g["n"]
    grid = Grid(n[0] if len(n) == 1 else tuple(n), g["L"] if len(n) == 1 else (g["L"], g["L"]))
    if g["nz"] < 8:
        raise ConfigError(f"[grid] nz must be >= 8, got {g['nz']}")
    if raw.get("physical"):
        ph = values["physical"]
        missing = [k for k in ("H0", "a_surf", "a_bott", "Lx", "Ly") if ph[k] is None]
        if missing:
            raise ConfigError("[physical] is missing " + ", ".join(missing))
        params = nondimensionalize(PhysicalScales(**ph), d=grid.d)
    else:
        dm = values["dimensionless"]
        params = DimensionlessParams(eps=dm["eps"], mu=dm["mu"], beta=dm["beta"], gamma=dm["gamma"],
                                     bond=dm["bond"], d=dm["d"])
        if params.d != grid.d:
            raise ConfigError(f"[dimensionless] d={params.d} but the grid is {grid.d}-dimensional")
    for section, key in (("initial", "zeta_file"), ("initial", "psi_file"), ("bathymetry", "file")):
        path = values[section][key]
        if path is not None:
            full = path if source is None or os.path.isabs(path) else os.path.join(
                os.path.dirname(os.path.abspath(source)), path)
            if not os.path.exists(full):
                raise FileNotFoundError(f"[{section}] {key}: no such file: {full}")
    if values["initial"]["preset"] == "file" and values["initial"]["zeta_file"] is None:
        raise ConfigError("[initial] preset = file needs zeta_file")
    if values["bathymetry"]["preset"] == "file" and values["bathymetry"]["file"] is None:
        raise ConfigError("[bathymetry] preset = file needs file")
    if values["sweep"]["censored"] not in ("exclude", "include"):
        raise ConfigError("[sweep] censored must be exclude or include")
    if not 1 <= values["monitors"]["N_d"] <= 4:
        raise ConfigError("[monitors] N_d must be between 1 and 4")
    explicit = {(s, k) for s, keys in raw.items() for k in keys}
    return RunConfig(raw, values, params, grid, source, explicit)


def load_config(path, overrides=None):
    """Read, override and validate a configuration file."""
    try:
        with open(path) as fh:
            text = fh.read()
    except FileNotFoundError:
        raise FileNotFoundError(f"configuration file not found: {path}") from None
    raw = apply_overrides(_read_raw(text), overrides)
    return build_config(raw, path)


def config_from_string(text, overrides=None, source=None):
    return build_config(apply_overrides(_read_raw(text), overrides), source)


def config_from_dict(sections, overrides=None):
    raw = {s: {k: (repr(v) if isinstance(v, float) else str(v)) for k, v in keys.items()}
           for s, keys in sections.items()}
    return build_config(apply_overrides(raw, overrides))


__all__ = ["RunConfig", "load_config", "config_from_string", "config_from_dict", "apply_overrides",
           "build_config", "DEFAULTS", "InvalidInputError"]
