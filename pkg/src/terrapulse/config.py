"""Batch configuration files: parsing, validation, defaulting.

INI-style ``key = value`` entries inside named sections.  Unknown sections
or keys are hard errors; missing required keys are hard errors; physics
validity conditions produce warnings only.  The fully resolved
configuration (every default materialized) is echoed next to the outputs
for reproducibility.
"""

import configparser
import math
import warnings
from dataclasses import dataclass, field

from .fields import GridSpec
from .media import C_LIGHT, SoilModel
from .pe import GaussianBeamSpec
from .signal import PulseSpec
from .terrain import flat_terrain, load_terrain, synthetic_terrain


class ConfigError(ValueError):
    pass


SOLVERS = ("pe", "synth", "tdpe", "hybrid", "reflection")

# section -> key -> (type tag, default or REQUIRED)
REQUIRED = object()
SCHEMA = {
    "run": {
        "solver": ("str", REQUIRED),
        "seed": ("int", 0),
        "threads": ("int", 1),
    },
    "grid": {
        "x_max": ("float", REQUIRED),
        "z_max": ("float", REQUIRED),
        "dx": ("float", None),
        "dz": ("float", None),
    },
    "source": {
        "z0": ("float", REQUIRED),
        "w0": ("float", REQUIRED),
        "rho0": ("float", None),
        "beta": ("float", 0.0),
    },
    "soil": {
        "epsilon": ("float", 10.0),
        "sigma": ("float", None),        # S/m
        "sigma_gauss": ("float", None),  # 1/s
    },
    "terrain": {
        "kind": ("str", "flat"),
        "height": ("float", 0.0),
        "path": ("str", None),
        "seed": ("int", 0),
        "n_bumps": ("int", 5),
        "amplitude": ("float", 30.0),
        "corr_length": ("float", 2000.0),
        "bulge": ("bool", False),
        "radius_factor": ("float", 4.0 / 3.0),
    },
    "frequency": {
        "f0": ("float", None),   # Hz
        "k0": ("float", None),   # 1/m
    },
    "pulse": {
        "kind": ("str", "damped_sinusoid"),
        "length": ("float", None),   # Lambda (m); a = pi/length
        "a": ("float", None),
        "b_over_a": ("float", 1.0),
        "carrier": ("bool", True),
    },
    "pe": {
        "bottom_bc": ("str", "impedance"),
        "top_bc": ("str", "transparent"),
    },
    "tdpe": {
        "ds": ("float", None),
        "s_window": ("float", REQUIRED),
        "bottom_bc": ("str", "nonlocal"),
        "top_bc": ("str", "transparent"),
    },
    "sweep": {
        "half_width_factor": ("float", 3.0),
        "n_freqs": ("int", 41),
        "s_window": ("float", REQUIRED),
    },
    "hybrid": {
        "delta": ("float", 1e-3),
        "s_min": ("float", 0.0),
        "s_max": ("float", REQUIRED),
        "ds_out": ("float", None),
    },
    "outputs": {
        "dir": ("str", "out"),
        "stations_x": ("str", None),
        "probes": ("str", None),
        "snapshot_ct": ("str", None),
        "field_stride": ("int", None),
        "format": ("str", "text"),
    },
    "reflection": {
        "beta_min": ("float", 1e-3),
        "beta_max": ("float", math.pi / 2),
        "n_angles": ("int", 200),
    },
}

SECTIONS_BY_SOLVER = {
    "pe": {"run", "grid", "source", "soil", "terrain", "frequency", "pe",
           "outputs"},
    "synth": {"run", "grid", "source", "soil", "terrain", "frequency",
              "pulse", "pe", "sweep", "outputs"},
    "tdpe": {"run", "grid", "source", "soil", "terrain", "frequency",
             "pulse", "tdpe", "outputs"},
    "hybrid": {"run", "grid", "source", "soil", "terrain", "frequency",
               "pulse", "pe", "hybrid", "outputs"},
    "reflection": {"run", "soil", "frequency", "reflection", "outputs"},
}


def _convert(raw, kind, where):
    raw = raw.strip()
    try:
        if kind == "float":
            if raw.lower() in ("inf", "none", ""):
                return None
            return float(raw)
        if kind == "int":
            return int(raw)
        if kind == "bool":
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {kind}") \
            from None


@dataclass
class SimulationConfig:
    """Validated, fully defaulted batch configuration."""

    solver: str
    values: dict                 # section -> key -> value
    source_path: str = None
    extra: dict = field(default_factory=dict)

    def section(self, name):
        return self.values.get(name, {})

    def __getitem__(self, pair):
        section, key = pair
        return self.values[section][key]


def parse_config(path):
    """Parse and validate a configuration file."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    if "run" not in cp or "solver" not in cp["run"]:
        raise ConfigError(f"{path}: missing [run] solver")
    solver = cp["run"]["solver"].strip()
    if solver not in SOLVERS:
        raise ConfigError(f"{path}: unknown solver {solver!r}")
    allowed = SECTIONS_BY_SOLVER[solver]

    values = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]")
        if section not in allowed:
            raise ConfigError(
                f"{path}: section [{section}] not used by solver {solver}")
        schema = SCHEMA[section]
        out = {}
        for key, raw in cp[section].items():
            if key not in schema:
                raise ConfigError(f"{path}: unknown key {key!r} in "
                                  f"[{section}]")
            out[key] = _convert(raw, schema[key][0], f"[{section}] {key}")
        values[section] = out

    # fill defaults, catch missing required keys
    for section in allowed:
        schema = SCHEMA[section]
        out = values.setdefault(section, {})
        for key, (kind, default) in schema.items():
            if key not in out:
                if default is REQUIRED:
                    raise ConfigError(
                        f"{path}: [{section}] {key} is required for "
                        f"solver {solver}")
                out[key] = default
    cfg = SimulationConfig(solver=solver, values=values,
                           source_path=str(path))
    _derive(cfg)
    _validate(cfg)
    return cfg


def _derive(cfg):
    """Resolve derived quantities (wavenumber, pulse rates, grid steps)."""
    v = cfg.values
    if "frequency" in v:
        f0, k0 = v["frequency"]["f0"], v["frequency"]["k0"]
        if k0 is None and f0 is not None:
            k0 = 2.0 * math.pi * f0 / C_LIGHT
        if k0 is None and cfg.solver != "tdpe":
            raise ConfigError("[frequency] needs f0 or k0")
        v["frequency"]["k0"] = k0
        if k0 is not None:
            v["frequency"]["f0"] = k0 * C_LIGHT / (2.0 * math.pi)

    if "pulse" in v and cfg.solver in ("synth", "tdpe", "hybrid"):
        p = v["pulse"]
        if p["a"] is None:
            if p["length"] is None:
                raise ConfigError("[pulse] needs length or a")
            p["a"] = math.pi / p["length"]
        p["length"] = math.pi / p["a"]
        carrier_k = v.get("frequency", {}).get("k0") if p["carrier"] else 0.0
        if p["carrier"] and not carrier_k:
            raise ConfigError("[pulse] carrier requested but no frequency")
        cfg.extra["pulse"] = PulseSpec(kind=p["kind"], a=p["a"],
                                       b=p["a"] * p["b_over_a"],
                                       k0=carrier_k or 0.0)

    if "grid" in v:
        g = v["grid"]
        k0 = v.get("frequency", {}).get("k0")
        lam = 2.0 * math.pi / k0 if k0 else \
            cfg.extra["pulse"].spatial_length / 4.0
        if g["dz"] is None:
            g["dz"] = round(lam / 8.0, 6)
        if g["dx"] is None:
            g["dx"] = round(min(4.0 * g["dz"], g["x_max"] / 64.0), 6)
        cfg.extra["grid"] = GridSpec(x_max=g["x_max"], z_max=g["z_max"],
                                     dx=g["dx"], dz=g["dz"])

    if "tdpe" in v and cfg.solver == "tdpe":
        t = v["tdpe"]
        pulse = cfg.extra["pulse"]
        if t["ds"] is None:
            if pulse.k0 > 0.0:
                t["ds"] = round(2.0 * math.pi / pulse.k0 / 15.0, 6)
            else:
                t["ds"] = round(pulse.spatial_length / 20.0, 6)

    if "hybrid" in v and cfg.solver == "hybrid":
        h = v["hybrid"]
        if h["ds_out"] is None:
            h["ds_out"] = round(cfg.extra["pulse"].spatial_length / 30.0, 6)

    if "source" in v:
        s = v["source"]
        cfg.extra["beam"] = GaussianBeamSpec(z0=s["z0"], w0=s["w0"],
                                             rho0=s["rho0"], beta=s["beta"])
    if "soil" in v:
        s = v["soil"]
        if s["sigma"] is None and s["sigma_gauss"] is None:
            s["sigma"] = 0.0
        cfg.extra["soil"] = SoilModel(epsilon=s["epsilon"],
                                      sigma_si=s["sigma"],
                                      sigma_gauss=s["sigma_gauss"])
        s["sigma"] = cfg.extra["soil"].sigma_si
        s["sigma_gauss"] = cfg.extra["soil"].sigma_gauss

    if "terrain" in v and cfg.solver != "reflection":
        t = v["terrain"]
        extent = v["grid"]["x_max"]
        if t["kind"] == "flat":
            profile = flat_terrain(extent, height=t["height"])
        elif t["kind"] == "file":
            if not t["path"]:
                raise ConfigError("[terrain] kind=file needs path")
            profile = load_terrain(t["path"])
            if profile.x_max < extent - 1e-9:
                raise ConfigError("[terrain] file does not cover the range")
        elif t["kind"] == "synthetic":
            profile = synthetic_terrain(t["seed"], t["n_bumps"],
                                        t["amplitude"], t["corr_length"],
                                        extent)
        else:
            raise ConfigError(f"[terrain] unknown kind {t['kind']!r}")
        if t["bulge"]:
            profile = profile.with_bulge(extent=extent,
                                         radius_factor=t["radius_factor"])
        cfg.extra["terrain"] = profile

    out = v.get("outputs", {})
    cfg.extra["stations_x"] = _parse_floats(out.get("stations_x")) \
        or ([v["grid"]["x_max"]] if "grid" in v else [])
    cfg.extra["snapshot_ct"] = _parse_floats(out.get("snapshot_ct")) or []
    cfg.extra["probes"] = _parse_probes(out.get("probes"))


def _parse_floats(raw):
    if not raw:
        return None
    return [float(tok) for tok in raw.replace(";", ",").split(",")
            if tok.strip()]


def _parse_probes(raw):
    if not raw:
        return []
    probes = []
    for tok in raw.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if ":" not in tok:
            raise ConfigError(f"[outputs] probes entry {tok!r} needs x:z")
        x, z = tok.split(":")
        probes.append((float(x), float(z)))
    return probes


def _validate(cfg):
    v = cfg.values
    if cfg.solver == "reflection":
        return
    grid = cfg.extra["grid"]
    k0 = v.get("frequency", {}).get("k0")
    if k0:
        if k0 < 10.0 * 2.0 * math.pi / grid.z_max:
            warnings.warn(
                "carrier wavenumber close to the domain cutoff: expect "
                "narrow-angle validity issues (k0 >> 2 pi / height fails)",
                stacklevel=2)
        if grid.z_max / grid.x_max > 0.2:
            pass  # GridSpec itself warns
    for x in cfg.extra["stations_x"]:
        if x < 0.0 or x > grid.x_max + 1e-9:
            raise ConfigError(f"station x={x} outside the range")
    for (x, z) in cfg.extra["probes"]:
        if x < 0.0 or x > grid.x_max + 1e-9:
            raise ConfigError(f"probe x={x} outside the range")
        if z < 0.0 or z > grid.z_max:
            raise ConfigError(f"probe z={z} outside the column")


def resolved_text(cfg):
    """Render the fully resolved configuration, defaults included."""
    lines = ["# resolved configuration (all defaults materialized)"]
    for section in sorted(cfg.values):
        lines.append(f"[{section}]")
        for key in sorted(cfg.values[section]):
            val = cfg.values[section][key]
            if val is None:
                val = "none"
            elif isinstance(val, bool):
                val = "true" if val else "false"
            elif isinstance(val, float):
                val = repr(val)
            lines.append(f"{key} = {val}")
        lines.append("")
    return "\n".join(lines)
