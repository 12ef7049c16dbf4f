"""YAML run-configuration parsing and validation.

The config mirrors common ultrasonics usage: lengths in mm and
frequencies in MHz by default, switchable through an explicit `units`
block.  Everything is validated and converted to SI before any
computation; errors carry the dotted key path they refer to.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import yaml

from .materials import (
    MATERIAL_LIBRARY,
    FluidMaterial,
    IsotropicSolid,
    isotropic_from_lame,
    isotropic_from_speeds,
)
from .mep import Tolerances
from .postprocess import ClassifyOptions, PlateModel

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config"]

_LENGTH = {"mm": 1e-3, "m": 1.0}
_FREQUENCY = {"hz": 1.0, "khz": 1e3, "mhz": 1e6}
_SPEED = {"m/s": 1.0, "km/s": 1e3}
_MODULUS = {"gpa": 1e9, "pa": 1.0}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class Units:
    length: float = 1e-3       # mm
    frequency: float = 1e6     # MHz
    speed: float = 1.0         # m/s
    modulus: float = 1e9       # GPa


@dataclass(frozen=True)
class RunConfig:
    model: PlateModel
    frequencies: np.ndarray    # Hz, ascending
    path: str = "auto"
    seed: int = 0
    shift: float | None = None
    size_cap: int = 20000
    force_distinct_fluids: bool = False
    tols: Tolerances = field(default_factory=Tolerances)
    classify: ClassifyOptions = field(default_factory=ClassifyOptions)
    output_dir: str = "out"
    plots: bool = True
    modeshapes: bool = False
    raw: dict = field(default_factory=dict, repr=False)


_MISSING = object()


def _expect(mapping, key, path, types, default=_MISSING):
    if not isinstance(mapping, dict):
        raise ConfigError(path, f"expected a mapping, got {type(mapping).__name__}")
    if key not in mapping:
        if default is not _MISSING:
            return default
        raise ConfigError(f"{path}.{key}", "required key missing")
    val = mapping[key]
    if types is not None and not isinstance(val, types):
        raise ConfigError(f"{path}.{key}",
                          f"expected {types}, got {type(val).__name__}")
    return val


def _positive(val, path):
    if not isinstance(val, (int, float)) or isinstance(val, bool) or val <= 0:
        raise ConfigError(path, f"expected a positive number, got {val!r}")
    return float(val)


def _parse_units(raw) -> Units:
    if raw is None:
        return Units()
    def lookup(table, key, default, path):
        name = _expect(raw, key, "units", str, default)
        try:
            return table[name.lower()]
        except KeyError:
            raise ConfigError(f"units.{key}",
                              f"unknown unit {name!r}; options: {sorted(table)}")
    return Units(
        length=lookup(_LENGTH, "length", "mm", "units.length"),
        frequency=lookup(_FREQUENCY, "frequency", "MHz", "units.frequency"),
        speed=lookup(_SPEED, "speed", "m/s", "units.speed"),
        modulus=lookup(_MODULUS, "modulus", "GPa", "units.modulus"),
    )


def _parse_material(spec, units: Units, path: str, allow_fluid=True):
    if spec is None:
        return None
    if isinstance(spec, str):
        try:
            return MATERIAL_LIBRARY[spec.lower()]
        except KeyError:
            raise ConfigError(path, f"unknown material {spec!r}; "
                                    f"library: {sorted(MATERIAL_LIBRARY)}")
    if not isinstance(spec, dict):
        raise ConfigError(path, "expected a material name or a parameter mapping")
    rho = _positive(_expect(spec, "rho", path, None), f"{path}.rho")
    name = spec.get("name", "custom")
    if "c" in spec:
        if not allow_fluid:
            raise ConfigError(path, "fluid material not allowed here")
        return FluidMaterial(rho=rho, c=_positive(spec["c"], f"{path}.c") * units.speed,
                             name=name)
    if "c_l" in spec and "c_t" in spec:
        return isotropic_from_speeds(
            rho,
            _positive(spec["c_l"], f"{path}.c_l") * units.speed,
            _positive(spec["c_t"], f"{path}.c_t") * units.speed,
            name=name,
        )
    if "lam" in spec and "mu" in spec:
        return isotropic_from_lame(
            rho,
            _positive(spec["lam"], f"{path}.lam") * units.modulus,
            _positive(spec["mu"], f"{path}.mu") * units.modulus,
            name=name,
        )
    raise ConfigError(path, "material needs (c) for a fluid, or (c_l, c_t) "
                            "or (lam, mu) for a solid")


def _parse_layers(raw, units: Units):
    if not isinstance(raw, list) or not raw:
        raise ConfigError("layers", "expected a nonempty list of layers")
    mats, hs, orders = [], [], []
    for i, lay in enumerate(raw):
        path = f"layers[{i}]"
        mat = _parse_material(_expect(lay, "material", path, None), units,
                              f"{path}.material", allow_fluid=False)
        if not isinstance(mat, IsotropicSolid):
            raise ConfigError(f"{path}.material", "layers must be solid")
        mats.append(mat)
        hs.append(_positive(_expect(lay, "thickness", path, None),
                            f"{path}.thickness") * units.length)
        order = _expect(lay, "order", path, (int, type(None)), None)
        if order is not None and order < 1:
            raise ConfigError(f"{path}.order", "element order must be >= 1")
        orders.append(order)
    return tuple(mats), tuple(hs), tuple(orders)


def _parse_frequencies(raw, units: Units) -> np.ndarray:
    if raw is None:
        raise ConfigError("frequencies", "required key missing")
    if isinstance(raw, dict) and "values" in raw:
        vals = raw["values"]
        if not isinstance(vals, list) or not vals:
            raise ConfigError("frequencies.values", "expected a nonempty list")
        f = np.array([_positive(v, f"frequencies.values[{i}]")
                      for i, v in enumerate(vals)]) * units.frequency
    elif isinstance(raw, dict):
        fmin = _positive(_expect(raw, "min", "frequencies", None), "frequencies.min")
        fmax = _positive(_expect(raw, "max", "frequencies", None), "frequencies.max")
        if fmax <= fmin:
            raise ConfigError("frequencies", f"max ({fmax}) must exceed min ({fmin})")
        if "count" in raw:
            count = raw["count"]
            if not isinstance(count, int) or count < 1:
                raise ConfigError("frequencies.count", "expected a positive integer")
            f = np.linspace(fmin, fmax, count) * units.frequency
        elif "step" in raw:
            step = _positive(raw["step"], "frequencies.step")
            f = np.arange(fmin, fmax + step / 2, step) * units.frequency
        else:
            raise ConfigError("frequencies", "need count, step or values")
    else:
        raise ConfigError("frequencies", "expected a mapping")
    return np.sort(f)


def parse_config(raw: dict) -> RunConfig:
    """Validate a parsed config mapping and convert everything to SI."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a mapping")
    known = {"units", "layers", "halfspaces", "dof_mode", "frequencies",
             "tolerances", "solver", "classification", "output"}
    for key in raw:
        if key not in known:
            raise ConfigError(key, f"unknown section; options: {sorted(known)}")
    units = _parse_units(raw.get("units"))
    mats, hs, orders = _parse_layers(raw.get("layers"), units)
    dof_mode = raw.get("dof_mode", "inplane")
    if dof_mode not in ("inplane", "full"):
        raise ConfigError("dof_mode", f"expected 'inplane' or 'full', got {dof_mode!r}")
    half = raw.get("halfspaces") or {}
    if not isinstance(half, dict) or not set(half) <= {"bottom", "top"}:
        raise ConfigError("halfspaces", "expected a mapping with keys bottom/top")
    bottom = _parse_material(half.get("bottom"), units, "halfspaces.bottom")
    top = _parse_material(half.get("top"), units, "halfspaces.top")
    model = PlateModel(mats, hs, orders, dof_mode, bottom=bottom, top=top)
    freqs = _parse_frequencies(raw.get("frequencies"), units)

    tol_raw = raw.get("tolerances") or {}
    tols = Tolerances(
        residual=_positive(tol_raw.get("residual", 1e-6), "tolerances.residual"),
        constraint=_positive(tol_raw.get("constraint", 1e-8), "tolerances.constraint"),
        equation_sval=_positive(tol_raw.get("equation_sval", 1e-6),
                                "tolerances.equation_sval"),
        k_min=_positive(tol_raw.get("k_min", 1e-8), "tolerances.k_min"),
    )
    cls_raw = raw.get("classification") or {}
    classify = ClassifyOptions(
        tol_trapped=_positive(cls_raw.get("tol_trapped_np_per_m", 0.1),
                              "classification.tol_trapped_np_per_m"),
        tol_evan=_positive(cls_raw.get("tol_evan", 10.0), "classification.tol_evan"),
    )
    sol = raw.get("solver") or {}
    path = sol.get("path", "auto")
    if path not in ("auto", "generic", "isotropic_fluid"):
        raise ConfigError("solver.path", f"unknown path {path!r}")
    seed = sol.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("solver.seed", "expected an integer")
    shift = sol.get("shift")
    if shift is not None:
        shift = _positive(shift, "solver.shift")
    size_cap = sol.get("size_cap", 20000)
    if not isinstance(size_cap, int) or size_cap < 1:
        raise ConfigError("solver.size_cap", "expected a positive integer")
    out = raw.get("output") or {}
    return RunConfig(
        model=model,
        frequencies=freqs,
        path=path,
        seed=seed,
        shift=shift,
        size_cap=size_cap,
        force_distinct_fluids=bool(sol.get("force_distinct_fluids", False)),
        tols=tols,
        classify=classify,
        output_dir=str(out.get("directory", "out")),
        plots=bool(out.get("plots", True)),
        modeshapes=bool(out.get("modeshapes", False)),
        raw=raw,
    )


def load_config(path: str) -> RunConfig:
    """Read and validate a YAML config file."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(path, f"cannot read config: {exc}")
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}" if mark else "unknown location"
        raise ConfigError(f"{path}:{where}", f"YAML syntax error: {exc}")
    return parse_config(raw)
