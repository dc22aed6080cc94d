"""Run configuration: JSON documents with SI units.

Every physical quantity is either a bare number in SI base units or a
string with an SI prefix and the unit symbol, e.g. ``"27fF"``, ``"14uA"``,
``"0.21ns"``, ``"1V"``.  Accepted prefixes are f p n u (or µ) m k M G;
the unit symbol must match the field (F, A, s, V, W, S).

A run is resolved from three layers, later ones winning: built-in
defaults, the named scenario (``data/scenarios/<name>.json``), the user's
``--config`` file.  Unknown keys are rejected.
"""

from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import vtc as _vtc
from .cell import TransistorModel
from .crossbar import CrossbarConfig, default_crossbar, validate_config
from .errors import ConfigurationError, ValidationError
from .netmap import CALIBRATION_MODES, DEFAULT_PULSE_SCALE
from .oracle import FxpFormat
from .variability import MismatchSpec

_PREFIX = {"f": 1e-15, "p": 1e-12, "n": 1e-9, "u": 1e-6, "µ": 1e-6, "m": 1e-3, "": 1.0, "k": 1e3, "M": 1e6, "G": 1e9}
_QTY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([fpnuµmkMG]?)([A-Za-z]*)\s*$")

DEFAULTS = {
    "seed": 0,
    "samples": 30,
    "vtc": {
        "c1": "27fF",
        "c2": "18fF",
        "vdd": "1V",
        "v_sp": "0.35V",
        "i_avg": "14uA",
        "t_offset": "0.21ns",
        "power": "5.7uW",
        "v_in_min": "0V",
        "v_in_max": "1V",
    },
    "crossbar": {
        "xeq": None,  # rows x cols ratios; None = built-in 5x4 ramp
        "c_b": "2.5fF",
        "c_g": "0.1667fF",
        "g_m": "230.13uS",
        "vdd_c3pu": "0.3V",
        "clk_high": "3ns",
        "period": "6ns",
        "integrator_cap": None,  # per column; None = 60 fF per row
    },
    "mismatch": {"vtc_delay_rel_sigma": 0.0, "xeq_rel_sigma": 0.0, "gm_rel_sigma": 0.0},
    "sweep": {"steps": 101},
    "mc": {"target": "vtc", "samples": 200, "stages": [1, 2, 3, 4], "v_in": "1V", "bins": 20},
    "fxp": {"formats": ["3x3", "4x4", "8x4", "8x8"], "rounding": "nearest"},
    "ann": {
        "dataset": None,
        "weights": None,
        "split_seed": 3,
        "train_seed": 0,
        "epochs": 4000,
        "learning_rate": 0.5,
        "weight_decay": 0.01,
        "pulse_scale": DEFAULT_PULSE_SCALE,
        "t_min": "10ps",
        "calibration": "instance",
        "readout_mismatch": "shared",
    },
}

_UNITS = {
    "vtc": {"c1": "F", "c2": "F", "vdd": "V", "v_sp": "V", "i_avg": "A", "t_offset": "s", "power": "W",
            "v_in_min": "V", "v_in_max": "V"},
    "crossbar": {"c_b": "F", "c_g": "F", "g_m": "S", "vdd_c3pu": "V", "clk_high": "s", "period": "s",
                 "integrator_cap": "F"},
    "mc": {"v_in": "V"},
    "ann": {"t_min": "s"},
}


def parse_quantity(value, unit: str, where: str = "value") -> float:
    """Number in SI base units from a bare number or a suffixed string."""
    if isinstance(value, bool):
        raise ConfigurationError(f"{where}: expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        out = float(value)
    elif isinstance(value, str):
        m = _QTY.match(value)
        if not m:
            raise ConfigurationError(f"{where}: cannot parse quantity {value!r}")
        num, prefix, sym = m.groups()
        if sym != unit:
            raise ConfigurationError(f"{where}: expected unit {unit!r}, got {value!r}")
        out = float(num) * _PREFIX[prefix]
    else:
        raise ConfigurationError(f"{where}: expected a number or string, got {type(value).__name__}")
    if not np.isfinite(out):
        raise ConfigurationError(f"{where}: value must be finite")
    return out


def scenario_path(name: str) -> Path:
    return Path(str(resources.files("c3pu") / "data" / "scenarios" / f"{name}.json"))


def available_scenarios() -> list[str]:
    root = Path(str(resources.files("c3pu") / "data" / "scenarios"))
    return sorted(p.stem for p in root.glob("*.json"))


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        here = f"{path}{k}"
        if k not in base:
            raise ConfigurationError(f"unknown config key {here!r}")
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigurationError(f"{here!r} must be an object")
            out[k] = _merge(base[k], v, here + ".")
        else:
            out[k] = copy.deepcopy(v)
    return out


def _read_json(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{path}: top level must be an object")
    return doc


@dataclass(frozen=True, eq=False)
class RunConfig:
    """Resolved, validated configuration of one run."""

    raw: dict  # merged document, units as written
    scenario: str
    seed: int
    samples: int
    vtc: _vtc.VtcParams
    crossbar: CrossbarConfig
    mismatch: MismatchSpec

    def section(self, name: str) -> dict:
        return self.raw[name]

    def quantity(self, section: str, key: str) -> float:
        return parse_quantity(self.raw[section][key], _UNITS[section][key], f"{section}.{key}")

    @property
    def fxp_formats(self) -> list[FxpFormat]:
        fx = self.raw["fxp"]
        out = []
        for label in fx["formats"]:
            m = re.fullmatch(r"(\d+)x(\d+)", str(label))
            if not m:
                raise ConfigurationError(f"fxp.formats: bad format {label!r}, expected like '8x4'")
            out.append(FxpFormat(int(m.group(1)), int(m.group(2)), fx["rounding"]))
        return out

    def resolved(self) -> dict:
        """JSON-ready document with every quantity in SI base units."""
        doc = copy.deepcopy(self.raw)
        for sec, keys in _UNITS.items():
            for k in keys:
                if doc[sec][k] is not None:
                    doc[sec][k] = self.quantity(sec, k)
        doc["scenario"] = self.scenario
        doc["crossbar"]["xeq"] = self.crossbar.xeq.tolist()
        return doc


def load_config(
    path=None,
    scenario: str = "nominal",
    seed: int | None = None,
    samples: int | None = None,
    noiseless: bool = False,
) -> RunConfig:
    """Merge defaults, scenario and user file, then validate everything."""
    doc = copy.deepcopy(DEFAULTS)
    sp = scenario_path(scenario)
    if not sp.is_file():
        raise ConfigurationError(f"unknown scenario {scenario!r}; available: {available_scenarios()}")
    doc = _merge(doc, _read_json(sp))
    if path is not None:
        doc = _merge(doc, _read_json(path))
    if seed is not None:
        doc["seed"] = seed
    if samples is not None:
        doc["samples"] = samples
    if noiseless:
        doc["mismatch"] = {k: 0.0 for k in doc["mismatch"]}
    return _build(doc, scenario)


def _int(doc, key, lo):
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        raise ConfigurationError(f"{key} must be an integer >= {lo}, got {v!r}")
    return v


def _build(doc: dict, scenario: str) -> RunConfig:
    q = lambda sec, k: parse_quantity(doc[sec][k], _UNITS[sec][k], f"{sec}.{k}")  # noqa: E731
    seed = _int(doc, "seed", 0)
    samples = _int(doc, "samples", 1)
    try:
        vtc = _vtc.VtcParams(
            c1=q("vtc", "c1"), c2=q("vtc", "c2"), vdd=q("vtc", "vdd"), v_sp=q("vtc", "v_sp"),
            i_avg=q("vtc", "i_avg"), t_offset=q("vtc", "t_offset"), power=q("vtc", "power"),
            v_in_range=(q("vtc", "v_in_min"), q("vtc", "v_in_max")),
        )
        xb = doc["crossbar"]
        c_b = q("crossbar", "c_b")
        c_g = q("crossbar", "c_g")
        kw = dict(
            transistor=TransistorModel(g_m=q("crossbar", "g_m")),
            vdd_c3pu=q("crossbar", "vdd_c3pu"),
            clk_high=q("crossbar", "clk_high"),
            period=q("crossbar", "period"),
        )
        xeq = default_crossbar().xeq if xb["xeq"] is None else np.asarray(xb["xeq"], dtype=float)
        if xeq.ndim != 2:
            raise ConfigurationError("crossbar.xeq must be a rows x cols matrix")
        if xb["integrator_cap"] is not None:
            kw["integrator_caps"] = np.full(xeq.shape[1], q("crossbar", "integrator_cap"))
        cfg = CrossbarConfig.from_xeq(xeq, c_b=c_b, c_g=c_g, **kw)
        m = doc["mismatch"]
        mismatch = MismatchSpec(float(m["vtc_delay_rel_sigma"]), float(m["xeq_rel_sigma"]), float(m["gm_rel_sigma"]), seed)
    except ConfigurationError:
        raise
    except (ValidationError, TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc)) from None
    violations = validate_config(cfg, max_pulse=float(_vtc.delay(vtc.v_in_range[1], vtc)))
    if violations:
        raise ConfigurationError("; ".join(f"{v.rule}: {v.message}" for v in violations))

    ann = doc["ann"]
    if ann["calibration"] not in CALIBRATION_MODES:
        raise ConfigurationError(f"ann.calibration must be one of {CALIBRATION_MODES}")
    if ann["readout_mismatch"] not in ("shared", "independent"):
        raise ConfigurationError("ann.readout_mismatch must be 'shared' or 'independent'")
    for key in ("dataset", "weights"):
        if ann[key] is not None and not Path(ann[key]).is_file():
            raise ConfigurationError(f"ann.{key}: file not found: {ann[key]}")
    if doc["mc"]["target"] not in ("vtc", "crossbar"):
        raise ConfigurationError("mc.target must be 'vtc' or 'crossbar'")
    if not doc["mc"]["stages"] or any(not isinstance(s, int) or s < 1 for s in doc["mc"]["stages"]):
        raise ConfigurationError("mc.stages must be a non-empty list of integers >= 1")
    if isinstance(doc["mc"]["samples"], bool) or not isinstance(doc["mc"]["samples"], int) or doc["mc"]["samples"] < 2:
        raise ConfigurationError("mc.samples must be an integer >= 2")
    if not isinstance(doc["sweep"]["steps"], int) or doc["sweep"]["steps"] < 2:
        raise ConfigurationError("sweep.steps must be an integer >= 2")
    parse_quantity(ann["t_min"], "s", "ann.t_min")
    rc = RunConfig(doc, scenario, seed, samples, vtc, cfg, mismatch)
    try:
        rc.fxp_formats
    except ConfigurationError:
        raise
    except ValidationError as exc:
        raise ConfigurationError(f"fxp: {exc}") from None
    return rc
