"""Configuration parsing and serialization.

Configs are INI-style sectioned key=value text with units spelled out in key
names (I0_uA, C_fF, T_mK, ...), mirroring how device parameters are usually
tabulated. Unknown sections or keys are rejected; values are validated against
the module invariants when the domain objects are built.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field
from typing import Optional

from .drive import ContinuousWave, DriveSignal, PhotonPulse
from .integrator import SimConfig
from .noise import INTERPRETATIONS, NoiseModel
from .physics import DerivedScales, InvalidParameterError, JunctionParams, OperatingPoint, derive_scales


class ConfigError(ValueError):
    """Configuration text failed to parse or validate."""


_SCHEMA = {
    "junction": {"I0_uA": float, "R_ohm": float, "C_fF": float},
    "operating": {"i_b": float, "T_mK": float, "seed": int},
    "simulation": {
        "dt": float,
        "tau_max": float,
        "phi_star": float,
        "initial_phase_min": float,
        "initial_phase_max": float,
        "record_stride": int,
        "trap_detect": bool,
    },
    "noise": {"interpretation": str, "calibration_factor": float},
    "drive": {
        "kind": str,
        "i_mw_over_i0": float,
        "f_signal_GHz": str,  # number or "auto" (bias-modulated plasma frequency)
        "photons": float,
        "f_photon_GHz": str,
        "t_ph_ns": float,
        "t_d_ns": float,
    },
}

_DRIVE_KEYS = {
    "none": set(),
    "cw": {"i_mw_over_i0", "f_signal_GHz"},
    "pulse": {"photons", "f_photon_GHz", "t_ph_ns", "t_d_ns"},
}

_DEFAULTS = {
    "operating": {"seed": 42},
    "simulation": {
        "dt": 1e-4,
        "tau_max": 2e5,
        "phi_star": math.pi,
        "initial_phase_min": -0.1,
        "initial_phase_max": 0.1,
        "record_stride": 1,
        "trap_detect": True,
    },
    "noise": {"interpretation": "white", "calibration_factor": 1.0},
    "drive": {"kind": "none"},
}


@dataclass
class ConfigDocument:
    """Validated configuration with defaults applied."""

    junction: dict
    operating: dict
    simulation: dict
    noise: dict
    drive: dict

    def junction_params(self) -> JunctionParams:
        j = self.junction
        return JunctionParams(I0=j["I0_uA"] * 1e-6, R=j["R_ohm"], C=j["C_fF"] * 1e-15)

    def operating_point(self) -> OperatingPoint:
        return OperatingPoint(i_b=self.operating["i_b"], T=self.operating["T_mK"] * 1e-3)

    @property
    def seed(self) -> int:
        return self.operating["seed"]

    def sim_config(self) -> SimConfig:
        s = self.simulation
        return SimConfig(
            dt=s["dt"],
            tau_max=s["tau_max"],
            phi_star=s["phi_star"],
            initial_phase_range=(s["initial_phase_min"], s["initial_phase_max"]),
            record_stride=s["record_stride"],
            trap_detect=s["trap_detect"],
        )

    def noise_model(self) -> NoiseModel:
        return NoiseModel(
            T=self.operating["T_mK"] * 1e-3,
            interpretation=self.noise["interpretation"],
            calibration_factor=self.noise["calibration_factor"],
        )

    def drive_signal(self, params: Optional[JunctionParams] = None, scales: Optional[DerivedScales] = None) -> DriveSignal:
        d = self.drive
        if d["kind"] == "none":
            return None
        if params is None:
            params = self.junction_params()
        if scales is None:
            scales = derive_scales(params)
        if d["kind"] == "cw":
            f_GHz = d["f_signal_GHz"]
            omega = scales.omega_J_star(self.operating["i_b"]) if f_GHz == "auto" else 2e9 * math.pi * float(f_GHz)
            return ContinuousWave(i_mw=d["i_mw_over_i0"], omega_s_norm=omega / scales.omega_J)
        f_GHz = d["f_photon_GHz"]
        omega = scales.omega_J_star(self.operating["i_b"]) if f_GHz == "auto" else 2e9 * math.pi * float(f_GHz)
        return PhotonPulse.create(
            N=d["photons"],
            omega_ph=omega,
            t_ph=d["t_ph_ns"] * 1e-9,
            t_d=d["t_d_ns"] * 1e-9,
            params=params,
            scales=scales,
        )


def _convert(section: str, key: str, raw: str):
    typ = _SCHEMA[section][key]
    try:
        if typ is bool:
            low = raw.strip().lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if typ is str:
            return raw.strip()
        return typ(raw)
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}: {exc}") from exc


def parse_config(text: str) -> ConfigDocument:
    """Parse and validate configuration text; defaults are applied."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc

    sections = {}
    for name in cp.sections():
        if name not in _SCHEMA:
            raise ConfigError(f"unknown section [{name}]; expected one of {sorted(_SCHEMA)}")
        sec = {}
        for key, raw in cp.items(name):
            if key not in _SCHEMA[name]:
                raise ConfigError(
                    f"{name}.{key}: unknown key; allowed keys: {sorted(_SCHEMA[name])}"
                )
            sec[key] = _convert(name, key, raw)
        sections[name] = sec

    for required, keys in (("junction", ("I0_uA", "R_ohm", "C_fF")), ("operating", ("i_b", "T_mK"))):
        if required not in sections:
            raise ConfigError(f"missing required section [{required}]")
        for k in keys:
            if k not in sections[required]:
                raise ConfigError(f"{required}.{k}: required key missing")

    merged = {}
    for name in _SCHEMA:
        sec = dict(_DEFAULTS.get(name, {}))
        sec.update(sections.get(name, {}))
        merged[name] = sec

    kind = merged["drive"].get("kind", "none")
    if kind not in _DRIVE_KEYS:
        raise ConfigError(f"drive.kind: unknown kind {kind!r}; expected none, cw, or pulse")
    given = set(merged["drive"]) - {"kind"}
    allowed = _DRIVE_KEYS[kind]
    extra = given - allowed
    if extra:
        raise ConfigError(f"drive.{sorted(extra)[0]}: not valid for drive.kind={kind}")
    missing = allowed - given
    if missing:
        raise ConfigError(f"drive.{sorted(missing)[0]}: required for drive.kind={kind}")

    doc = ConfigDocument(
        junction=merged["junction"],
        operating=merged["operating"],
        simulation=merged["simulation"],
        noise=merged["noise"],
        drive=merged["drive"],
    )
    _validate(doc)
    return doc


def _validate(doc: ConfigDocument):
    try:
        doc.junction_params()
    except InvalidParameterError as exc:
        raise ConfigError(f"junction: {exc}") from exc
    op = doc.operating
    if not (0.0 <= op["i_b"] < 1.0):
        raise ConfigError(f"operating.i_b: must be in [0, 1), got {op['i_b']}")
    if op["T_mK"] < 0:
        raise ConfigError(f"operating.T_mK: must be >= 0, got {op['T_mK']}")
    try:
        doc.sim_config()
        doc.noise_model()
    except InvalidParameterError as exc:
        raise ConfigError(str(exc)) from exc
    d = doc.drive
    if d["kind"] == "cw" and d["i_mw_over_i0"] < 0:
        raise ConfigError(f"drive.i_mw_over_i0: must be >= 0, got {d['i_mw_over_i0']}")
    if d["kind"] == "pulse":
        if d["photons"] < 0:
            raise ConfigError(f"drive.photons: must be >= 0, got {d['photons']}")
        if d["t_ph_ns"] <= 0:
            raise ConfigError(f"drive.t_ph_ns: must be > 0, got {d['t_ph_ns']}")
    for fkey in ("f_signal_GHz", "f_photon_GHz"):
        if fkey in d and d[fkey] != "auto":
            try:
                val = float(d[fkey])
            except ValueError as exc:
                raise ConfigError(f"drive.{fkey}: expected a number or 'auto', got {d[fkey]!r}") from exc
            if val <= 0:
                raise ConfigError(f"drive.{fkey}: must be > 0, got {val}")


def format_number(x) -> str:
    """Locale-independent numeric text that round-trips doubles exactly."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".17g")


def serialize_config(doc: ConfigDocument) -> str:
    """Stable-ordered INI text; parse(serialize(doc)) equals doc."""
    out = io.StringIO()
    for name in ("junction", "operating", "simulation", "noise", "drive"):
        sec = getattr(doc, name)
        out.write(f"[{name}]\n")
        for key in _SCHEMA[name]:
            if key in sec:
                val = sec[key]
                out.write(f"{key} = {val if isinstance(val, str) else format_number(val)}\n")
        out.write("\n")
    return out.getvalue()
