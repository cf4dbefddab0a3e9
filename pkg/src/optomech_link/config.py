"""Run configuration: JSON parsing, defaults and validation."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .gaussian import thermal_occupation
from .sideband import DeviceParams

PROTOCOLS = ("epr", "teleport", "transfer", "optimize", "oracle")
DAMPING_VALUES = [1e-7, 1e-6, 2.5e-6, 5e-6, 1e-5]

DEFAULTS = {
    "device": {
        "omega_m_hz": 1e9,
        "kappa_over_omega_m": 0.1,
        "coupling_over_kappa": 0.05,
        "gamma_over_omega_m": 1e-7,
    },
    "environment": {"temperature_K": 2.0},
    "epr": {"r": "optimized", "gamma_over_omega_m_values": DAMPING_VALUES},
    "teleport": {
        "eta": 0.99,
        "x_in": float(np.sqrt(50.0)),
        "p_in": 0.0,
        "r": "optimized",
        "objective": "min_epr",
        "gamma_over_omega_m_values": DAMPING_VALUES,
    },
    "transfer": {"mu_S": 0.05, "mu_R": 0.22, "tau_kappa": 4000.0, "table": "weights"},
    "optimize": {
        "target": "r_opt",
        "objective": "min_epr",
        "eta": 0.99,
        "x_in": float(np.sqrt(50.0)),
        "tau_kappa": 4000.0,
        "gamma_over_omega_m_values": DAMPING_VALUES,
    },
    "oracle": {
        "sidebands": ["red", "blue"],
        "G_tau": 1.0,
        "coupling_over_kappa_values": [0.05, 0.025],
        "kappa_dt": 0.02,
        "extrapolate": True,
        "k_bound_factor": {"red": 2.0, "blue": 12.0},
        "n_bound_factor": {"red": 2.0, "blue": 12.0},
        "gamma_bound_factor": 0.2,
        "defect_bound": 1e-8,
        "residual_floor": 1e-6,
    },
}

DEFAULT_SWEEPS = {
    "epr": {"name": "r", "min": 0.0, "max": 5.0, "points": 51, "scale": "linear"},
    "teleport": {"name": "x_in", "min": 0.0, "max": 10.0, "points": 41, "scale": "linear"},
    "transfer": {"name": "tau_kappa", "min": 0.0, "max": 4000.0, "points": 41, "scale": "linear"},
}

SWEEP_AXES = {
    "epr": ("r", "temperature_K"),
    "teleport": ("x_in", "temperature_K"),
    "transfer": ("tau_kappa", "gamma_over_omega_m"),
    "optimize": (),
    "oracle": (),
}

DESCRIPTIONS = {
    "device.omega_m_hz": "mechanical frequency in Hz (converted by 2 pi)",
    "device.kappa_over_omega_m": "cavity decay rate over the mechanical frequency",
    "device.coupling_over_kappa": "linearized coupling g0*beta over kappa",
    "device.gamma_over_omega_m": "mechanical damping rate over the mechanical frequency",
    "environment": "either temperature_K or n_T (thermal occupation)",
    "epr.r": "squeezing parameter for temperature sweeps, or 'optimized' per damping value",
    "teleport.r": "squeezing parameter, or 'optimized' with teleport.objective",
    "teleport.objective": "min_epr | max_fidelity",
    "transfer.tau_kappa": "pulse duration in units of 1/kappa",
    "transfer.table": "weights | pulse_shape",
    "optimize.target": "r_opt | pulse_params",
    "oracle.k_bound_factor": "allowed max |K residual| in units of (g0*beta/kappa)^2",
    "oracle.n_bound_factor": "allowed max |N residual| in units of (g0*beta/kappa)^2 (2 n_T + 1)",
    "oracle.gamma_bound_factor": "weight of gamma/G (times max |K|) added to (g0*beta/kappa)^2 in the bounds",
    "oracle.defect_bound": "allowed commutator defect of the simulated evolution",
    "oracle.residual_floor": "discretization allowance added to both residual bounds",
    "optimize.eta": "displacement efficiency used by the max_fidelity objective",
    "optimize.x_in": "input displacement used by the max_fidelity objective",
    "sweep": "{name, min, max, points, scale: linear|log}; optional",
}


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass(frozen=True)
class RunConfig:
    protocol: str
    device: dict
    environment: dict
    block: dict
    sweep: dict | None
    raw: dict

    @property
    def omega_m(self) -> float:
        return 2.0 * np.pi * self.device["omega_m_hz"]

    def device_params(self, **overrides) -> DeviceParams:
        d = {**self.device, **overrides}
        return DeviceParams.from_ratios(
            self.omega_m,
            d["kappa_over_omega_m"],
            d["coupling_over_kappa"],
            d["gamma_over_omega_m"],
        )

    def occupation(self, temperature: float | None = None) -> float:
        if temperature is not None:
            return thermal_occupation(self.omega_m, temperature)
        if "n_T" in self.environment:
            return float(self.environment["n_T"])
        return thermal_occupation(self.omega_m, self.environment["temperature_K"])

    def sweep_values(self) -> np.ndarray | None:
        if self.sweep is None:
            return None
        s = self.sweep
        if s["scale"] == "log":
            return np.logspace(np.log10(s["min"]), np.log10(s["max"]), s["points"])
        return np.linspace(s["min"], s["max"], s["points"])

    def digest(self) -> str:
        return config_hash(self.raw)


def config_hash(raw: dict) -> str:
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _positive(name, value):
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not value > 0:
        raise ConfigError(f"{name} must be a positive number, got {value!r}")


def _merged(defaults: dict, given: dict, where: str) -> dict:
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    out = copy.deepcopy(defaults)
    out.update(given)
    return out


def parse_config(doc: dict | None, protocol: str) -> RunConfig:
    """Validate a config document for ``protocol`` and fill in defaults."""
    if protocol not in PROTOCOLS:
        raise ConfigError(f"unknown protocol {protocol!r}")
    doc = {} if doc is None else doc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    allowed = {"device", "environment", "sweep", *PROTOCOLS}
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")

    blocks = [p for p in PROTOCOLS if p in doc]
    if len(blocks) > 1:
        raise ConfigError(f"exactly one protocol block allowed, found {blocks}")
    if blocks and blocks[0] != protocol:
        raise ConfigError(f"config has a {blocks[0]!r} block but the command is {protocol!r}")

    device = _merged(DEFAULTS["device"], doc.get("device", {}), "device")
    for key, value in device.items():
        _positive(f"device.{key}", value)

    env = doc.get("environment", DEFAULTS["environment"])
    if not isinstance(env, dict) or len(env) != 1 or not set(env) <= {"temperature_K", "n_T"}:
        raise ConfigError("environment must hold exactly one of temperature_K or n_T")
    (env_key, env_value), = env.items()
    if not isinstance(env_value, (int, float)) or env_value < 0:
        raise ConfigError(f"environment.{env_key} must be non-negative")

    block = _merged(DEFAULTS[protocol], doc.get(protocol, {}), protocol)
    _check_block(protocol, block)

    sweep = doc.get("sweep", DEFAULT_SWEEPS.get(protocol))
    if sweep is not None:
        sweep = _check_sweep(protocol, sweep)

    raw = {
        "protocol": protocol,
        "device": device,
        "environment": env,
        protocol: block,
        "sweep": sweep,
    }
    return RunConfig(protocol, device, env, block, sweep, raw)


def _check_block(protocol: str, block: dict) -> None:
    for key in ("gamma_over_omega_m_values", "coupling_over_kappa_values"):
        if key in block:
            values = block[key]
            if not isinstance(values, list) or not values:
                raise ConfigError(f"{protocol}.{key} must be a non-empty list")
            for v in values:
                if not isinstance(v, (int, float)) or v < 0:
                    raise ConfigError(f"{protocol}.{key} entries must be non-negative")
    if protocol in ("epr", "teleport"):
        r = block["r"]
        if r != "optimized" and (not isinstance(r, (int, float)) or r < 0):
            raise ConfigError(f"{protocol}.r must be 'optimized' or a non-negative number")
    if protocol == "teleport":
        if not 0 <= block["eta"] <= 1:
            raise ConfigError("teleport.eta must lie in [0, 1]")
        if block["objective"] not in ("min_epr", "max_fidelity"):
            raise ConfigError("teleport.objective must be min_epr or max_fidelity")
    if protocol == "transfer":
        for key in ("mu_S", "mu_R", "tau_kappa"):
            _positive(f"transfer.{key}", block[key])
        if block["table"] not in ("weights", "pulse_shape"):
            raise ConfigError("transfer.table must be weights or pulse_shape")
    if protocol == "optimize":
        if block["target"] not in ("r_opt", "pulse_params"):
            raise ConfigError("optimize.target must be r_opt or pulse_params")
        if block["objective"] not in ("min_epr", "max_fidelity"):
            raise ConfigError("optimize.objective must be min_epr or max_fidelity")
        _positive("optimize.tau_kappa", block["tau_kappa"])
    if protocol == "oracle":
        if not set(block["sidebands"]) <= {"red", "blue"} or not block["sidebands"]:
            raise ConfigError("oracle.sidebands must list red and/or blue")
        _positive("oracle.G_tau", block["G_tau"])
        _positive("oracle.kappa_dt", block["kappa_dt"])
        if not block["gamma_bound_factor"] >= 0:
            raise ConfigError("oracle.gamma_bound_factor must be non-negative")
        if block["kappa_dt"] >= 0.05:
            raise ConfigError("oracle.kappa_dt must stay below 0.05")
        for key in ("k_bound_factor", "n_bound_factor"):
            if set(block[key]) != {"red", "blue"}:
                raise ConfigError(f"oracle.{key} needs red and blue entries")


def _check_sweep(protocol: str, sweep) -> dict:
    if not isinstance(sweep, dict):
        raise ConfigError("sweep must be an object")
    sweep = _merged({"name": None, "min": None, "max": None, "points": None, "scale": "linear"}, sweep, "sweep")
    if sweep["name"] not in SWEEP_AXES[protocol]:
        raise ConfigError(
            f"sweep axis {sweep['name']!r} is not valid for {protocol}; "
            f"choose from {list(SWEEP_AXES[protocol])}"
        )
    for key in ("min", "max"):
        if not isinstance(sweep[key], (int, float)) or sweep[key] < 0:
            raise ConfigError(f"sweep.{key} must be a non-negative number")
    if sweep["max"] < sweep["min"]:
        raise ConfigError("sweep.max must not be below sweep.min")
    if not isinstance(sweep["points"], int) or sweep["points"] < 1:
        raise ConfigError("sweep.points must be a positive integer")
    if sweep["scale"] not in ("linear", "log"):
        raise ConfigError("sweep.scale must be linear or log")
    if sweep["scale"] == "log" and sweep["min"] <= 0:
        raise ConfigError("a log sweep needs a positive minimum")
    return sweep


def load_config(path: str | None, protocol: str) -> RunConfig:
    if path is None:
        return parse_config(None, protocol)
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(doc, protocol)


def describe() -> dict:
    """Schema summary with every default, as printed by ``describe``."""
    return {
        "protocols": list(PROTOCOLS),
        "defaults": DEFAULTS,
        "default_sweeps": DEFAULT_SWEEPS,
        "sweep_axes": {k: list(v) for k, v in SWEEP_AXES.items()},
        "fields": DESCRIPTIONS,
    }
