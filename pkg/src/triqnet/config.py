"""TOML run configuration: device tables, simulation settings and sweep grids.

Any value left out of the file falls back to the built-in device tables.
"""
from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, field

import tomli_w

from .errors import UsageError
from .params import DeviceParams
from .rng import check_seed

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

TIER_CHOICES = ("device", "circuit", "ideal")


def _default_theta():
    return [i * math.pi / 16 for i in range(17)]


def _default_phi():
    return [i * math.pi / 12 for i in range(25)]


@dataclass
class Simulation:
    tier: str = "device"
    dt: float = 0.05
    shots: int = 10000
    rounds: int = 100000
    seed: int = 0
    theta_E: list = field(default_factory=_default_theta)
    phi_A: list = field(default_factory=_default_phi)

    def __post_init__(self):
        if self.tier not in TIER_CHOICES:
            raise UsageError(f"tier must be one of {TIER_CHOICES}")
        if not self.dt > 0:
            raise UsageError("dt must be positive")
        if int(self.shots) < 1 or int(self.rounds) < 1:
            raise UsageError("shots and rounds must be >= 1")
        self.seed = check_seed(self.seed)
        self.shots, self.rounds, self.dt = int(self.shots), int(self.rounds), float(self.dt)
        self.theta_E = [float(t) for t in self.theta_E]
        self.phi_A = [float(p) for p in self.phi_A]
        if not self.theta_E or not self.phi_A:
            raise UsageError("sweep grids must be non-empty")


@dataclass
class Config:
    device: DeviceParams = field(default_factory=DeviceParams)
    simulation: Simulation = field(default_factory=Simulation)

    def to_dict(self) -> dict:
        d = self.device.to_dict()
        return {"qubits": d["qubits"], "channels": d["channels"], "gates": {"F_CZ": d["F_CZ"]},
                "simulation": asdict(self.simulation)}

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        known = {"qubits", "channels", "gates", "simulation"}
        extra = set(data) - known
        if extra:
            raise UsageError(f"unknown config section(s): {sorted(extra)}")
        dev = {"qubits": data.get("qubits"), "channels": data.get("channels")}
        gates = data.get("gates") or {}
        if set(gates) - {"F_CZ"}:
            raise UsageError("the [gates] section only accepts F_CZ")
        if "F_CZ" in gates:
            dev["F_CZ"] = float(gates["F_CZ"])
        try:
            sim = Simulation(**(data.get("simulation") or {}))
        except TypeError as exc:
            raise UsageError(f"[simulation]: {exc}") from None
        return cls(DeviceParams.from_dict(dev), sim)

    def hash(self) -> str:
        """sha256 of the canonical JSON form; independent of key order in the file."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def loads(text: str) -> Config:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"invalid TOML: {exc}") from None
    return Config.from_dict(data)


def load(path) -> Config:
    try:
        with open(path, "rb") as f:
            text = f.read().decode()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    return loads(text)


def dumps(cfg: Config) -> str:
    return tomli_w.dumps(cfg.to_dict())
