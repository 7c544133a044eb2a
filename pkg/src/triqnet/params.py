"""Measured device parameters of the triangular network and their containers.

Frequencies are stored as f = omega/2pi in the unit named by the field
(GHz for qubit and channel frequencies, MHz for couplings and the free spectral
range). Times are in microseconds. Dynamics code converts to rad/ns.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

from .errors import UsageError

QUBIT_LABELS = ("A1", "A2", "B1", "B2", "C1", "C2")
# channel key -> (emitting qubit, receiving qubit)
CHANNEL_ENDPOINTS = {
    "a2c1": ("A2", "C1"),
    "c2b2": ("C2", "B2"),
    "b1a1": ("B1", "A1"),
}

SINGLE_QUBIT_GATE_NS = 30.0
CZ_GATE_NS = 31.0
ISWAP_GATE_NS = 22.0


@dataclass(frozen=True)
class QubitParams:
    label: str
    omega_q: float          # GHz
    T1: float               # us
    T2: float               # us (Ramsey)
    F_g: float
    F_e: float
    omega_r: float | None = None
    alpha: float | None = None      # MHz
    chi_ge: float | None = None     # MHz
    tau_rr: float | None = None     # ns
    F_1Q: float | None = None

    def __post_init__(self):
        if not self.T1 > 0:
            raise UsageError(f"{self.label}: T1 must be positive")
        if not 0 < self.T2 <= 2 * self.T1:
            raise UsageError(f"{self.label}: need 0 < T2 <= 2 T1")
        for name in ("F_g", "F_e"):
            v = getattr(self, name)
            if not 0.5 < v <= 1.0:
                raise UsageError(f"{self.label}: {name}={v} outside (0.5, 1]")


@dataclass(frozen=True)
class ChannelParams:
    label: str
    omega_c: float          # GHz, frequency of the central communication mode
    T1: float               # us
    T2: float               # us
    M: int = 5
    omega_FSR: float = 50.0  # MHz
    g1: float = 2.5          # MHz
    g2: float = 3.1          # MHz

    def __post_init__(self):
        if self.M < 1 or self.M % 2 == 0:
            raise UsageError(f"{self.label}: mode count M must be odd and >= 1")
        if self.omega_FSR <= 0:
            raise UsageError(f"{self.label}: free spectral range must be positive")
        if not (0 < self.g1 < self.omega_FSR and 0 < self.g2 < self.omega_FSR):
            raise UsageError(f"{self.label}: couplings must be positive and below the FSR")
        if not self.T1 > 0 or not 0 < self.T2 <= 2 * self.T1:
            raise UsageError(f"{self.label}: need T1 > 0 and 0 < T2 <= 2 T1")


def _q(label, T1, T2, wr, wq, alpha, chi, trr, fg, fe, f1q):
    return QubitParams(label=label, omega_q=wq, T1=T1, T2=T2, F_g=fg, F_e=fe,
                       omega_r=wr, alpha=alpha, chi_ge=chi, tau_rr=trr, F_1Q=f1q)


DEFAULT_QUBITS = {
    q.label: q for q in (
        _q("A1", 13.0, 0.17, 6.055, 5.147, -158, -2.1, 820, 0.98, 0.93, 0.995),
        _q("A2", 7.0, 2.6, 6.008, 4.824, -167, -2.0, 800, 0.97, 0.93, 0.994),
        _q("B1", 15.0, 1.8, 5.978, 4.799, -165, -4.2, 720, 0.99, 0.95, 0.997),
        _q("B2", 12.0, 1.8, 6.045, 5.119, -166, -3.0, 780, 0.98, 0.90, 0.996),
        _q("C1", 13.0, 1.7, 5.976, 4.717, -170, -3.6, 560, 0.99, 0.94, 0.996),
        _q("C2", 10.0, 4.5, 6.049, 5.111, -171, -2.6, 520, 0.99, 0.94, 0.996),
    )
}

DEFAULT_CHANNELS = {
    "a2c1": ChannelParams("a2c1", omega_c=4.743, T1=1.2, T2=2.3),
    "c2b2": ChannelParams("c2b2", omega_c=5.135, T1=1.0, T2=2.0),
    "b1a1": ChannelParams("b1a1", omega_c=4.905, T1=1.0, T2=2.0),
}


def _overlay(obj, vals: dict):
    try:
        return replace(obj, **vals)
    except TypeError as exc:
        raise UsageError(f"{obj.label}: {exc}") from None


# average gate fidelities used for the circuit-tier depolarizing noise
DEFAULT_F_CZ = 0.956


@dataclass
class DeviceParams:
    qubits: dict = field(default_factory=lambda: dict(DEFAULT_QUBITS))
    channels: dict = field(default_factory=lambda: dict(DEFAULT_CHANNELS))
    F_CZ: float = DEFAULT_F_CZ

    def qubit(self, label: str) -> QubitParams:
        try:
            return self.qubits[label]
        except KeyError:
            raise UsageError(f"unknown qubit {label!r}") from None

    def channel(self, label: str) -> ChannelParams:
        try:
            return self.channels[label.lower()]
        except KeyError:
            raise UsageError(f"unknown channel {label!r}; choose from {sorted(self.channels)}") from None

    def endpoints(self, channel: str) -> tuple:
        """(emitter, receiver, channel) parameter triple for a channel key."""
        ch = self.channel(channel)
        a, b = CHANNEL_ENDPOINTS[ch.label]
        return self.qubit(a), self.qubit(b), ch

    def channel_between(self, q1: str, q2: str) -> ChannelParams:
        for key, pair in CHANNEL_ENDPOINTS.items():
            if set(pair) == {q1, q2}:
                return self.channel(key)
        raise UsageError(f"no channel joins {q1} and {q2}")

    def to_dict(self) -> dict:
        return {
            "qubits": {k: {f: v for f, v in asdict(q).items() if f != "label" and v is not None}
                       for k, q in sorted(self.qubits.items())},
            "channels": {k: {f: v for f, v in asdict(c).items() if f != "label"}
                         for k, c in sorted(self.channels.items())},
            "F_CZ": self.F_CZ,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DeviceParams":
        """Overlay ``data`` on the default tables; omitted values keep their defaults."""
        qubits = dict(DEFAULT_QUBITS)
        for label, vals in (data.get("qubits") or {}).items():
            if label not in qubits:
                raise UsageError(f"unknown qubit {label!r} in config")
            qubits[label] = _overlay(qubits[label], vals)
        channels = dict(DEFAULT_CHANNELS)
        for label, vals in (data.get("channels") or {}).items():
            key = label.lower()
            if key not in channels:
                raise UsageError(f"unknown channel {label!r} in config")
            channels[key] = _overlay(channels[key], vals)
        return cls(qubits=qubits, channels=channels, F_CZ=data.get("F_CZ", DEFAULT_F_CZ))
