"""Gate-level circuits over labelled qubits and the network's composite sequences.

Single-qubit conventions (basis order ``g, e``):

* ``X/2`` is R_x(pi/2): ``|g> -> (|g> - i|e>)/sqrt2``.
* ``Y/2`` is a pi/2 turn about the device Y axis, ``|g> -> (|g> - |e>)/sqrt2``.
  This axis is minus the textbook sigma_y.
* ``RPHI(phi, theta)`` rotates by ``theta`` about (cos phi, sin phi, 0) in the
  same axes, so ``RPHI(pi/2, theta) == RY(theta)``.

Transfers through a channel are ``TransferEvent``s. Their meaning depends on the
tier: two iSWAPs through an ancilla mode (``ideal``/``circuit``) or the
process map of the master-equation model (``device``).
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import device
from .errors import UsageError
from .params import CZ_GATE_NS, SINGLE_QUBIT_GATE_NS, DeviceParams
from .qmath import (I2, SX, SY, SZ, DensityMatrix, apply_unitary, ghz_state, ket,
                    kron, partial_trace)

TIERS = ("ideal", "circuit", "device")
ONE_QUBIT = ("X", "Y", "Z", "X/2", "-X/2", "Y/2", "-Y/2", "RY", "RPHI")
TWO_QUBIT = ("CZ", "ISWAP", "PSWAP")
N_ANGLES = {"RY": 1, "RPHI": 2, "PSWAP": 1}


def rx(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def ry(theta: float) -> np.ndarray:
    """Rotation about the device Y axis: ``|g> -> cos(t/2)|g> - sin(t/2)|e>``."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, s], [-s, c]], dtype=complex)


def rphi(phi: float, theta: float) -> np.ndarray:
    """Rotation by ``theta`` about the equatorial axis at azimuth ``phi``."""
    axis = math.cos(phi) * SX - math.sin(phi) * SY
    return math.cos(theta / 2) * I2 - 1j * math.sin(theta / 2) * axis


def pswap(theta: float) -> np.ndarray:
    """exp(i theta (XX + YY)/2); theta = pi/2 is the iSWAP."""
    c, s = math.cos(theta), math.sin(theta)
    u = np.eye(4, dtype=complex)
    u[1, 1] = u[2, 2] = c
    u[1, 2] = u[2, 1] = 1j * s
    return u


CZ = np.diag([1, 1, 1, -1]).astype(complex)
ISWAP = pswap(math.pi / 2)


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple
    angles: tuple = ()
    dd: bool = False   # dynamical-decoupling pulse, runs concurrently with other gates

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))
        if self.kind in ONE_QUBIT:
            arity = 1
        elif self.kind in TWO_QUBIT:
            arity = 2
        else:
            raise UsageError(f"unknown gate kind {self.kind!r}")
        if len(self.targets) != arity or len(set(self.targets)) != arity:
            raise UsageError(f"{self.kind} needs {arity} distinct target(s), got {self.targets}")
        if len(self.angles) != N_ANGLES.get(self.kind, 0):
            raise UsageError(f"{self.kind} takes {N_ANGLES.get(self.kind, 0)} angle(s)")

    def matrix(self) -> np.ndarray:
        k = self.kind
        if k == "X":
            return rx(math.pi)
        if k == "Y":
            return ry(math.pi)
        if k == "Z":
            return SZ.copy()
        if k in ("X/2", "-X/2"):
            return rx(math.pi / 2 if k == "X/2" else -math.pi / 2)
        if k in ("Y/2", "-Y/2"):
            return ry(math.pi / 2 if k == "Y/2" else -math.pi / 2)
        if k == "RY":
            return ry(self.angles[0])
        if k == "RPHI":
            return rphi(*self.angles)
        if k == "CZ":
            return CZ.copy()
        if k == "ISWAP":
            return ISWAP.copy()
        return pswap(self.angles[0])


@dataclass(frozen=True)
class NoiseEvent:
    """Explicit noise on ``targets``: T1/T_phi damping for ``duration`` ns, then depolarizing ``p``."""
    targets: tuple
    duration: float = 0.0
    gamma1: float = 0.0      # 1/ns
    gamma_phi: float = 0.0   # 1/ns, coherence decay rate from pure dephasing
    p: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        if not self.targets:
            raise UsageError("noise event needs a target")
        if self.duration < 0 or self.gamma1 < 0 or self.gamma_phi < 0:
            raise UsageError("noise duration and rates must be non-negative")
        if not 0.0 <= self.p <= 1.0:
            raise UsageError("depolarizing probability must lie in [0, 1]")


@dataclass(frozen=True)
class TransferEvent:
    """State transfer from ``src`` to ``dst`` through a channel; ``half`` selects ST/2."""
    src: str
    dst: str
    half: bool = False
    channel: str | None = None

    def __post_init__(self):
        if self.src == self.dst:
            raise UsageError("transfer needs distinct endpoints")

    @property
    def targets(self) -> tuple:
        return (self.src, self.dst)


@dataclass(frozen=True)
class Barrier:
    """Named cut; ``run_circuit(..., snapshots=True)`` records the state here."""
    label: str
    targets: tuple = ()


@dataclass(frozen=True)
class Circuit:
    qubits: tuple
    events: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))
        object.__setattr__(self, "events", tuple(self.events))
        if len(set(self.qubits)) != len(self.qubits):
            raise UsageError("duplicate qubit labels")
        known = set(self.qubits)
        for ev in self.events:
            bad = [t for t in ev.targets if t not in known]
            if bad:
                raise UsageError(f"event {ev} targets unknown qubit(s) {bad}")

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.qubits != self.qubits:
            raise UsageError("cannot concatenate circuits over different registers")
        return Circuit(self.qubits, self.events + other.events)

    def without_dd(self) -> "Circuit":
        return Circuit(self.qubits, [e for e in self.events if not getattr(e, "dd", False)])

    def to_text(self) -> str:
        lines = ["QUBITS " + " ".join(self.qubits)]
        for ev in self.events:
            if isinstance(ev, Gate):
                parts = [ev.kind, ",".join(ev.targets)] + [repr(a) for a in ev.angles]
                if ev.dd:
                    parts.append("dd")
            elif isinstance(ev, TransferEvent):
                parts = ["ST/2" if ev.half else "ST", f"{ev.src},{ev.dst}"]
                if ev.channel:
                    parts.append(ev.channel)
            elif isinstance(ev, NoiseEvent):
                parts = ["NOISE", ",".join(ev.targets), repr(ev.duration), repr(ev.gamma1),
                         repr(ev.gamma_phi), repr(ev.p)]
            else:
                parts = ["BARRIER", ev.label]
            lines.append(" ".join(parts))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Circuit":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if not lines or not lines[0].startswith("QUBITS"):
            raise UsageError("circuit text must start with a QUBITS line")
        qubits = lines[0].split()[1:]
        events = []
        for ln in lines[1:]:
            kind, *rest = ln.split()
            try:
                if kind in ("ST", "ST/2"):
                    src, dst = rest[0].split(",")
                    events.append(TransferEvent(src, dst, kind == "ST/2", rest[1] if len(rest) > 1 else None))
                elif kind == "NOISE":
                    events.append(NoiseEvent(tuple(rest[0].split(",")), *map(float, rest[1:5])))
                elif kind == "BARRIER":
                    events.append(Barrier(rest[0]))
                else:
                    dd = bool(rest) and rest[-1] == "dd"
                    if dd:
                        rest = rest[:-1]
                    events.append(Gate(kind, tuple(rest[0].split(",")), tuple(map(float, rest[1:])), dd))
            except (IndexError, ValueError) as exc:
                raise UsageError(f"cannot parse circuit line {ln!r}: {exc}") from None
        return cls(tuple(qubits), tuple(events))


# --- channels on raw n-qubit matrices ---------------------------------------

def _kraus(rho, ks, targets, n):
    return sum(apply_unitary(rho, k, targets, n) for k in ks)


def _idle(rho, q, n, t_ns, gamma1, gamma_phi):
    if t_ns <= 0:
        return rho
    if gamma1 > 0:
        g = 1.0 - math.exp(-gamma1 * t_ns)
        rho = _kraus(rho, [np.array([[1, 0], [0, math.sqrt(1 - g)]]),
                           np.array([[0, math.sqrt(g)], [0, 0]])], [q], n)
    if gamma_phi > 0:
        p = 0.5 * (1.0 - math.exp(-gamma_phi * t_ns))
        rho = _kraus(rho, [math.sqrt(1 - p) * I2, math.sqrt(p) * SZ], [q], n)
    return rho


def _depolarize(rho, targets, n, p):
    if p <= 0:
        return rho
    paulis = [I2, SX, SY, SZ]
    k = len(targets)
    twirl = 0
    for idx in np.ndindex(*(4,) * k):
        twirl = twirl + apply_unitary(rho, kron(*[paulis[i] for i in idx]), targets, n)
    return (1 - p) * rho + p * twirl / 4 ** k


def depolarizing_p(fidelity: float, d: int) -> float:
    """Depolarizing probability with average gate fidelity ``fidelity`` on dimension ``d``."""
    return (1.0 - fidelity) * d / (d - 1)


def _rates_us(T1, T2):
    t1, t2 = T1 * 1e3, T2 * 1e3
    return 1.0 / t1, max(1.0 / t2 - 0.5 / t1, 0.0)


# --- execution ----------------------------------------------------------------

def apply_gate(state: DensityMatrix, g: Gate, qubits=None) -> DensityMatrix:
    """Noiseless ``U rho U^dagger`` for gate ``g`` on a register labelled ``qubits``.

    ``qubits`` defaults to ``("q0", "q1", ...)``.
    """
    n = len(state.dims)
    if any(d != 2 for d in state.dims):
        raise UsageError("gates act on qubit registers only")
    labels = tuple(qubits) if qubits is not None else tuple(f"q{i}" for i in range(n))
    if len(labels) != n:
        raise UsageError(f"{len(labels)} labels for {n} qubits")
    try:
        idx = [labels.index(t) for t in g.targets]
    except ValueError:
        raise UsageError(f"gate targets {g.targets} not in register {labels}") from None
    out = apply_unitary(state.matrix, g.matrix(), idx, n)
    return DensityMatrix(0.5 * (out + out.conj().T), state.dims)


def cnot(control: str, target: str, dd: tuple = ()) -> list:
    """CNOT as Y/2 (target), CZ, -Y/2 (target) in time order.

    Labels in ``dd`` receive one decoupling X alongside each of the three gates.
    """
    if control == target:
        raise UsageError("cnot needs distinct qubits")
    out = []
    for g in (Gate("Y/2", (target,)), Gate("CZ", (control, target)), Gate("-Y/2", (target,))):
        out.append(g)
        out.extend(Gate("X", (q,), dd=True) for q in dd)
    return out


@functools.lru_cache(maxsize=16)
def _device_map(q_emit, q_recv, ch, half, dt):
    return device.transfer_process(q_emit, q_recv, ch, 0.5 if half else 1.0, dt=dt)


class _Runner:
    def __init__(self, qubits, tier, params, dt):
        if tier not in TIERS:
            raise UsageError(f"unknown tier {tier!r}; choose from {TIERS}")
        self.qubits = qubits
        self.n = len(qubits)
        self.tier = tier
        self.params = params if params is not None else DeviceParams()
        self.dt = dt

    @property
    def noisy(self):
        return self.tier != "ideal"

    def rates(self, q):
        p = self.params.qubit(q)
        return _rates_us(p.T1, p.T2)

    def idle_all(self, rho, t_ns, n=None, skip=()):
        n = self.n if n is None else n
        for i, q in enumerate(self.qubits):
            if q not in skip:
                rho = _idle(rho, i, n, t_ns, *self.rates(q))
        return rho

    def gate(self, rho, g):
        idx = [self.qubits.index(t) for t in g.targets]
        rho = apply_unitary(rho, g.matrix(), idx, self.n)
        if not self.noisy or g.kind == "Z":  # Z is a frame update
            return rho
        if len(idx) == 1:
            f1 = self.params.qubit(g.targets[0]).F_1Q or 1.0
            rho = _depolarize(rho, idx, self.n, depolarizing_p(f1, 2))
        else:
            rho = _depolarize(rho, idx, self.n, depolarizing_p(self.params.F_CZ, 4))
        if not g.dd:
            # the measured gate fidelity already covers decoherence of the targets
            rho = self.idle_all(rho, SINGLE_QUBIT_GATE_NS if len(idx) == 1 else CZ_GATE_NS,
                                skip=g.targets)
        return rho

    def channel_for(self, ev):
        if ev.channel:
            return self.params.channel(ev.channel)
        return self.params.channel_between(ev.src, ev.dst)

    def transfer_time(self, ev):
        ch = self.channel_for(ev)
        return device.swap_time(ch.g1, 0.5 if ev.half else 1.0) + device.receive_time(ch)

    def transfer(self, rho, ev):
        s, t = self.qubits.index(ev.src), self.qubits.index(ev.dst)
        if self.tier == "device":
            return self._transfer_device(rho, ev, s, t)
        n1 = self.n + 1
        big = np.kron(rho, np.diag([1.0, 0.0]))
        big = apply_unitary(big, pswap(math.pi / 4 if ev.half else math.pi / 2), [s, self.n], n1)
        big = apply_unitary(big, ISWAP, [self.n, t], n1)
        out = partial_trace(big, list(range(self.n)), dims=(2,) * n1).matrix
        if self.noisy:
            out = self.idle_all(out, self.transfer_time(ev), skip=ev.targets)
        return out

    def _transfer_device(self, rho, ev, s, t):
        ch = self.channel_for(ev)
        p_emit, p_recv = self.params.qubit(ev.src), self.params.qubit(ev.dst)
        tmap = _device_map(p_emit, p_recv, ch, ev.half, self.dt)
        n = self.n
        rest = [k for k in range(n) if k not in (s, t)]
        tt = rho.reshape((2,) * (2 * n)).transpose([s, t] + rest + [n + s, n + t] + [n + k for k in rest])
        dr = 2 ** len(rest)
        tt = tt.reshape(2, 2, dr, 2, 2, dr)
        if np.max(np.abs(tt[:, 1, :, :, 1, :]), initial=0.0) > 1e-9:
            raise UsageError(f"device-tier transfer needs {ev.dst} in |g>")
        out = np.zeros((4, dr, 4, dr), dtype=complex)
        for a in (0, 1):
            for b in (0, 1):
                out += np.einsum("ij,kl->ikjl", tmap[a, b], tt[a, 0, :, b, 0, :])
        out = out.reshape([2, 2] + [2] * len(rest) + [2, 2] + [2] * len(rest))
        inv = np.argsort([s, t] + rest)
        out = out.transpose(list(inv) + [n + i for i in inv]).reshape(2 ** n, 2 ** n)
        return self.idle_all(out, self.transfer_time(ev), skip=ev.targets)

    def noise(self, rho, ev):
        idx = [self.qubits.index(q) for q in ev.targets]
        for i in idx:
            rho = _idle(rho, i, self.n, ev.duration, ev.gamma1, ev.gamma_phi)
        return _depolarize(rho, idx, self.n, ev.p)


def run_circuit(circuit: Circuit, tier: str = "ideal", params: DeviceParams | None = None,
                rho0: DensityMatrix | None = None, dt: float = device.DEFAULT_DT,
                snapshots: bool = False):
    """Execute ``circuit`` from ``rho0`` (default all ``|g>``).

    ``tier`` is ``ideal`` (unitary), ``circuit`` (depolarizing gate errors plus
    T1/T2 idling, transfers as sliced iSWAPs through a lossy mode) or ``device``
    (as ``circuit`` but transfers use the master-equation process map). Returns
    the final state, plus a dict of Barrier snapshots when ``snapshots`` is set.
    """
    n = len(circuit.qubits)
    if rho0 is None:
        rho = np.outer(ket("g" * n), ket("g" * n).conj())
    else:
        if rho0.dims != (2,) * n:
            raise UsageError(f"initial state dims {rho0.dims} do not match {n} qubits")
        rho = np.array(rho0.matrix)
    r = _Runner(circuit.qubits, tier, params, dt)
    snaps = {}
    for ev in circuit.events:
        if isinstance(ev, Gate):
            rho = r.gate(rho, ev)
        elif isinstance(ev, TransferEvent):
            rho = r.transfer(rho, ev)
        elif isinstance(ev, NoiseEvent):
            rho = r.noise(rho, ev)
        else:
            snaps[ev.label] = _finish(rho, n)
    final = _finish(rho, n)
    return (final, snaps) if snapshots else final


def _finish(rho, n):
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho / np.trace(rho).real, (2,) * n)


def _reduce(rho: DensityMatrix, qubits, keep) -> DensityMatrix:
    return partial_trace(rho, [qubits.index(q) for q in keep])


# --- composite sequences ------------------------------------------------------

def bell_circuit(emitter: str = "A2", receiver: str = "C1", channel: str | None = None) -> Circuit:
    """X on the emitter then ST/2: ``(|eg> - |ge>)/sqrt2`` on (emitter, receiver)."""
    return Circuit((emitter, receiver), (Gate("X", (emitter,)),
                                         TransferEvent(emitter, receiver, True, channel)))


SWAP_QUBITS = ("C1", "C2", "A2", "B2")


def swap_circuit(variant: str = "X/2") -> Circuit:
    """Entanglement swapping on ``|C1 C2 A2 B2>`` up to the final C1C2 readout."""
    if variant not in ("X/2", "Y/2"):
        raise UsageError("variant must be 'X/2' or 'Y/2'")
    ev = [Gate("X", ("A2",)), TransferEvent("A2", "C1", True, "a2c1"),
          Gate("X", ("B2",)), TransferEvent("B2", "C2", True, "c2b2"),
          Barrier("bell_pairs")]
    ev += cnot("C1", "C2")
    ev.append(Barrier("after_cnot"))
    ev.append(Gate(variant, ("C1",)))
    for _ in range(3):
        ev += [Gate("X", ("A2",), dd=True), Gate("X", ("B2",), dd=True)]
    return Circuit(SWAP_QUBITS, ev)


def swap_targets(variant: str = "X/2") -> dict:
    """Expected ``|A2 B2>`` state (amplitudes) per ``C1 C2`` outcome."""
    s = 1 / math.sqrt(2)
    if variant == "X/2":
        return {"gg": s * (ket("gg") - 1j * ket("ee")), "ge": s * (ket("ge") - 1j * ket("eg")),
                "eg": s * (ket("gg") + 1j * ket("ee")), "ee": s * (ket("ge") + 1j * ket("eg"))}
    if variant == "Y/2":
        return {"gg": s * (ket("gg") + ket("ee")), "ge": s * (ket("ge") + ket("eg")),
                "eg": s * (ket("gg") - ket("ee")), "ee": s * (ket("eg") - ket("ge"))}
    raise UsageError("variant must be 'X/2' or 'Y/2'")


def run_swap_protocol(tier: str = "ideal", variant: str = "X/2",
                      params: DeviceParams | None = None, dt: float = device.DEFAULT_DT) -> dict:
    """Outcome ``mn`` of ``C1 C2`` -> (probability, conditional state of ``A2 B2``)."""
    rho = run_circuit(swap_circuit(variant), tier, params, dt=dt)
    t = rho.matrix.reshape(4, 4, 4, 4)  # (C1C2, A2B2) x (C1C2, A2B2)
    out = {}
    for k, label in enumerate(("gg", "ge", "eg", "ee")):
        block = t[k, :, k, :]
        p = float(np.trace(block).real)
        cond = DensityMatrix(0.5 * (block + block.conj().T) / p, (2, 2)) if p > 1e-12 else None
        out[label] = (p, cond)
    return out


GHZ3_STAGE1 = ("A2", "C1", "C2")
GHZ3_QUBITS = ("A2", "C1", "B2")
GHZ5_QUBITS = ("A2", "C1", "C2", "B2", "B1")


def ghz3_circuit(dd: bool = True) -> Circuit:
    """GHZ-3 sequence on ``A2 C1 C2 B2``; the Barrier ``A2C1C2`` marks the first stage."""
    ev = [Gate("X", ("A2",)), TransferEvent("A2", "C1", True, "a2c1")]
    ev += cnot("C1", "C2", dd=("A2",) if dd else ())
    if not dd:
        ev.append(Gate("X", ("A2",)))
    ev.append(Barrier("A2C1C2"))
    if dd:
        ev += [Gate("X", (q,), dd=True) for q in ("A2", "C1", "A2", "C1")]
    ev.append(TransferEvent("C2", "B2", False, "c2b2"))
    if dd:
        ev += [Gate("X", (q,), dd=True) for q in ("A2", "C1", "A2", "C1")]
    return Circuit(("A2", "C1", "C2", "B2"), ev)


def ghz5_circuit(dd: bool = True) -> Circuit:
    """GHZ-3 on ``A2 C1 B2`` followed by CNOT(C1->C2) and CNOT(B2->B1)."""
    base = ghz3_circuit(dd)
    ev = list(base.events) + [Barrier("A2C1B2")]
    ev += cnot("C1", "C2")
    ev += cnot("B2", "B1")
    if dd:
        ev += [Gate("X", ("A2",), dd=True)] * 2
    return Circuit(GHZ5_QUBITS, ev)


def run_ghz3(tier: str = "ideal", params: DeviceParams | None = None, dd: bool = True,
             dt: float = device.DEFAULT_DT, intermediate: bool = False):
    """GHZ state on ``A2 C1 B2``; with ``intermediate`` also the ``A2 C1 C2`` stage."""
    c = ghz3_circuit(dd)
    rho, snaps = run_circuit(c, tier, params, dt=dt, snapshots=True)
    final = _reduce(rho, c.qubits, GHZ3_QUBITS)
    if intermediate:
        return final, _reduce(snaps["A2C1C2"], c.qubits, GHZ3_STAGE1)
    return final


def run_ghz5(tier: str = "ideal", params: DeviceParams | None = None, dd: bool = True,
             dt: float = device.DEFAULT_DT) -> DensityMatrix:
    """Five-qubit GHZ state on ``A2 C1 C2 B2 B1``."""
    return run_circuit(ghz5_circuit(dd), tier, params, dt=dt)


def apply_attack(rho: DensityMatrix, theta_E: float) -> DensityMatrix:
    """Eve's entangle-and-measure step: RY(theta_E) on Eve, then CZ(Bob, Eve).

    ``rho`` is over ``A2 C1 B2`` (Eve appended in ``|g>``) or ``A2 C1 B2 E``.
    Returns the four-qubit state.
    """
    if not 0.0 <= theta_E <= math.pi + 1e-12:
        raise UsageError("theta_E must lie in [0, pi]")
    if rho.dims == (2, 2, 2):
        m = np.kron(rho.matrix, np.diag([1.0, 0.0]))
    elif rho.dims == (2, 2, 2, 2):
        eve = partial_trace(rho, [3]).matrix
        if eve[1, 1].real > 1e-12:
            raise UsageError("Eve must start in |g>")
        m = np.array(rho.matrix)
    else:
        raise UsageError(f"attack needs 3 or 4 qubits, got dims {rho.dims}")
    m = apply_unitary(m, ry(theta_E), [3], 4)
    m = apply_unitary(m, CZ, [2, 3], 4)
    return DensityMatrix(0.5 * (m + m.conj().T), (2, 2, 2, 2))


def attack_state(theta_E: float, base: DensityMatrix | None = None) -> DensityMatrix:
    """Protocol state ``A2 C1 B2`` after the attack with Eve traced out."""
    base = base if base is not None else ghz_state(3).density()
    return partial_trace(apply_attack(base, theta_E), [0, 1, 2])
