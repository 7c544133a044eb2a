"""GHZ-based secret sharing between Alice (A2), Charlie (C1) and Bob (B2).

Register order is (Alice, Charlie, Bob). Each party measures along x or y by a
pi/2 rotation ``RPHI(phi)`` followed by a Z readout: x is phi = pi/2, y is
phi = 0. A round is kept when the number of y choices is even; Charlie and Bob
then infer Alice's bit from the GHZ correlations <XXX> = +1 and
<XYY> = <YXY> = <YYX> = -1.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import rng as rngmod
from .circuits import attack_state, apply_attack, rphi, run_ghz3
from .errors import UsageError
from .measurement import ReadoutModel, apply_readout, rotate
from .privacy import cq_from_measurement, dw_bound, privacy_bound
from .qmath import (DensityMatrix, expectation, fidelity_pure, ghz_state, linear_entropy,
                    partial_trace, pauli_string, trace_norm)

BASES = "xy"
BASIS_PHI = {"x": math.pi / 2, "y": 0.0}
QBER_THRESHOLD = 0.25
PARTIES = ("A", "C", "B")
ALL_X_OUTCOMES = tuple("".join(b) for b in itertools.product("01", repeat=3))
BLUE = ("000", "011", "101", "110")


@dataclass(frozen=True)
class AttackConfig:
    theta_E: float = 0.0
    enabled: bool = False

    def __post_init__(self):
        if not 0.0 <= self.theta_E <= math.pi + 1e-12:
            raise UsageError("theta_E must lie in [0, pi]")


@dataclass(frozen=True)
class RoundRecord:
    index: int
    bases: str        # e.g. "xyy", in party order A, C, B
    bits: tuple
    kept: bool

    def to_json(self) -> str:
        return json.dumps({"round": self.index, "bases": self.bases, "bits": list(self.bits),
                           "sift": "kept" if self.kept else "discarded"}, separators=(",", ":"))


def is_kept(bases: str) -> bool:
    return bases.count("y") % 2 == 0


def decode(bases: str, b: int, c: int) -> int:
    """Charlie and Bob's guess of Alice's bit for a kept round."""
    return b ^ c if bases == "xxx" else b ^ c ^ 1


@dataclass
class RoundLog:
    """Column storage for many rounds; ``basis`` and ``bits`` are (n, 3) int arrays."""
    basis: np.ndarray
    bits: np.ndarray

    def __len__(self):
        return len(self.basis)

    def __iter__(self):
        for i in range(len(self)):
            yield self.record(i)

    def record(self, i: int) -> RoundRecord:
        bases = "".join(BASES[k] for k in self.basis[i])
        return RoundRecord(i, bases, tuple(int(b) for b in self.bits[i]), is_kept(bases))

    @property
    def kept(self) -> np.ndarray:
        return self.basis.sum(axis=1) % 2 == 0

    def to_jsonl(self) -> str:
        return "".join(r.to_json() + "\n" for r in self)


@dataclass
class KeyReport:
    rounds_total: int
    rounds_sifted: int
    qber: float
    qber_stderr: float
    error_raw: float
    all_x_probs: dict = field(default_factory=dict)
    verdict: str = "clean"
    estimation_error: bool = False
    threshold: float = QBER_THRESHOLD

    def to_json(self) -> str:
        d = asdict(self)
        for k in ("qber", "qber_stderr", "error_raw"):
            if not math.isfinite(d[k]):
                d[k] = None
        return json.dumps(d, sort_keys=True, indent=2)


def combo_distributions(rho: DensityMatrix, readout: ReadoutModel | None = None) -> dict:
    """Outcome distribution (8 entries) for every basis triple such as ``"xyx"``."""
    if rho.dims != (2, 2, 2):
        raise UsageError(f"secret sharing needs 3 qubits, got dims {rho.dims}")
    out = {}
    for combo in itertools.product(BASES, repeat=3):
        r = rotate(rho, [rphi(BASIS_PHI[b], math.pi / 2) for b in combo])
        p = np.clip(np.real(np.diag(r.matrix)), 0.0, None)
        out["".join(combo)] = apply_readout(p / p.sum(), readout)
    return out


def _bits_of(k):
    return (k >> 2) & 1, (k >> 1) & 1, k & 1


def analytic_qber(rho: DensityMatrix, readout: ReadoutModel | None = None) -> float:
    """Sifted QBER computed directly from the state (all kept combos equally likely)."""
    dist = combo_distributions(rho, readout)
    errs = []
    for combo, p in dist.items():
        if not is_kept(combo):
            continue
        e = 0.0
        for k in range(8):
            a, c, b = _bits_of(k)
            if decode(combo, b, c) != a:
                e += p[k]
        errs.append(e)
    return float(np.mean(errs))


def run_rounds(n: int, rho: DensityMatrix, readout: ReadoutModel | None = None, seed: int = 0,
               experiment: str = "qss", workers: int | None = None) -> RoundLog:
    """Simulate ``n`` independent rounds, each on a fresh copy of ``rho``.

    Rounds are grouped into fixed blocks of 1024 that draw from their own
    counter-based stream, so the log does not depend on ``workers``.
    """
    if int(n) < 1:
        raise UsageError("need at least one round")
    n = int(n)
    dist = combo_distributions(rho, readout)
    cdf = np.stack([np.cumsum(dist["".join(c)]) for c in itertools.product(BASES, repeat=3)])
    cdf[:, -1] = 1.0
    size = rngmod.BLOCK_SIZE
    n_blocks = -(-n // size)

    def block(b):
        g = rngmod.stream(seed, experiment, b)
        m = min(size, n - b * size)
        basis = g.integers(0, 2, size=(m, 3))
        u = g.random(m)
        combo = basis[:, 0] * 4 + basis[:, 1] * 2 + basis[:, 2]
        outcome = (u[:, None] > cdf[combo]).sum(axis=1)
        bits = np.stack([(outcome >> 2) & 1, (outcome >> 1) & 1, outcome & 1], axis=1)
        return basis, bits

    parts = rngmod.map_keyed(block, range(n_blocks), workers)
    return RoundLog(np.concatenate([p[0] for p in parts]).astype(np.int8),
                    np.concatenate([p[1] for p in parts]).astype(np.int8))


def detect(report: KeyReport, threshold: float = QBER_THRESHOLD) -> str:
    """``alarm`` iff QBER > threshold; ``inconclusive`` when nothing was sifted."""
    if report.estimation_error or not math.isfinite(report.qber):
        return "inconclusive"
    return "alarm" if report.qber > threshold else "clean"


def sift_and_decode(log: RoundLog, threshold: float = QBER_THRESHOLD) -> KeyReport:
    total = len(log)
    if total == 0:
        raise UsageError("no rounds to sift")
    basis, bits = log.basis.astype(int), log.bits.astype(int)
    kept = log.kept
    a, c, b = bits[:, 0], bits[:, 1], bits[:, 2]
    all_x = basis.sum(axis=1) == 0
    guess = b ^ c ^ (~all_x).astype(int)
    err = kept & (guess != a)
    n_kept = int(kept.sum())
    n_err = int(err.sum())
    if n_kept:
        q = n_err / n_kept
        se = math.sqrt(max(q * (1 - q), 1.0 / n_kept) / n_kept)
    else:
        q = se = float("nan")
    probs = {}
    n_x = int(all_x.sum())
    if n_x:
        idx = bits[all_x, 0] * 4 + bits[all_x, 1] * 2 + bits[all_x, 2]
        counts = np.bincount(idx, minlength=8)
        probs = {o: counts[k] / n_x for k, o in enumerate(ALL_X_OUTCOMES)}
    report = KeyReport(total, n_kept, q, se, n_err / total, probs,
                       estimation_error=n_kept == 0, threshold=threshold)
    report.verdict = detect(report, threshold)
    return report


def blue_sum(p: np.ndarray) -> float:
    return float(sum(p[int(o, 2)] for o in BLUE))


def phi_sweep(phi_grid, rho: DensityMatrix, rounds: int | None = None, seed: int = 0,
              readout: ReadoutModel | None = None) -> np.ndarray:
    """Rows (phi_A, blue-sum, red-sum) with Charlie and Bob fixed to x.

    ``rounds=None`` returns exact probabilities; otherwise each point is
    estimated from ``rounds`` shots on its own stream.
    """
    phis = np.atleast_1d(np.asarray(phi_grid, dtype=float))
    if phis.size == 0:
        raise UsageError("empty phi grid")
    rows = []
    for i, phi in enumerate(phis):
        r = rotate(rho, [rphi(phi, math.pi / 2), rphi(BASIS_PHI["x"], math.pi / 2),
                         rphi(BASIS_PHI["x"], math.pi / 2)])
        p = apply_readout(np.clip(np.real(np.diag(r.matrix)), 0, None), readout)
        p = p / p.sum()
        if rounds is not None:
            p = rngmod.stream(seed, "phi_sweep", i).multinomial(int(rounds), p) / int(rounds)
        blue = blue_sum(p)
        rows.append((phi, blue, 1.0 - blue))
    return np.array(rows)


def fit_sinusoid(phis, values) -> tuple:
    """Least-squares a + b sin(phi); returns (a, b, rms residual)."""
    phis = np.asarray(phis, dtype=float)
    design = np.stack([np.ones_like(phis), np.sin(phis)], axis=1)
    coef, *_ = np.linalg.lstsq(design, np.asarray(values, dtype=float), rcond=None)
    resid = values - design @ coef
    return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(resid ** 2)))


def guessing_probability(rho_ABC: DensityMatrix, cheater: str = "B") -> float:
    """Best chance for one receiver alone to guess Alice's x-basis bit.

    Conditions on Alice's outcome, discards the honest receiver and returns
    1/2 + 1/2 || p0 rho0 - p1 rho1 ||_1.
    """
    if rho_ABC.dims != (2, 2, 2):
        raise UsageError("expected a 3-qubit state")
    keep = {"C": 1, "B": 2}
    if cheater not in keep:
        raise UsageError("cheater must be 'B' or 'C'")
    cq = cq_from_measurement(rho_ABC, "x")
    # conditional states are over (C, B); keep the cheater's qubit
    diff = np.zeros((2, 2), dtype=complex)
    for sign, p, s in zip((1, -1), cq.probs, cq.states):
        if s is not None:
            diff += sign * p * partial_trace(s, [keep[cheater] - 1]).matrix
    return 0.5 + 0.5 * trace_norm(diff)


def mermin_value(rho_ABC: DensityMatrix) -> float:
    """<XXX> - <XYY> - <YXY> - <YYX>."""
    if rho_ABC.dims != (2, 2, 2):
        raise UsageError("expected a 3-qubit state")
    return (expectation(rho_ABC, pauli_string("XXX")) - expectation(rho_ABC, pauli_string("XYY"))
            - expectation(rho_ABC, pauli_string("YXY")) - expectation(rho_ABC, pauli_string("YYX")))


def source_state(kind: str = "ideal", theta_E: float | None = None, params=None,
                 dt: float | None = None) -> DensityMatrix:
    """Protocol state from ``ideal``, ``circuit`` or ``device`` preparation, optionally attacked."""
    if kind == "ideal":
        rho = ghz_state(3).density()
    elif kind in ("circuit", "device"):
        kw = {} if dt is None else {"dt": dt}
        rho = run_ghz3(kind, params, **kw)
    else:
        raise UsageError(f"unknown state source {kind!r}")
    if theta_E is not None:
        rho = attack_state(theta_E, rho)
    return rho


SWEEP_COLUMNS = ("theta_E", "fidelity", "linear_entropy_E", "qber_sifted", "error_raw",
                 "mermin", "privacy_bound", "dw_bound")


def sweep_row(theta_E: float, base: DensityMatrix | None = None) -> dict:
    """Exact attack metrics at one angle."""
    base = base if base is not None else ghz_state(3).density()
    full = apply_attack(base, theta_E)
    rho = partial_trace(full, [0, 1, 2])
    eve = partial_trace(full, [3])
    q = analytic_qber(rho)
    return {
        "theta_E": float(theta_E),
        "fidelity": fidelity_pure(rho, ghz_state(3)),
        "linear_entropy_E": linear_entropy(eve),
        "qber_sifted": q,
        "error_raw": q / 2,   # half of all rounds survive sifting
        "mermin": mermin_value(rho),
        "privacy_bound": privacy_bound(rho),
        "dw_bound": dw_bound(cq_from_measurement(rho, "x"), rho),
    }
