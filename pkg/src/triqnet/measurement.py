"""Z-basis sampling, readout assignment errors and their correction, and tomography.

Outcome bitstrings list qubit 0 first; ``0`` is ``|g>`` and ``1`` is ``|e>``.
Outcome vectors are indexed by the bitstring read as a binary number.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .circuits import rx, ry
from .errors import UsageError
from .qmath import PAULI, SZ, DensityMatrix, apply_unitary, kron, project_psd

PRE_ROTATIONS = {"I": np.eye(2, dtype=complex), "X/2": rx(math.pi / 2), "Y/2": ry(math.pi / 2)}
SETTING_LABELS = ("I", "X/2", "Y/2")


def _measured_axis(u: np.ndarray) -> tuple:
    # Pauli axis (and sign) read by Z after the pre-rotation u
    obs = u.conj().T @ SZ @ u
    for name in ("X", "Y", "Z"):
        c = np.trace(obs @ PAULI[name]).real / 2
        if abs(abs(c) - 1) < 1e-12:
            return name, int(round(c))
    raise AssertionError("pre-rotation does not map Z onto a Pauli axis")


AXIS = {k: _measured_axis(u) for k, u in PRE_ROTATIONS.items()}


@dataclass(frozen=True)
class ReadoutModel:
    """Per-qubit assignment probabilities: F_g = P(read g | g), F_e = P(read e | e)."""
    F_g: tuple
    F_e: tuple

    def __post_init__(self):
        fg = tuple(float(x) for x in self.F_g)
        fe = tuple(float(x) for x in self.F_e)
        if len(fg) != len(fe) or not fg:
            raise UsageError("F_g and F_e need one entry per qubit")
        for v in fg + fe:
            if not 0.5 < v <= 1.0:
                raise UsageError(f"assignment fidelity {v} outside (0.5, 1]")
        object.__setattr__(self, "F_g", fg)
        object.__setattr__(self, "F_e", fe)

    @property
    def n(self) -> int:
        return len(self.F_g)

    @classmethod
    def ideal(cls, n: int) -> "ReadoutModel":
        return cls((1.0,) * n, (1.0,) * n)

    @classmethod
    def from_params(cls, params, labels) -> "ReadoutModel":
        qs = [params.qubit(q) for q in labels]
        return cls(tuple(q.F_g for q in qs), tuple(q.F_e for q in qs))

    def matrix(self, k: int) -> np.ndarray:
        """Column-stochastic F with F[measured, true]."""
        fg, fe = self.F_g[k], self.F_e[k]
        return np.array([[fg, 1 - fe], [1 - fg, fe]])


def _per_qubit(p: np.ndarray, mats) -> np.ndarray:
    n = len(mats)
    t = np.asarray(p, dtype=float).reshape((2,) * n)
    for k, m in enumerate(mats):
        t = np.moveaxis(np.tensordot(m, t, axes=(1, k)), 0, k)
    return t.reshape(-1)


def _check_readout(readout, n):
    if readout is None:
        return None
    if readout.n != n:
        raise UsageError(f"readout model covers {readout.n} qubits, state has {n}")
    return readout


def apply_readout(p, readout: ReadoutModel | None) -> np.ndarray:
    """Distribution of recorded outcomes given true-outcome probabilities ``p``."""
    p = np.asarray(p, dtype=float)
    if readout is None:
        return p.copy()
    return _per_qubit(p, [readout.matrix(k) for k in range(readout.n)])


def readout_correct(p_measured, readout: ReadoutModel) -> np.ndarray:
    """Apply the inverse of the tensored assignment matrices; negative entries are kept."""
    p = np.asarray(p_measured, dtype=float)
    if p.size != 2 ** readout.n:
        raise UsageError(f"{p.size} probabilities for {readout.n} qubits")
    if abs(p.sum() - 1.0) > 1e-9:
        raise UsageError("measured probabilities must sum to 1")
    invs = []
    for k in range(readout.n):
        m = readout.matrix(k)
        if abs(np.linalg.det(m)) < 1e-12:
            raise UsageError(f"assignment matrix of qubit {k} is singular")
        invs.append(np.linalg.inv(m))
    return _per_qubit(p, invs)


def z_probabilities(rho: DensityMatrix, readout: ReadoutModel | None = None) -> np.ndarray:
    p = np.clip(np.real(np.diag(rho.matrix)), 0.0, None)
    p = p / p.sum()
    return apply_readout(p, _check_readout(readout, len(rho.dims)))


def sample_z(rho: DensityMatrix, shots: int, readout: ReadoutModel | None,
             rng: np.random.Generator) -> np.ndarray:
    """Counts per outcome from ``shots`` Z measurements of every qubit.

    Flipping each sampled bit through its assignment channel is the same as
    drawing directly from the readout-transformed distribution, which is what
    is done here.
    """
    if int(shots) < 1:
        raise UsageError("shots must be >= 1")
    return rng.multinomial(int(shots), z_probabilities(rho, readout))


def rotate(rho: DensityMatrix, rotations) -> DensityMatrix:
    """Apply one single-qubit unitary (or a pre-rotation label) per qubit."""
    n = len(rho.dims)
    if len(rotations) != n:
        raise UsageError(f"{len(rotations)} rotations for {n} qubits")
    m = rho.matrix
    for k, u in enumerate(rotations):
        u = PRE_ROTATIONS[u] if isinstance(u, str) else u
        m = apply_unitary(m, u, [k], n)
    return DensityMatrix(0.5 * (m + m.conj().T), rho.dims)


def settings(n: int) -> list:
    return list(itertools.product(SETTING_LABELS, repeat=n))


@dataclass
class CountTable:
    """Counts per tomography setting; ``counts[setting]`` is a vector over outcomes."""
    n_qubits: int
    counts: dict

    def __post_init__(self):
        totals = set()
        for s, c in self.counts.items():
            if len(s) != self.n_qubits or any(x not in SETTING_LABELS for x in s):
                raise UsageError(f"bad setting {s}")
            c = np.asarray(c)
            if c.shape != (2 ** self.n_qubits,) or np.any(c < 0):
                raise UsageError(f"bad count vector for setting {s}")
            totals.add(int(c.sum()))
        if len(totals) > 1:
            raise UsageError("every setting must have the same number of shots")

    @property
    def shots(self) -> int:
        return int(next(iter(self.counts.values())).sum()) if self.counts else 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["setting", "outcome", "count"])
        n = self.n_qubits
        for s in settings(n):
            if s not in self.counts:
                continue
            for k, c in enumerate(self.counts[s]):
                w.writerow([" ".join(s), format(k, f"0{n}b"), int(c)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CountTable":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise UsageError("empty count table")
        try:
            n = len(rows[0]["outcome"])
            counts = {}
            for r in rows:
                s = tuple(r["setting"].split())
                counts.setdefault(s, np.zeros(2 ** n, dtype=np.int64))[int(r["outcome"], 2)] += int(r["count"])
        except (KeyError, ValueError) as exc:
            raise UsageError(f"malformed count table: {exc}") from None
        return cls(n, counts)


def tomography_probabilities(rho: DensityMatrix, readout: ReadoutModel | None = None) -> dict:
    """Exact recorded-outcome distribution for every setting (the infinite-shot limit)."""
    n = len(rho.dims)
    return {s: z_probabilities(rotate(rho, s), readout) for s in settings(n)}


def tomography_measure(rho: DensityMatrix, shots: int, readout: ReadoutModel | None = None,
                       seed: int = 0) -> CountTable:
    """Sample every setting in {I, X/2, Y/2}^n; setting i draws from its own stream."""
    probs = tomography_probabilities(rho, readout)
    counts = {}
    for i, (s, p) in enumerate(probs.items()):
        if int(shots) < 1:
            raise UsageError("shots must be >= 1")
        counts[s] = rngmod.stream(seed, "tomography", i).multinomial(int(shots), p)
    return CountTable(len(rho.dims), counts)


def _parity_expectations(p: np.ndarray, n: int) -> np.ndarray:
    # entry S is sum_o p(o) (-1)^{|o & S|}
    h = np.array([[1.0, 1.0], [1.0, -1.0]])
    return _per_qubit(p, [h] * n)


def pauli_expectations(probs: dict, n: int, readout: ReadoutModel | None = None) -> dict:
    """Estimate every Pauli string from per-setting distributions.

    Each string is averaged over all settings that measure it. Returns
    ``{label: (mean, n_settings)}``.
    """
    need = set(settings(n))
    if set(probs) != need:
        raise UsageError(f"tomography needs all {3 ** n} settings, got {len(probs)}")
    sums: dict = {}
    masks = list(itertools.product((0, 1), repeat=n))
    for s, p in probs.items():
        p = np.asarray(p, dtype=float)
        p = p / p.sum()
        if readout is not None:
            p = readout_correct(p, readout)
        par = _parity_expectations(p, n)
        for k, mask in enumerate(masks):
            label, sign = [], 1
            for bit, lab in zip(mask, s):
                if bit:
                    ax, sg = AXIS[lab]
                    label.append(ax)
                    sign *= sg
                else:
                    label.append("I")
            key = "".join(label)
            acc = sums.setdefault(key, [0.0, 0])
            acc[0] += sign * par[k]
            acc[1] += 1
    return {k: (v[0] / v[1], v[1]) for k, v in sums.items()}


def linear_inversion(expect: dict, n: int) -> np.ndarray:
    rho = np.zeros((2 ** n, 2 ** n), dtype=complex)
    for label, (val, _) in expect.items():
        rho += val * kron(*[PAULI[c] for c in label])
    return rho / 2 ** n


def reconstruct_from_probabilities(probs: dict, n: int,
                                   readout: ReadoutModel | None = None) -> DensityMatrix:
    """Readout-correct, estimate Paulis, invert linearly, then project onto states."""
    lin = linear_inversion(pauli_expectations(probs, n, readout), n)
    m = project_psd(lin)
    return DensityMatrix(m / np.trace(m).real, (2,) * n)


def reconstruct(counts: CountTable, readout: ReadoutModel | None = None) -> DensityMatrix:
    probs = {s: np.asarray(c, dtype=float) / c.sum() for s, c in counts.counts.items()}
    return reconstruct_from_probabilities(probs, counts.n_qubits, readout)
