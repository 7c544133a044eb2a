"""Physical-tier simulation of qubit -> multimode channel -> qubit transfer.

The register is ``[emitter, receiver, mode_1, ..., mode_M]``, every subsystem a
two-level system (at most one photon is ever injected). Dynamics are written in
the frame rotating at the central mode frequency, in rad/ns, and integrated
with fixed-step RK4 on the full density matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.linalg import expm

from . import kernels
from .errors import NumericalError, UsageError
from .params import ChannelParams, QubitParams
from .qmath import SZ, DensityMatrix, bell_states, fidelity_pure, partial_trace

DEFAULT_DT = 0.05  # ns
TRACE_DRIFT_LIMIT = 1e-6


def rad_per_ns(mhz: float) -> float:
    return 2 * math.pi * mhz * 1e-3


def swap_time(g_mhz: float, fraction: float = 1.0) -> float:
    """Duration of a (fractional) resonant swap, pi/(2g) * fraction, in ns."""
    return fraction * math.pi / (2 * rad_per_ns(g_mhz))


def receive_time(ch: ChannelParams) -> float:
    # quoted to 0.1 ns, e.g. 80.6 ns for g2/2pi = 3.1 MHz
    return round(swap_time(ch.g2), 1)


@dataclass(frozen=True)
class Segment:
    duration: float           # ns
    g1_on: bool = False
    g2_on: bool = False
    detuning1: float = 0.0    # MHz, emitter relative to the central mode
    detuning2: float = 0.0    # MHz, receiver relative to the central mode

    def __post_init__(self):
        if not self.duration > 0:
            raise UsageError("segment duration must be positive")
        if self.g1_on and self.g2_on:
            raise UsageError("only one qubit may be coupled to the channel per segment")


@dataclass(frozen=True)
class PulseSchedule:
    segments: tuple

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise UsageError("empty pulse schedule")

    @property
    def duration(self) -> float:
        return sum(s.duration for s in self.segments)


@dataclass(frozen=True)
class TransferResult:
    eta_t: float
    rho_final: DensityMatrix
    F_Bell: float | None = None


def mode_detunings(ch: ChannelParams) -> np.ndarray:
    """Detuning of each mode m = 1..M from the central one, in MHz."""
    m = np.arange(1, ch.M + 1)
    return (m - (ch.M + 1) / 2) * ch.omega_FSR


def receiver_coupling_signs(ch: ChannelParams) -> np.ndarray:
    return np.array([(-1) ** m for m in range(1, ch.M + 1)], dtype=float)


def receiver_frame_sign(ch: ChannelParams) -> int:
    """Sign of (emitter coupling x receiver coupling) on the central mode."""
    centre = (ch.M + 1) // 2
    return (-1) ** centre


def _n_sub(ch: ChannelParams) -> int:
    return 2 + ch.M


def _bit(n: int, k: int) -> int:
    return 1 << (n - 1 - k)


def _hamiltonian_sparse(ch: ChannelParams, g1_on: bool, g2_on: bool,
                        det1: float = 0.0, det2: float = 0.0) -> sparse.csr_matrix:
    n = _n_sub(ch)
    d = 2 ** n
    idx = np.arange(d)
    occ = lambda k: ((idx >> (n - 1 - k)) & 1).astype(float)
    diag = rad_per_ns(det1) * occ(0) + rad_per_ns(det2) * occ(1)
    for m, dm in enumerate(mode_detunings(ch)):
        diag = diag + rad_per_ns(dm) * occ(2 + m)
    rows, cols, vals = [idx], [idx], [diag.astype(complex)]

    def hop(q, k, g):
        mq, mk = _bit(n, q), _bit(n, k)
        src = idx[((idx & mq) != 0) & ((idx & mk) == 0)]
        dst = src ^ mq ^ mk
        rows.extend([src, dst])
        cols.extend([dst, src])
        vals.extend([np.full(src.size, g, dtype=complex)] * 2)

    signs = receiver_coupling_signs(ch)
    for m in range(ch.M):
        if g1_on:
            hop(0, 2 + m, rad_per_ns(ch.g1))
        if g2_on:
            hop(1, 2 + m, signs[m] * rad_per_ns(ch.g2))
    h = sparse.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(d, d)).tocsr()
    h.sum_duplicates()
    h.eliminate_zeros()
    h.sort_indices()
    return h


def build_hamiltonian(q1: QubitParams, q2: QubitParams, ch: ChannelParams,
                      flags=(False, False), detunings=(0.0, 0.0)) -> np.ndarray:
    """Dense Hamiltonian (rad/ns) on ``[q1, q2, modes...]`` in the central-mode frame.

    ``flags`` switches the emitter/receiver couplings; ``detunings`` (MHz) place
    each qubit relative to the central mode. The receiver couples to mode m with
    sign (-1)^m.
    """
    g1_on, g2_on = flags
    return _hamiltonian_sparse(ch, bool(g1_on), bool(g2_on), *detunings).toarray()


def _rates(q1: QubitParams, q2: QubitParams, ch: ChannelParams, ideal: bool):
    """Per-subsystem (relaxation rate, pure-dephasing coherence decay rate) in 1/ns."""
    n = _n_sub(ch)
    if ideal:
        return np.zeros(n), np.zeros(n)
    t1 = [q1.T1, q2.T1] + [ch.T1] * ch.M
    t2 = [q1.T2, q2.T2] + [ch.T2] * ch.M
    t1 = np.array(t1) * 1e3
    t2 = np.array(t2) * 1e3
    g_down = 1.0 / t1
    g_phi = np.maximum(1.0 / t2 - 0.5 / t1, 0.0)
    return g_down, g_phi


def _decay_matrix(n: int, g_down: np.ndarray, g_phi: np.ndarray) -> np.ndarray:
    # elementwise part of the dissipator for sigma_- (rate g_down) and
    # sqrt(2 g_phi) * n (off-diagonal decay g_phi)
    d = 2 ** n
    idx = np.arange(d)
    out = np.zeros((d, d))
    for k in range(n):
        occ = ((idx >> (n - 1 - k)) & 1).astype(float)
        ni, nj = occ[:, None], occ[None, :]
        out -= 0.5 * g_down[k] * (ni + nj) + g_phi[k] * (ni - nj) ** 2
    return out


def _evolve_hermitian(op: np.ndarray, schedule: PulseSchedule, ch: ChannelParams,
                      g_down, g_phi, dt: float) -> np.ndarray:
    n = _n_sub(ch)
    decay = _decay_matrix(n, g_down, g_phi)
    masks = np.array([_bit(n, k) for k in range(n)], dtype=np.int_)
    out = np.asarray(op, dtype=complex)
    for seg in schedule.segments:
        h = _hamiltonian_sparse(ch, seg.g1_on, seg.g2_on, seg.detuning1, seg.detuning2)
        steps = max(1, math.ceil(seg.duration / dt - 1e-9))
        out = kernels.lindblad_rk4(out, h.data, h.indices.astype(np.intc), h.indptr.astype(np.intc),
                                   decay, g_down, masks, seg.duration / steps, steps)
    return out


def lindblad_evolve(rho0: DensityMatrix, schedule: PulseSchedule, q1: QubitParams,
                    q2: QubitParams, ch: ChannelParams, dt: float = DEFAULT_DT,
                    ideal: bool = False) -> DensityMatrix:
    """Integrate the master equation over ``schedule`` starting from ``rho0``.

    Collapse operators per subsystem: lowering at rate 1/T1 and number-operator
    dephasing giving coherence decay 1/T_phi = 1/T2 - 1/(2 T1). ``ideal``
    switches all decoherence off.
    """
    n = _n_sub(ch)
    if rho0.dims != (2,) * n:
        raise UsageError(f"state dims {rho0.dims} do not match a register of {n} two-level systems")
    g_down, g_phi = _rates(q1, q2, ch, ideal)
    out = _evolve_hermitian(rho0.matrix, schedule, ch, g_down, g_phi, dt)
    tr = np.trace(out).real
    if not np.all(np.isfinite(out)) or abs(tr - 1.0) > TRACE_DRIFT_LIMIT:
        raise NumericalError(f"trace drifted to {tr!r}; reduce dt")
    # RK4 keeps the trace even when unstable, so also bound |rho_ij| <= 1
    if np.abs(out).max() > 1.0 + TRACE_DRIFT_LIMIT:
        raise NumericalError("integration went unstable; reduce dt")
    out = 0.5 * (out + out.conj().T) / tr
    return DensityMatrix(out, rho0.dims)


def transfer_schedule(ch: ChannelParams, fraction: float = 1.0) -> PulseSchedule:
    """Emit for pi/(2 g1) * fraction with g1 on, then receive for pi/(2 g2) with g2 on."""
    return PulseSchedule((Segment(swap_time(ch.g1, fraction), g1_on=True),
                          Segment(receive_time(ch), g2_on=True)))


def _excited_emitter(ch: ChannelParams) -> DensityMatrix:
    n = _n_sub(ch)
    rho = np.zeros((2 ** n, 2 ** n), dtype=complex)
    e = _bit(n, 0)
    rho[e, e] = 1.0
    return DensityMatrix(rho, (2,) * n)


def _frame_correct(rho2: np.ndarray, ch: ChannelParams) -> np.ndarray:
    # virtual Z on the receiver so that the lossless transfer maps |e> -> -|e>
    if receiver_frame_sign(ch) < 0:
        z = np.kron(np.eye(2), SZ)
        return z @ rho2 @ z
    return rho2


def _run(q_emit, q_recv, ch, fraction, dt, ideal) -> DensityMatrix:
    rho = lindblad_evolve(_excited_emitter(ch), transfer_schedule(ch, fraction),
                          q_emit, q_recv, ch, dt=dt, ideal=ideal)
    pair = partial_trace(rho, [0, 1]).matrix
    return DensityMatrix(_frame_correct(pair, ch), (2, 2))


def run_transfer(q_emit: QubitParams, q_recv: QubitParams, ch: ChannelParams,
                 dt: float = DEFAULT_DT, ideal: bool = False) -> TransferResult:
    """Full state transfer (ST); eta_t is the receiver's final excited population."""
    pair = _run(q_emit, q_recv, ch, 1.0, dt, ideal)
    eta = float(pair.matrix[1, 1].real + pair.matrix[3, 3].real)
    return TransferResult(eta_t=eta, rho_final=pair)


def run_half_transfer(q_emit: QubitParams, q_recv: QubitParams, ch: ChannelParams,
                      dt: float = DEFAULT_DT, ideal: bool = False) -> TransferResult:
    """Half transfer (ST/2) producing a Bell pair; F_Bell is the overlap with psi-."""
    pair = _run(q_emit, q_recv, ch, 0.5, dt, ideal)
    eta = float(pair.matrix[1, 1].real + pair.matrix[3, 3].real)
    f = fidelity_pure(pair, bell_states()["psi-"])
    return TransferResult(eta_t=eta, rho_final=pair, F_Bell=f)


def transfer_process(q_emit: QubitParams, q_recv: QubitParams, ch: ChannelParams,
                     fraction: float = 1.0, dt: float = DEFAULT_DT,
                     ideal: bool = False) -> np.ndarray:
    """Linear map from the emitter's input state to the (emitter, receiver) output.

    Returns ``T`` with shape (2, 2, 4, 4): ``T[a, b]`` is the output for input
    ``|a><b|`` on the emitter, receiver in ``|g>`` and all modes empty.
    """
    n = _n_sub(ch)
    d = 2 ** n
    e = _bit(n, 0)
    g_down, g_phi = _rates(q_emit, q_recv, ch, ideal)
    sched = transfer_schedule(ch, fraction)

    def run(op):
        out = _evolve_hermitian(op, sched, ch, g_down, g_phi, dt)
        return _frame_correct(_reduce_pair(out, n), ch)

    basis = {}
    for a in (0, 1):
        op = np.zeros((d, d), dtype=complex)
        op[a * e, a * e] = 1.0
        basis[a, a] = run(op)
    sx = np.zeros((d, d), dtype=complex)
    sx[0, e] = sx[e, 0] = 1.0
    sy = np.zeros((d, d), dtype=complex)
    sy[0, e], sy[e, 0] = -1j, 1j
    ox, oy = run(sx), run(sy)
    # |g><e| = (sx + i sy)/2, |e><g| = (sx - i sy)/2
    basis[0, 1] = 0.5 * (ox + 1j * oy)
    basis[1, 0] = 0.5 * (ox - 1j * oy)
    out = np.zeros((2, 2, 4, 4), dtype=complex)
    for (a, b), v in basis.items():
        out[a, b] = v
    return out


def _reduce_pair(op: np.ndarray, n: int) -> np.ndarray:
    t = op.reshape(4, 2 ** (n - 2), 4, 2 ** (n - 2))
    return np.einsum("ajbj->ab", t)


def rabi_chevron(q: QubitParams, ch: ChannelParams, detuning_grid, time_grid,
                 ideal: bool = False) -> np.ndarray:
    """Excited population P_e[detuning, time] of a qubit swapping into the channel.

    The qubit starts in ``|e>`` with its coupling g1 on; detunings (MHz) are
    measured from the central mode, times in ns. Only the zero- and
    one-excitation sectors are populated, so the master equation is solved
    exactly on that (M + 2)-dimensional block.
    """
    det = np.atleast_1d(np.asarray(detuning_grid, dtype=float))
    times = np.atleast_1d(np.asarray(time_grid, dtype=float))
    if det.size == 0 or times.size == 0:
        raise UsageError("empty grid")
    if np.any(times < 0):
        raise UsageError("times must be non-negative")
    M = ch.M
    d = M + 2  # vacuum, qubit, modes
    if ideal:
        t1 = np.full(M + 1, np.inf)
        gphi = np.zeros(M + 1)
    else:
        t1 = np.array([q.T1] + [ch.T1] * M) * 1e3
        t2 = np.array([q.T2] + [ch.T2] * M) * 1e3
        gphi = np.maximum(1 / t2 - 0.5 / t1, 0.0)
    gdown = 1.0 / t1
    eye = np.eye(d)
    order = np.argsort(times)
    out = np.empty((det.size, times.size))
    for i, delta in enumerate(det):
        h = np.zeros((d, d), dtype=complex)
        h[1, 1] = rad_per_ns(delta)
        for m, dm in enumerate(mode_detunings(ch)):
            h[2 + m, 2 + m] = rad_per_ns(dm)
            h[1, 2 + m] = h[2 + m, 1] = rad_per_ns(ch.g1)
        # row-major vec: vec(A X B) = kron(A, B^T) vec(X)
        L = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
        for k in range(1, d):
            a = np.zeros((d, d))
            a[0, k] = 1.0
            nk = a.T @ a
            L += gdown[k - 1] * (np.kron(a, a) - 0.5 * np.kron(nk, eye) - 0.5 * np.kron(eye, nk))
            L += 2 * gphi[k - 1] * (np.kron(nk, nk) - 0.5 * np.kron(nk, eye) - 0.5 * np.kron(eye, nk))
        v = np.zeros(d * d, dtype=complex)
        v[1 * d + 1] = 1.0
        t_prev = 0.0
        for j in order:
            v = expm(L * (times[j] - t_prev)) @ v
            t_prev = times[j]
            out[i, j] = v[d + 1].real
    return out
