"""Dense linear algebra and quantum-information primitives.

States carry an explicit ``dims`` tuple. Subsystem 0 is the leftmost tensor
factor, so a basis label ``"gee"`` means subsystem 0 in ``g``. ``g`` is index 0
and ``e`` is index 1 of each qubit.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels
from .errors import NumericalError, UsageError

HERMITIAN_TOL = 1e-9
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
ZERO_EIG = 1e-12

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"I": I2, "X": SX, "Y": SY, "Z": SZ}


@dataclass(frozen=True)
class PureState:
    amplitudes: np.ndarray
    dims: tuple

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        dims = tuple(int(d) for d in self.dims)
        if amps.size != int(np.prod(dims)):
            raise UsageError(f"{amps.size} amplitudes do not match dims {dims}")
        if abs(np.vdot(amps, amps).real - 1.0) > 1e-10:
            raise UsageError("state is not normalised")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "dims", dims)

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()), self.dims)


@dataclass(frozen=True)
class DensityMatrix:
    """Density operator over subsystems of dimensions ``dims``.

    Construction checks shape, Hermiticity and unit trace (1e-10). Positivity
    is checked by :meth:`validate`, which costs an eigendecomposition.
    """

    matrix: np.ndarray
    dims: tuple

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        dims = tuple(int(d) for d in self.dims)
        n = int(np.prod(dims))
        if m.shape != (n, n):
            raise UsageError(f"matrix shape {m.shape} does not match dims {dims}")
        if not np.all(np.isfinite(m)):
            raise NumericalError("density matrix has non-finite entries")
        if np.max(np.abs(m - m.conj().T), initial=0.0) > 1e-10:
            raise UsageError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > 1e-10:
            raise UsageError(f"density matrix trace {np.trace(m).real!r} != 1")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def validate(self, tol: float = 1e-8) -> "DensityMatrix":
        lo = hermitian_eig(self.matrix).eigenvalues[-1]
        if lo < -tol:
            raise UsageError(f"density matrix has eigenvalue {lo:.3e} < -{tol}")
        return self

    @classmethod
    def from_pure(cls, amplitudes, dims) -> "DensityMatrix":
        return PureState(amplitudes, dims).density()

    @classmethod
    def maximally_mixed(cls, dims) -> "DensityMatrix":
        n = int(np.prod(dims))
        return cls(np.eye(n) / n, dims)


class Spectrum(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _mat(x) -> np.ndarray:
    if isinstance(x, DensityMatrix):
        return x.matrix
    if isinstance(x, PureState):
        return x.density().matrix
    return np.asarray(x, dtype=complex)


def kron(*mats) -> np.ndarray:
    """Kronecker product with the first argument as the leftmost factor."""
    if not mats:
        raise UsageError("kron needs at least one operand")
    return reduce(np.kron, [np.asarray(m) for m in mats])


def ket(label: str) -> np.ndarray:
    """Computational basis vector for a string of ``g``/``e`` (or ``0``/``1``)."""
    idx = 0
    for ch in label:
        if ch not in "ge01":
            raise UsageError(f"bad basis label {label!r}")
        idx = 2 * idx + (ch in "e1")
    v = np.zeros(2 ** len(label), dtype=complex)
    v[idx] = 1.0
    return v


def ghz_state(n: int, sign: int = +1) -> PureState:
    """(|g...g> + sign |e...e>)/sqrt(2) on ``n`` qubits."""
    v = (ket("g" * n) + sign * ket("e" * n)) / np.sqrt(2)
    return PureState(v, (2,) * n)


def bell_states() -> dict:
    """The four Bell states in the g/e basis."""
    s = 1 / np.sqrt(2)
    return {
        "phi+": PureState(s * (ket("gg") + ket("ee")), (2, 2)),
        "phi-": PureState(s * (ket("gg") - ket("ee")), (2, 2)),
        "psi+": PureState(s * (ket("ge") + ket("eg")), (2, 2)),
        "psi-": PureState(s * (ket("eg") - ket("ge")), (2, 2)),
    }


def partial_trace(rho, keep: Sequence[int], dims: Sequence[int] | None = None) -> DensityMatrix:
    """Reduced state on the subsystems listed in ``keep`` (returned in ascending order)."""
    m = _mat(rho)
    if dims is None:
        if not isinstance(rho, DensityMatrix):
            raise UsageError("dims required for a bare matrix")
        dims = rho.dims
    dims = tuple(dims)
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise UsageError(f"subsystem indices {keep} out of range for dims {dims}")
    n = len(dims)
    t = m.reshape(dims + dims)
    traced = [k for k in range(n) if k not in keep]
    # contract each traced axis with its partner, highest first so indices stay valid
    for k in sorted(traced, reverse=True):
        nk = t.ndim // 2
        t = np.trace(t, axis1=k, axis2=k + nk)
    kd = tuple(dims[k] for k in keep)
    size = int(np.prod(kd)) if kd else 1
    return DensityMatrix(t.reshape(size, size), kd if kd else (1,))


def hermitian_eig(h) -> Spectrum:
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Eigenvalues are returned in descending order with matching eigenvector
    columns.
    """
    a = _mat(h)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise UsageError(f"expected a square matrix, got shape {a.shape}")
    if np.max(np.abs(a - a.conj().T), initial=0.0) > HERMITIAN_TOL * max(1.0, np.max(np.abs(a), initial=0.0)):
        raise UsageError("matrix is not Hermitian")
    a = 0.5 * (a + a.conj().T)
    scale = max(1.0, float(np.linalg.norm(a)))
    w, v, sweeps = kernels.jacobi_eigh(a, JACOBI_TOL * scale, JACOBI_MAX_SWEEPS)
    if sweeps < 0:
        raise NumericalError(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps")
    order = np.argsort(-w, kind="stable")
    return Spectrum(w[order], v[:, order])


def eigvals(rho) -> np.ndarray:
    return hermitian_eig(rho).eigenvalues


def _xlog2x(p: np.ndarray) -> float:
    p = p[p > ZERO_EIG]
    return float(-np.sum(p * np.log2(p)))


def shannon_entropy(probs) -> float:
    return _xlog2x(np.asarray(probs, dtype=float))


def binary_entropy(p: float) -> float:
    return shannon_entropy([p, 1.0 - p])


def von_neumann_entropy(rho) -> float:
    """S(rho) = -sum lambda log2 lambda in bits; eigenvalues below 1e-12 count as zero."""
    s = _xlog2x(eigvals(rho))
    return max(s, 0.0)


def purity(rho) -> float:
    m = _mat(rho)
    return float(np.real(np.vdot(m, m)))


def linear_entropy(rho) -> float:
    """1 - tr(rho^2)."""
    return 1.0 - purity(rho)


def trace_norm(a) -> float:
    """Sum of absolute eigenvalues of a Hermitian operator."""
    return float(np.sum(np.abs(eigvals(a))))


def fidelity_pure(rho, psi) -> float:
    """<psi|rho|psi> for a pure reference state."""
    m = _mat(rho)
    v = psi.amplitudes if isinstance(psi, PureState) else np.asarray(psi, dtype=complex).reshape(-1)
    if isinstance(rho, DensityMatrix) and isinstance(psi, PureState) and rho.dims != psi.dims:
        raise UsageError(f"dims {rho.dims} and {psi.dims} differ")
    if m.shape[0] != v.size:
        raise UsageError(f"state of size {v.size} does not match matrix of size {m.shape[0]}")
    return float(np.real(np.vdot(v, m @ v)))


def expectation(rho, op) -> float:
    return float(np.real(np.trace(_mat(rho) @ op)))


def pauli_string(label: str) -> np.ndarray:
    """Tensor product of Paulis, e.g. ``"XYY"``."""
    return kron(*[PAULI[c] for c in label])


def embed(op: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Lift an operator on qubits ``targets`` (in the given order) to ``n`` qubits."""
    k = len(targets)
    if len(set(targets)) != k or any(t < 0 or t >= n for t in targets):
        raise UsageError(f"bad targets {targets} for {n} qubits")
    rest = [q for q in range(n) if q not in targets]
    full = kron(op, np.eye(2 ** (n - k)))
    perm = list(targets) + rest
    inv = np.argsort(perm)
    t = full.reshape((2,) * (2 * n))
    t = t.transpose(list(inv) + [n + i for i in inv])
    return t.reshape(2 ** n, 2 ** n)


def apply_unitary(rho: np.ndarray, u: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """U rho U^dagger for a k-qubit unitary acting on ``targets`` of an n-qubit register."""
    k = len(targets)
    t = rho.reshape((2,) * (2 * n))
    uk = u.reshape((2,) * (2 * k))
    # left multiply on row axes
    t = np.tensordot(uk, t, axes=(list(range(k, 2 * k)), list(targets)))
    t = np.moveaxis(t, list(range(k)), list(targets))
    # right multiply by U^dagger on column axes
    cols = [n + q for q in targets]
    t = np.tensordot(t, uk.conj(), axes=(cols, list(range(k, 2 * k))))
    t = np.moveaxis(t, list(range(2 * n - k, 2 * n)), cols)
    return t.reshape(2 ** n, 2 ** n)


def project_psd(m: np.ndarray) -> np.ndarray:
    """Nearest unit-trace PSD matrix in Frobenius norm.

    Negative eigenvalues are zeroed and their total deficit is subtracted evenly
    from the remaining ones, repeating until none are negative.
    """
    m = 0.5 * (m + m.conj().T)
    m = m / np.trace(m).real
    w, v = hermitian_eig(m)
    w = w.astype(float).copy()
    # w is descending; walk from the smallest eigenvalue upward
    n = w.size
    acc = 0.0
    k = n
    while k > 0 and w[k - 1] + acc / k < 0:
        acc += w[k - 1]
        w[k - 1] = 0.0
        k -= 1
    if k > 0:
        w[:k] += acc / k
    out = (v * w) @ v.conj().T
    return 0.5 * (out + out.conj().T)
