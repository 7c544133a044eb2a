"""Entropic quantities behind the secret-sharing privacy analysis.

All entropies are in bits. Bounds are returned as computed, including negative
values, which mean no key can be guaranteed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .qmath import (SX, SY, DensityMatrix, PureState, apply_unitary, partial_trace,
                    von_neumann_entropy)

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class Ensemble:
    """Probabilities with states of common dims."""
    probs: tuple
    states: tuple

    def __post_init__(self):
        p = tuple(float(x) for x in self.probs)
        states = tuple(s.density() if isinstance(s, PureState) else s for s in self.states)
        if not p or len(p) != len(states):
            raise UsageError("ensemble needs one state per probability")
        if min(p) < 0 or abs(sum(p) - 1.0) > 1e-10:
            raise UsageError("ensemble probabilities must be non-negative and sum to 1")
        if len({s.dims for s in states}) != 1:
            raise UsageError("ensemble states must share dims")
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "states", states)

    def average(self) -> DensityMatrix:
        m = sum(p * s.matrix for p, s in zip(self.probs, self.states))
        return DensityMatrix(m, self.states[0].dims)


@dataclass(frozen=True)
class CqState:
    """Alice's outcome distribution and the conditional states of the other parties.

    ``states[x]`` is None when ``probs[x]`` fell below 1e-12.
    """
    probs: tuple
    states: tuple
    basis: str
    dims: tuple

    @property
    def omitted(self) -> tuple:
        return tuple(i for i, s in enumerate(self.states) if s is None)

    def matrix(self) -> DensityMatrix:
        """sum_x P(x) |x><x| (x) rho_x, with the classical register first."""
        k = len(self.probs)
        d = int(np.prod(self.dims))
        m = np.zeros((k * d, k * d), dtype=complex)
        for x, (p, s) in enumerate(zip(self.probs, self.states)):
            if s is not None:
                m[x * d:(x + 1) * d, x * d:(x + 1) * d] = p * s.matrix
        m = m / np.trace(m).real
        return DensityMatrix(m, (k,) + tuple(self.dims))


def holevo(e: Ensemble) -> float:
    """chi = S(sum p rho) - sum p S(rho)."""
    return von_neumann_entropy(e.average()) - sum(p * von_neumann_entropy(s)
                                                  for p, s in zip(e.probs, e.states))


def mutual_information(rho_AB: DensityMatrix, cut) -> float:
    """I(A:B) = S(A) + S(B) - S(AB) with A the subsystems listed in ``cut``."""
    n = len(rho_AB.dims)
    a = sorted(set(int(c) for c in cut))
    b = [k for k in range(n) if k not in a]
    if not a or not b or a[0] < 0 or a[-1] >= n:
        raise UsageError(f"cut {cut} is not a bipartition of {n} subsystems")
    return (von_neumann_entropy(partial_trace(rho_AB, a)) + von_neumann_entropy(partial_trace(rho_AB, b))
            - von_neumann_entropy(rho_AB))


def _three_qubits(rho):
    if rho.dims != (2, 2, 2):
        raise UsageError(f"expected a 3-qubit state, got dims {rho.dims}")


def privacy_bound(rho_ABC: DensityMatrix) -> float:
    """S(rho_BC) - S(rho_ABC), with A the first qubit."""
    _three_qubits(rho_ABC)
    return von_neumann_entropy(partial_trace(rho_ABC, [1, 2])) - von_neumann_entropy(rho_ABC)


def basis_projectors(basis: str) -> tuple:
    """(Pi_0, Pi_1) for the +1/-1 eigenvectors of X or Y."""
    ops = {"x": SX, "y": SY, "z": np.diag([1.0, -1.0]).astype(complex)}
    if basis not in ops:
        raise UsageError(f"basis must be one of {sorted(ops)}")
    o = ops[basis]
    eye = np.eye(2)
    return (eye + o) / 2, (eye - o) / 2


def cq_from_measurement(rho_ABC: DensityMatrix, basis: str = "x") -> CqState:
    """Measure qubit A in ``basis`` and keep the normalised conditional states of the rest."""
    n = len(rho_ABC.dims)
    if n < 2:
        raise UsageError("need at least two subsystems")
    probs, states = [], []
    for proj in basis_projectors(basis):
        m = apply_unitary(rho_ABC.matrix, proj, [0], n)
        p = float(np.trace(m).real)
        probs.append(max(p, 0.0))
        if p < PROB_FLOOR:
            states.append(None)
            continue
        red = _trace_first(m, rho_ABC.dims)
        states.append(DensityMatrix(0.5 * (red + red.conj().T) / p, rho_ABC.dims[1:]))
    return CqState(tuple(probs), tuple(states), basis, tuple(rho_ABC.dims[1:]))


def _trace_first(m, dims):
    d0 = dims[0]
    rest = int(np.prod(dims[1:]))
    return np.einsum("iaib->ab", m.reshape(d0, rest, d0, rest))


def dw_bound(cq: CqState, rho_ABC: DensityMatrix) -> float:
    """I(X:BC) on the assembled cq state minus S(rho_ABC)."""
    _three_qubits(rho_ABC)
    return mutual_information(cq.matrix(), [0]) - von_neumann_entropy(rho_ABC)


def holevo_equals_mutual_info_check(e: Ensemble, keep=None) -> float:
    """|I(X:B) - chi_B| for an ensemble of (possibly purified) states.

    ``keep`` lists the subsystems forming B; the rest (the environment) is
    traced out. Both sides are computed separately.
    """
    n = len(e.states[0].dims)
    keep = list(range(n)) if keep is None else list(keep)
    reduced = tuple(partial_trace(s, keep) for s in e.states)
    chi = holevo(Ensemble(e.probs, reduced))
    cq = CqState(e.probs, reduced, "flag", reduced[0].dims)
    mi = mutual_information(cq.matrix(), [0])
    return abs(mi - chi)
