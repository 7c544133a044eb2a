import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from triqnet.errors import UsageError
from triqnet.qmath import (SX, SY, SZ, DensityMatrix, PureState, apply_unitary, bell_states,
                           binary_entropy, embed, fidelity_pure, ghz_state, hermitian_eig, ket,
                           kron, linear_entropy, partial_trace, pauli_string, project_psd, purity,
                           trace_norm, von_neumann_entropy)

from conftest import random_density


def test_ket_ordering_leftmost_is_most_significant():
    assert np.argmax(ket("eg")) == 2
    assert np.argmax(ket("011")) == 3


def test_density_matrix_rejects_bad_input():
    with pytest.raises(UsageError):
        DensityMatrix(np.eye(2), (2,))           # trace 2
    with pytest.raises(UsageError):
        DensityMatrix(np.array([[0.5, 1], [0, 0.5]]), (2,))
    with pytest.raises(UsageError):
        DensityMatrix(np.eye(4) / 4, (2,))
    with pytest.raises(UsageError):
        DensityMatrix(np.diag([1.5, -0.5]), (2,)).validate()


def test_pure_state_normalisation():
    with pytest.raises(UsageError):
        PureState(np.array([1.0, 1.0]), (2,))


def test_partial_trace_of_product(rng):
    a, b = random_density(rng, 2), random_density(rng, 4)
    rho = DensityMatrix(np.kron(a, b), (2, 2, 2))
    np.testing.assert_allclose(partial_trace(rho, [0]).matrix, a, atol=1e-12)
    np.testing.assert_allclose(partial_trace(rho, [1, 2]).matrix, b, atol=1e-12)


def test_partial_trace_bell_gives_identity():
    for psi in bell_states().values():
        np.testing.assert_allclose(partial_trace(psi.density(), [1]).matrix, np.eye(2) / 2, atol=1e-12)


def test_partial_trace_bad_index():
    with pytest.raises(UsageError):
        partial_trace(ghz_state(3).density(), [3])


@pytest.mark.parametrize("n", [2, 8, 32])
def test_hermitian_eig_descending_and_matches_numpy(rng, n):
    m = random_density(rng, n)
    w, v = hermitian_eig(m)
    assert np.all(np.diff(w) <= 1e-15)
    np.testing.assert_allclose(w, np.linalg.eigvalsh(m)[::-1], atol=1e-12)


def test_hermitian_eig_rejects_non_hermitian():
    with pytest.raises(UsageError):
        hermitian_eig(np.array([[0, 1], [0, 0]]))


def test_entropies():
    assert von_neumann_entropy(ghz_state(3).density()) == pytest.approx(0, abs=1e-12)
    assert von_neumann_entropy(DensityMatrix.maximally_mixed((2, 2, 2))) == pytest.approx(3)
    assert binary_entropy(0.5) == pytest.approx(1)
    assert binary_entropy(0.0) == 0.0
    # h(0.11) from the closed form
    p = 0.11
    assert binary_entropy(p) == pytest.approx(-p * math.log2(p) - (1 - p) * math.log2(1 - p))


def test_linear_entropy_and_purity():
    mixed = DensityMatrix.maximally_mixed((2,))
    assert purity(mixed) == pytest.approx(0.5)
    assert linear_entropy(mixed) == pytest.approx(0.5)
    assert linear_entropy(ghz_state(2).density()) == pytest.approx(0, abs=1e-12)


def test_trace_norm_of_pauli():
    assert trace_norm(SZ) == pytest.approx(2)
    assert trace_norm(SX + SZ) == pytest.approx(2 * math.sqrt(2))


def test_ghz_stabilisers():
    g = ghz_state(3).density().matrix
    for label, val in (("XXX", 1), ("XYY", -1), ("YXY", -1), ("YYX", -1), ("ZZI", 1)):
        assert np.trace(g @ pauli_string(label)).real == pytest.approx(val)


def test_apply_unitary_matches_embedding(rng):
    n = 3
    rho = random_density(rng, 8)
    u = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
    for targets in ([0, 1], [2, 0], [1, 2]):
        full = embed(u, targets, n)
        np.testing.assert_allclose(apply_unitary(rho, u, targets, n), full @ rho @ full.conj().T, atol=1e-12)


def test_embed_single_qubit_matches_kron():
    np.testing.assert_allclose(embed(SY, [1], 3), kron(np.eye(2), SY, np.eye(2)))


def test_project_psd_contract():
    # single-qubit <Z> = 1 on each qubit together with <ZZ> = -1 is unphysical
    bad = (np.eye(4) + kron(SZ, np.eye(2)) + kron(np.eye(2), SZ) - kron(SZ, SZ)) / 4
    assert np.linalg.eigvalsh(bad).min() < 0
    out = project_psd(bad)
    assert np.linalg.eigvalsh(out).min() >= -1e-12
    assert np.trace(out).real == pytest.approx(1, abs=1e-12)


def test_project_psd_keeps_valid_states(rng):
    m = random_density(rng, 8)
    np.testing.assert_allclose(project_psd(m), m, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=4, max_size=4), st.integers(0, 2 ** 31))
def test_project_psd_is_nearest_among_spectra(vals, seed):
    # with a fixed eigenbasis the projection reduces to the simplex projection of the spectrum
    rng = np.random.default_rng(seed)
    u = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
    w = np.array(vals) + (1 - sum(vals)) / 4
    m = (u * w) @ u.conj().T
    out = project_psd(m)
    got = np.sort(np.linalg.eigvalsh(out))
    # brute force: Euclidean projection of w onto the probability simplex
    s = np.sort(w)[::-1]
    css = np.cumsum(s) - 1
    k = np.nonzero(s - css / np.arange(1, 5) > 0)[0][-1]
    ref = np.sort(np.maximum(w - css[k] / (k + 1), 0))
    np.testing.assert_allclose(got, ref, atol=1e-9)


def test_fidelity_pure_dims_checked():
    with pytest.raises(UsageError):
        fidelity_pure(ghz_state(3).density(), bell_states()["psi-"])
