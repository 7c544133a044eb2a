import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import sparse

from triqnet import kernels
from triqnet._pykernels import jacobi_eigh as py_jacobi

from conftest import random_density
from oracles import full_space_evolve


def _random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


def test_backend_reported():
    assert kernels.BACKEND in kernels.available_backends()


@pytest.mark.parametrize("n", [1, 2, 5, 16, 64])
def test_jacobi_matches_numpy(backend, rng, n):
    a = _random_hermitian(rng, n)
    w, v, sweeps = kernels.jacobi_eigh(a, 1e-13 * max(1.0, np.linalg.norm(a)), 100)
    assert sweeps >= 0
    np.testing.assert_allclose(np.sort(w), np.linalg.eigvalsh(a), atol=1e-10)
    np.testing.assert_allclose(v.conj().T @ v, np.eye(n), atol=1e-10)
    np.testing.assert_allclose(a @ v, v * w, atol=1e-9)


def test_jacobi_reports_nonconvergence():
    a = _random_hermitian(np.random.default_rng(1), 12)
    assert py_jacobi(a, 1e-14, 0)[2] == -1


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2 ** 32 - 1))
def test_jacobi_property_reconstructs(n, seed):
    a = _random_hermitian(np.random.default_rng(seed), n)
    w, v, _ = kernels.jacobi_eigh(a, 1e-13 * max(1.0, np.linalg.norm(a)), 100)
    np.testing.assert_allclose((v * w) @ v.conj().T, a, atol=1e-9)


def _problem(rng, n):
    d = 2 ** n
    h = _random_hermitian(rng, d) * 0.05
    gd = rng.uniform(0, 0.01, n)
    gp = rng.uniform(0, 0.01, n)
    idx = np.arange(d)
    decay = np.zeros((d, d))
    for k in range(n):
        occ = ((idx >> (n - 1 - k)) & 1).astype(float)
        decay -= 0.5 * gd[k] * (occ[:, None] + occ[None, :]) + gp[k] * (occ[:, None] - occ[None, :]) ** 2
    masks = np.array([1 << (n - 1 - k) for k in range(n)], dtype=np.int_)
    hs = sparse.csr_matrix(h)
    return h, hs, decay, gd, gp, masks


def test_rk4_matches_dense_expm(backend, rng):
    n = 3
    h, hs, decay, gd, gp, masks = _problem(rng, n)
    rho0 = random_density(rng, 2 ** n)
    t, steps = 20.0, 400
    out = kernels.lindblad_rk4(rho0, hs.data, hs.indices.astype(np.intc), hs.indptr.astype(np.intc),
                               decay, gd, masks, t / steps, steps)
    ref = full_space_evolve(rho0, h, gd, gp, t)
    np.testing.assert_allclose(out, ref, atol=1e-10)


def test_backends_agree(rng):
    backends = kernels.available_backends()
    if len(backends) < 2:
        pytest.skip("compiled extension not built")
    n = 4
    h, hs, decay, gd, _, masks = _problem(rng, n)
    rho0 = random_density(rng, 2 ** n)
    args = (hs.data, hs.indices.astype(np.intc), hs.indptr.astype(np.intc), decay, gd, masks, 0.05, 200)
    a = backends["cython"].lindblad_rk4(rho0, *args)
    b = backends["python"].lindblad_rk4(rho0, *args)
    np.testing.assert_allclose(a, b, atol=1e-14)
    m = _random_hermitian(rng, 24)
    wa = np.sort(backends["cython"].jacobi_eigh(m, 1e-12, 100)[0])
    wb = np.sort(backends["python"].jacobi_eigh(m, 1e-12, 100)[0])
    np.testing.assert_allclose(wa, wb, atol=1e-10)


def test_rk4_does_not_modify_input(backend, rng):
    n = 2
    _, hs, decay, gd, _, masks = _problem(rng, n)
    rho0 = random_density(rng, 4)
    keep = rho0.copy()
    kernels.lindblad_rk4(rho0, hs.data, hs.indices.astype(np.intc), hs.indptr.astype(np.intc),
                         decay, gd, masks, 0.1, 5)
    assert np.array_equal(rho0, keep)


def test_rk4_trace_preserved(backend, rng):
    n = 3
    _, hs, decay, gd, _, masks = _problem(rng, n)
    rho0 = random_density(rng, 8)
    out = kernels.lindblad_rk4(rho0, hs.data, hs.indices.astype(np.intc), hs.indptr.astype(np.intc),
                               decay, gd, masks, 0.05, 1000)
    assert math.isclose(np.trace(out).real, 1.0, abs_tol=1e-10)
    np.testing.assert_allclose(out, out.conj().T, atol=1e-12)
