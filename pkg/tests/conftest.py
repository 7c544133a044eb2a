import numpy as np
import pytest

from triqnet import kernels


@pytest.fixture(params=sorted(kernels.available_backends()))
def backend(request, monkeypatch):
    """Run the test once per importable kernel backend."""
    mod = kernels.available_backends()[request.param]
    monkeypatch.setattr(kernels, "lindblad_rk4", mod.lindblad_rk4)
    monkeypatch.setattr(kernels, "jacobi_eigh", mod.jacobi_eigh)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_density(rng, n, rank=None):
    rank = rank or n
    a = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    m = a @ a.conj().T
    return m / np.trace(m).real


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
