import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from triqnet import circuits as c
from triqnet.errors import UsageError
from triqnet.qmath import (DensityMatrix, SX, SY, SZ, fidelity_pure, ghz_state, ket,
                           partial_trace, purity)

from conftest import random_density

S = 1 / math.sqrt(2)


def _same_up_to_phase(u, v, atol=1e-12):
    u, v = np.ravel(u), np.ravel(v)
    k = np.flatnonzero(np.abs(v) > 1e-9)[0]
    return np.allclose(u * (v[k] / u[k]), v, atol=atol)


def test_single_qubit_gate_actions():
    g, e = ket("g"), ket("e")
    np.testing.assert_allclose(c.Gate("X/2", ("q",)).matrix() @ g, S * (g - 1j * e))
    np.testing.assert_allclose(c.Gate("Y/2", ("q",)).matrix() @ g, S * (g - e))
    assert _same_up_to_phase(c.Gate("X", ("q",)).matrix(), SX)
    np.testing.assert_allclose(c.rphi(math.pi / 2, 0.7), c.ry(0.7), atol=1e-15)
    np.testing.assert_allclose(c.rphi(0.0, 0.7), c.rx(0.7), atol=1e-15)


def test_two_qubit_gates():
    np.testing.assert_allclose(c.ISWAP @ ket("eg"), 1j * ket("ge"), atol=1e-15)
    np.testing.assert_allclose(c.CZ @ ket("ee"), -ket("ee"))
    u = c.pswap(0.3)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-15)


def test_cnot_decomposition_is_exact():
    circ = c.Circuit(("a", "b"), c.cnot("a", "b"))
    for label, target in [("gg", "gg"), ("ge", "ge"), ("eg", "ee"), ("ee", "eg")]:
        rho0 = DensityMatrix(np.outer(ket(label), ket(label)), (2, 2))
        out = c.run_circuit(circ, rho0=rho0)
        assert fidelity_pure(out, ket(target)) == pytest.approx(1, abs=1e-12)
    # phases: |+>|g> -> Bell state
    plus = S * (ket("gg") + ket("eg"))
    out = c.run_circuit(circ, rho0=DensityMatrix(np.outer(plus, plus), (2, 2)))
    assert fidelity_pure(out, S * (ket("gg") + ket("ee"))) == pytest.approx(1, abs=1e-12)


def test_gate_validation():
    with pytest.raises(UsageError):
        c.Gate("H", ("q",))
    with pytest.raises(UsageError):
        c.Gate("CZ", ("q", "q"))
    with pytest.raises(UsageError):
        c.Gate("RY", ("q",))
    with pytest.raises(UsageError):
        c.Circuit(("a",), [c.Gate("X", ("b",))])
    with pytest.raises(UsageError):
        c.run_circuit(c.Circuit(("a",), []), tier="fast")


def test_bell_circuit_ideal():
    out = c.run_circuit(c.bell_circuit())
    assert fidelity_pure(out, S * (ket("eg") - ket("ge"))) == pytest.approx(1, abs=1e-12)


def test_swap_intermediate_states():
    _, snaps = c.run_circuit(c.swap_circuit(), snapshots=True)
    # register C1 C2 A2 B2: two singlet-like pairs A2C1 and B2C2
    pairs = 0.5 * (ket("ggee") - ket("geeg") - ket("egge") + ket("eegg"))
    assert fidelity_pure(snaps["bell_pairs"], pairs) == pytest.approx(1, abs=1e-12)
    after = 0.5 * (ket("ggee") - ket("geeg") + ket("eggg") - ket("eege"))
    assert fidelity_pure(snaps["after_cnot"], after) == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("variant", ["X/2", "Y/2"])
def test_swap_outcomes_ideal(variant):
    out = c.run_swap_protocol("ideal", variant)
    targets = c.swap_targets(variant)
    for k, (p, cond) in out.items():
        assert p == pytest.approx(0.25, abs=1e-12)
        assert fidelity_pure(cond, targets[k]) == pytest.approx(1, abs=1e-12)


def test_swap_targets_are_maximally_entangled():
    for variant in ("X/2", "Y/2"):
        for psi in c.swap_targets(variant).values():
            rho = DensityMatrix(np.outer(psi, psi.conj()), (2, 2))
            for k in (0, 1):
                np.testing.assert_allclose(partial_trace(rho, [k]).matrix, np.eye(2) / 2, atol=1e-15)


def test_swap_outcomes_circuit_tier():
    out = c.run_swap_protocol("circuit", "X/2")
    targets = c.swap_targets("X/2")
    assert sum(p for p, _ in out.values()) == pytest.approx(1)
    for k, (p, cond) in out.items():
        assert 0.6 < fidelity_pure(cond, targets[k]) < 0.95


def test_ghz3_ideal_with_intermediate():
    final, stage1 = c.run_ghz3("ideal", intermediate=True)
    assert fidelity_pure(final, ghz_state(3)) == pytest.approx(1, abs=1e-12)
    assert fidelity_pure(stage1, ghz_state(3, -1)) == pytest.approx(1, abs=1e-12)
    # the uncompensated-free variant reaches the same state
    assert fidelity_pure(c.run_ghz3("ideal", dd=False), ghz_state(3)) == pytest.approx(1, abs=1e-12)


def test_ghz5_ideal():
    assert fidelity_pure(c.run_ghz5("ideal"), ghz_state(5)) == pytest.approx(1, abs=1e-12)


def test_noisy_ghz_fidelities():
    f3 = fidelity_pure(c.run_ghz3("circuit"), ghz_state(3))
    f5 = fidelity_pure(c.run_ghz5("circuit"), ghz_state(5))
    assert 0.75 <= f3 <= 0.95
    assert f5 < f3


def test_four_x_decoupling_group_is_identity(rng):
    rho0 = DensityMatrix(random_density(rng, 4, 2), (2, 2))
    circ = c.Circuit(("a", "b"), [c.Gate("X", (q,), dd=True) for q in ("a", "b", "a", "b")])
    out = c.run_circuit(circ, rho0=rho0)
    np.testing.assert_allclose(out.matrix, rho0.matrix, atol=1e-14)


def test_ideal_circuits_preserve_purity(rng):
    circ = c.ghz3_circuit()
    out = c.run_circuit(circ)
    assert purity(out) == pytest.approx(1, abs=1e-12)


def test_text_round_trip():
    for circ in (c.ghz5_circuit(), c.swap_circuit("Y/2"),
                 c.Circuit(("a", "b"), [c.Gate("RPHI", ("a",), (0.25, 1.5)), c.Gate("PSWAP", ("a", "b"), (0.1,)),
                                        c.NoiseEvent(("b",), 10.0, 0.01, 0.002, 0.05)])):
        assert c.Circuit.from_text(circ.to_text()) == circ


def test_text_parse_errors():
    with pytest.raises(UsageError):
        c.Circuit.from_text("X a\n")
    with pytest.raises(UsageError):
        c.Circuit.from_text("QUBITS a\nRY a notanumber\n")


def test_depolarizing_parameter():
    assert c.depolarizing_p(1.0, 4) == 0.0
    assert c.depolarizing_p(0.956, 4) == pytest.approx(0.044 * 4 / 3)
    # fully depolarized state has average fidelity 1/d
    assert c.depolarizing_p(0.5, 2) == pytest.approx(1.0)


def test_noise_event_contracts_state(rng):
    rho0 = DensityMatrix(np.outer(ket("e"), ket("e")), (2,))
    circ = c.Circuit(("a",), [c.NoiseEvent(("a",), 100.0, 0.01, 0.0, 0.0)])
    out = c.run_circuit(circ, rho0=rho0)
    assert out.matrix[1, 1].real == pytest.approx(math.exp(-1), abs=1e-12)


@pytest.mark.parametrize("theta", np.linspace(0, math.pi, 8))
def test_attack_fidelity_and_eve_state(theta):
    four = c.apply_attack(ghz_state(3).density(), theta)
    assert fidelity_pure(c.attack_state(theta), ghz_state(3)) == pytest.approx((1 + math.cos(theta)) / 2, abs=1e-12)
    eve = np.sort(np.linalg.eigvalsh(partial_trace(four, [3]).matrix))
    np.testing.assert_allclose(eve, np.sort([math.cos(theta / 2) ** 2, math.sin(theta / 2) ** 2]), atol=1e-12)


def test_attack_validation():
    with pytest.raises(UsageError):
        c.apply_attack(ghz_state(3).density(), -0.1)
    excited_eve = DensityMatrix(np.kron(ghz_state(3).density().matrix, np.diag([0.0, 1.0])), (2,) * 4)
    with pytest.raises(UsageError):
        c.apply_attack(excited_eve, 0.5)


@settings(max_examples=25, deadline=None)
@given(st.floats(0, math.pi))
def test_attack_keeps_qubit_marginals(theta):
    # Eve only touches B2 through a phase, so single-qubit populations are untouched
    rho = c.attack_state(theta)
    for k in range(3):
        np.testing.assert_allclose(np.diag(partial_trace(rho, [k]).matrix).real, [0.5, 0.5], atol=1e-12)
