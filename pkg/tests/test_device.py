import math
from dataclasses import replace

import numpy as np
import pytest

from triqnet import device
from triqnet.errors import NumericalError, UsageError
from triqnet.params import DeviceParams, QubitParams
from triqnet.qmath import DensityMatrix, bell_states, fidelity_pure, purity

from oracles import single_excitation_transfer

P = DeviceParams()
A2, C1, CH = P.endpoints("a2c1")


def _oracle(q_e, q_r, ch, half, ideal=False):
    return single_excitation_transfer((q_e.T1, q_r.T1), (q_e.T2, q_r.T2), ch.T1, ch.T2, M=ch.M,
                                      fsr=ch.omega_FSR, g1=ch.g1, g2=ch.g2,
                                      tau1=device.swap_time(ch.g1, 0.5 if half else 1.0),
                                      tau2=device.receive_time(ch), ideal=ideal)


def test_durations_match_quoted_values():
    assert device.swap_time(2.5) == pytest.approx(100.0)
    assert device.swap_time(2.5, 0.5) == pytest.approx(50.0)
    assert device.receive_time(CH) == 80.6


def test_hamiltonian_couplings_off_is_diagonal():
    ch = replace(CH, M=1)
    h = device.build_hamiltonian(A2, C1, ch, (False, False))
    assert np.count_nonzero(h - np.diag(np.diag(h))) == 0
    # single mode sits at the central frequency, so everything is zero
    assert np.allclose(h, 0)


def test_mode_detunings_and_receiver_signs():
    np.testing.assert_allclose(device.mode_detunings(CH), [-100, -50, 0, 50, 100])
    np.testing.assert_allclose(device.receiver_coupling_signs(CH), [-1, 1, -1, 1, -1])


def test_hamiltonian_structure():
    h = device.build_hamiltonian(A2, C1, CH, (True, False))
    assert h.shape == (128, 128)
    np.testing.assert_allclose(h, h.conj().T)
    g1 = device.rad_per_ns(CH.g1)
    # |e, g, 0...> couples to each single-photon mode state with g1
    e = 1 << 6
    for m in range(5):
        assert h[e, 1 << (4 - m)] == pytest.approx(g1)
    h2 = device.build_hamiltonian(A2, C1, CH, (False, True))
    r = 1 << 5
    for m in range(5):
        assert h2[r, 1 << (4 - m)] == pytest.approx((-1) ** (m + 1) * device.rad_per_ns(CH.g2))


def test_segment_validation():
    with pytest.raises(UsageError):
        device.Segment(10.0, g1_on=True, g2_on=True)
    with pytest.raises(UsageError):
        device.Segment(0.0)
    with pytest.raises(UsageError):
        device.PulseSchedule(())


def _excited_emitter(ch):
    n = 2 + ch.M
    rho = np.zeros((2 ** n, 2 ** n))
    rho[1 << (n - 1), 1 << (n - 1)] = 1
    return DensityMatrix(rho, (2,) * n)


def test_dims_mismatch_is_usage_error():
    with pytest.raises(UsageError):
        device.lindblad_evolve(DensityMatrix.maximally_mixed((2, 2)),
                               device.PulseSchedule([device.Segment(1.0)]), A2, C1, CH)


def test_no_decoherence_couplings_off_keeps_populations(rng):
    ch = replace(CH, M=1)
    a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    m = a @ a.conj().T
    rho0 = DensityMatrix(m / np.trace(m).real, (2, 2, 2))
    out = device.lindblad_evolve(rho0, device.PulseSchedule([device.Segment(123.0)]), A2, C1, ch, ideal=True)
    np.testing.assert_allclose(np.diag(out.matrix), np.diag(rho0.matrix), atol=1e-12)


def test_free_decay_over_T1():
    q = QubitParams("A2", 4.8, T1=0.1, T2=0.2, F_g=0.97, F_e=0.93)
    ch = replace(CH, M=1)
    out = device.lindblad_evolve(_excited_emitter(ch), device.PulseSchedule([device.Segment(100.0)]), q, C1, ch)
    assert out.matrix[4, 4].real + out.matrix[5, 5].real + out.matrix[6, 6].real + out.matrix[7, 7].real \
        == pytest.approx(math.exp(-1), abs=1e-4)


def test_lossless_swap_into_single_mode():
    ch = replace(CH, M=1)
    out = device.lindblad_evolve(_excited_emitter(ch), device.PulseSchedule([device.Segment(100.0, g1_on=True)]),
                                 A2, C1, ch, ideal=True)
    assert out.matrix[1, 1].real >= 0.999


def test_integrator_divergence_raises():
    ch = replace(CH, M=3)
    with pytest.raises(NumericalError):
        device.lindblad_evolve(_excited_emitter(ch), device.PulseSchedule([device.Segment(200.0, g1_on=True)]),
                               A2, C1, ch, dt=5.0)


@pytest.mark.parametrize("M", [1, 3])
@pytest.mark.parametrize("key", ["a2c1", "c2b2", "b1a1"])
def test_transfer_matches_expm_oracle(key, M):
    q_e, q_r, ch = P.endpoints(key)
    ch = replace(ch, M=M)
    for half in (False, True):
        res = (device.run_half_transfer if half else device.run_transfer)(q_e, q_r, ch)
        np.testing.assert_allclose(res.rho_final.matrix, _oracle(q_e, q_r, ch, half), atol=1e-9)


def test_transfer_matches_oracle_both_backends(backend):
    ch = replace(CH, M=1)
    res = device.run_half_transfer(A2, C1, ch)
    np.testing.assert_allclose(res.rho_final.matrix, _oracle(A2, C1, ch, True), atol=1e-9)


def test_five_mode_half_transfer_matches_oracle():
    res = device.run_half_transfer(A2, C1, CH)
    ref = _oracle(A2, C1, CH, True)
    np.testing.assert_allclose(res.rho_final.matrix, ref, atol=1e-9)
    assert res.F_Bell == pytest.approx(0.903207, abs=1e-6)


def test_ideal_five_mode_transfer():
    res = device.run_transfer(A2, C1, CH, ideal=True)
    assert res.eta_t >= 0.99
    # expm oracle on the single-excitation block
    assert res.eta_t == pytest.approx(0.993195, abs=1e-6)


def test_ideal_half_transfer_limited_by_mode_leakage():
    # with five modes the off-resonant +-50 MHz modes keep some population
    res = device.run_half_transfer(A2, C1, CH, ideal=True)
    assert res.F_Bell == pytest.approx(0.966409, abs=1e-6)
    single = device.run_half_transfer(A2, C1, replace(CH, M=1), ideal=True)
    assert single.F_Bell >= 0.99


def test_ideal_evolution_conserves_purity():
    ch = replace(CH, M=3)
    out = device.lindblad_evolve(_excited_emitter(ch), device.transfer_schedule(ch, 0.5), A2, C1, ch, ideal=True)
    assert purity(out) == pytest.approx(1.0, abs=1e-6)


def test_trace_and_hermiticity():
    ch = replace(CH, M=3)
    out = device.lindblad_evolve(_excited_emitter(ch), device.transfer_schedule(ch), A2, C1, ch)
    assert np.trace(out.matrix).real == pytest.approx(1, abs=1e-8)
    assert np.abs(out.matrix - out.matrix.conj().T).max() < 1e-8


def test_step_halving():
    ch = replace(CH, M=3)
    a = device.run_transfer(A2, C1, ch, dt=0.05).eta_t
    b = device.run_transfer(A2, C1, ch, dt=0.025).eta_t
    assert abs(a - b) < 1e-4


def test_monotone_in_channel_loss():
    etas, fids = [], []
    for t1 in (2.0, 1.2, 0.6):
        ch = replace(CH, M=3, T1=t1, T2=min(CH.T2, 2 * t1))
        etas.append(device.run_transfer(A2, C1, ch).eta_t)
        fids.append(device.run_half_transfer(A2, C1, ch).F_Bell)
    assert etas[0] >= etas[1] >= etas[2]
    assert fids[0] >= fids[1] >= fids[2]


def test_transfer_process_ideal_phase_flip():
    ch = replace(CH, M=1)
    t = device.transfer_process(A2, C1, ch, ideal=True)
    # |e> on the emitter arrives as |e> on the receiver with a sign flip on coherences
    assert t[1, 1][1, 1].real == pytest.approx(1, abs=1e-6)
    assert t[0, 1][0, 1] == pytest.approx(-1, abs=1e-6)


def test_transfer_process_consistent_with_run_transfer():
    ch = replace(CH, M=1)
    t = device.transfer_process(A2, C1, ch)
    res = device.run_transfer(A2, C1, ch)
    np.testing.assert_allclose(t[1, 1], res.rho_final.matrix, atol=1e-12)


def test_half_transfer_bell_overlap_definition():
    ch = replace(CH, M=1)
    res = device.run_half_transfer(A2, C1, ch)
    assert res.F_Bell == pytest.approx(fidelity_pure(res.rho_final, bell_states()["psi-"]))


def test_chevron_single_mode_rabi():
    ch = replace(CH, M=1)
    t = np.linspace(0, 300, 61)
    pe = device.rabi_chevron(A2, ch, [0.0], t, ideal=True)[0]
    np.testing.assert_allclose(pe, np.cos(device.rad_per_ns(ch.g1) * t) ** 2, atol=1e-3)


def test_chevron_detuned_bound():
    ch = replace(CH, M=1)
    g = ch.g1
    delta = 10 * g
    t = np.linspace(0, 400, 801)
    pe = device.rabi_chevron(A2, ch, [delta], t, ideal=True)[0]
    assert 1 - pe.min() <= g ** 2 / (g ** 2 + (delta / 2) ** 2) + 1e-3


def test_chevron_resonances_spaced_by_fsr():
    det = np.arange(-120.0, 121.0, 5.0)
    pe = device.rabi_chevron(A2, CH, det, np.linspace(0, 400, 81), ideal=True).mean(axis=1)
    minima = [det[i] for i in range(1, len(det) - 1) if pe[i] < pe[i - 1] and pe[i] < pe[i + 1]]
    assert minima == [-100.0, -50.0, 0.0, 50.0, 100.0]


def test_chevron_grid_validation():
    with pytest.raises(UsageError):
        device.rabi_chevron(A2, CH, [], [1.0])
