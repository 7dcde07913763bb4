import mpmath
import numpy as np
import pytest

from qutritmol.dynamics import (ConfigurationError, NumericalStabilityError, PropagationResult,
                                SimulationConfig, interaction_hamiltonian, magnus1_propagator,
                                project_computational, propagate, uniform_checkpoints)
from qutritmol.dynamics import _dd1, _dd2, _phi1, _phi2
from qutritmol.gates import ElementaryRotation, elementary_unitary
from qutritmol.pulses import PulseSequence, field_at, schedule, single_pulse


def _reference_hamiltonian(t, basis, seq):
    """Lab-frame coupling rotated into the interaction picture, built from the raw field."""
    E = field_at(seq, t)
    V = np.zeros((len(basis), len(basis)), dtype=complex)
    for q in (-1, 0, 1):
        V += -((-1) ** q) * basis.dipole[q] * E[1 - q]
    D = np.exp(1j * basis.omegas * t)
    return D[:, None] * V * D.conj()[None, :]


def _brute_force(basis, seq, n):
    """Midpoint product formula with n steps over the sequence."""
    t0, t1 = 0.0, seq.total_duration
    h = (t1 - t0) / n
    U = np.eye(len(basis), dtype=complex)
    for k in range(n):
        H = _reference_hamiltonian(t0 + (k + 0.5) * h, basis, seq)
        w, v = np.linalg.eigh(H)
        U = (v * np.exp(-1j * w * h)) @ v.conj().T @ U
    return U


def test_interaction_hamiltonian_matches_reference(basis):
    seq = single_pulse("a", basis, 0.7, 0.4, 3.0)
    for t in (10.0, 24.0, 30.5):
        H = interaction_hamiltonian(t, basis, seq)
        assert np.abs(H - _reference_hamiltonian(t, basis, seq)).max() < 1e-12
        assert np.abs(H - H.conj().T).max() < 1e-14


def test_exact_method_against_richardson_brute_force(small_basis):
    seq = single_pulse("a", small_basis, np.pi / 3, 0.8, 1.2)
    n = 8000
    coarse = _brute_force(small_basis, seq, n)
    fine = _brute_force(small_basis, seq, 2 * n)
    ref = (4 * fine - coarse) / 3
    errs = [np.abs(propagate(seq, small_basis, SimulationConfig(jmax=1, dt=dt)).U_full - ref).max()
            for dt in (0.1, 0.02)]
    assert errs[1] < 1e-5
    assert errs[1] < errs[0] / 10


def test_step_halving_changes_fidelity_negligibly(basis):
    from qutritmol.gates import ElementaryRotation, elementary_unitary
    from qutritmol.metrics import average_gate_fidelity
    for label, tau in (("a", 6.3), ("c", 163.8)):
        seq = single_pulse(label, basis, np.pi / 4, 0.8, tau)
        target = elementary_unitary(ElementaryRotation(label, np.pi / 4, 0.8))
        a = propagate(seq, basis, SimulationConfig())
        b = propagate(seq, basis, SimulationConfig(max_phase=0.025, steps_per_tau=12))
        assert abs(average_gate_fidelity(a.M_hat, target) - average_gate_fidelity(b.M_hat, target)) < 1e-7
        assert np.abs(a.U_full - b.U_full).max() < 5e-5


@pytest.mark.parametrize("method", ["exact", "rwa", "magnus1"])
def test_unitarity(basis, method):
    seq = single_pulse("b", basis, 1.1, 2.0, 7.0)
    r = propagate(seq, basis, SimulationConfig(method=method))
    assert np.abs(r.U_full.conj().T @ r.U_full - np.eye(len(basis))).max() < 1e-10


def test_zero_field_is_identity(basis):
    sub = single_pulse("a", basis, 0.0, 0.0, 5.0)[0]
    r = propagate(PulseSequence((sub,)), basis)
    assert np.allclose(r.U_full, np.eye(len(basis)), atol=1e-14)
    assert r.leakage == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("label,theta,phi", [("a", np.pi / 4, 0.3), ("b", np.pi / 3, 1.0), ("c", 0.5, 4.0)])
def test_long_pulse_reproduces_ideal_rotation(basis, label, theta, phi):
    seq = single_pulse(label, basis, theta, phi, 10000.0)
    r = propagate(seq, basis, SimulationConfig(method="exact"))
    m = propagate(seq, basis, SimulationConfig(method="magnus1"))
    assert np.abs(r.M_hat - m.M_hat).max() < 1e-4
    ideal = elementary_unitary(ElementaryRotation(label, theta, phi))
    assert np.abs(r.M_hat - ideal).max() < 1e-4


def test_stark_deviation_scales_inversely_with_duration(basis):
    dev = []
    for tau in (200.0, 800.0):
        seq = single_pulse("c", basis, np.pi / 4, 0.0, tau)
        r = propagate(seq, basis, SimulationConfig(method="exact"))
        m = propagate(seq, basis, SimulationConfig(method="magnus1"))
        dev.append(np.abs(r.M_hat - m.M_hat).max())
    assert dev[0] / dev[1] == pytest.approx(4.0, rel=0.1)


def test_rwa_close_to_exact_for_long_pulse(basis):
    seq = single_pulse("b", basis, np.pi / 4, 0.2, 500.0)
    e = propagate(seq, basis, SimulationConfig(method="exact")).M_hat
    w = propagate(seq, basis, SimulationConfig(method="rwa")).M_hat
    assert np.abs(e - w).max() < 1e-3


def test_magnus1_propagator_is_two_level(basis):
    sub = single_pulse("a", basis, 0.9, 0.1, 6.3)[0]
    U = magnus1_propagator(sub, basis)
    lo, up = sub.transition
    assert U[lo, up] == pytest.approx(1j * np.sin(0.9) * np.exp(0.1j), abs=1e-4)
    others = [k for k in range(len(basis)) if k not in (lo, up)]
    assert np.allclose(U[np.ix_(others, others)], np.eye(len(others)))


def test_checkpoints(basis):
    seq = single_pulse("a", basis, np.pi / 2, 0.0, 5.0)
    times = uniform_checkpoints(seq, 9)
    r = propagate(seq, basis, SimulationConfig(method="rwa"), checkpoints=times)
    assert r.columns.shape == (9, len(basis), 3)
    psi = np.array([1, 0, 0], dtype=complex)
    states = r.states(psi)
    assert np.allclose(states[0][0], 1.0)
    assert np.allclose(states[-1], r.U_full[:, list(r.computational)] @ psi)
    assert np.allclose(np.linalg.norm(states, axis=1), 1.0)
    with pytest.raises(ValueError):
        propagate(seq, basis, SimulationConfig(method="rwa")).states(psi)


def test_project_computational():
    U = np.arange(16).reshape(4, 4)
    assert np.array_equal(project_computational(U, (0, 2, 3)), U[np.ix_([0, 2, 3], [0, 2, 3])])


def test_config_validation(basis):
    with pytest.raises(ConfigurationError):
        SimulationConfig(method="euler")
    with pytest.raises(ConfigurationError):
        SimulationConfig(dt=-1.0)
    with pytest.raises(ConfigurationError):
        SimulationConfig(max_phase=0)
    with pytest.raises(TypeError):
        propagate("seq", basis)


def test_unitarity_guard(basis):
    seq = single_pulse("a", basis, np.pi / 2, 0.0, 5.0)
    with pytest.raises(NumericalStabilityError):
        propagate(seq, basis, SimulationConfig(unitarity_tol=0.0))


def test_divided_difference_helpers():
    rng = np.random.default_rng(5)
    for a, b, c in rng.normal(scale=3, size=(20, 3)):
        f = lambda x: np.exp(1j * x)
        assert _dd1(np.array(a), np.array(b)) == pytest.approx((f(a) - f(b)) / (1j * (a - b)), rel=1e-10)
        d2 = ((f(a) - f(b)) / (1j * (a - b)) - (f(b) - f(c)) / (1j * (b - c))) / (1j * (a - c))
        assert _dd2(np.array(a), np.array(b), np.array(c)) == pytest.approx(d2, rel=1e-8)
    # confluent limit
    assert _dd2(np.array(0.3), np.array(0.3), np.array(0.3)) == pytest.approx(0.5 * np.exp(0.3j), rel=1e-12)
    for y in (1e-6, 1e-3, 0.05, 0.3, 2.0):
        with mpmath.workdps(40):
            z = mpmath.mpc(0, y)
            exact2 = complex((mpmath.exp(z) - 1 - z) / z**2)
            exact1 = complex((mpmath.exp(z) - 1) / z)
        assert _phi2(np.array(y)) == pytest.approx(exact2, rel=1e-9)
        assert _phi1(np.array(y)) == pytest.approx(exact1, rel=1e-12)
