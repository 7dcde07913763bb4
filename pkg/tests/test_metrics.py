import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_unitary
from qutritmol.metrics import (GELL_MANN, TRAJECTORY_COLUMNS, BlochSeries, average_gate_fidelity,
                               bloch_components, bloch_vector, density, deviation_trajectory, leakage,
                               plane_projection, reconstruct, state_fidelity, write_table_csv,
                               write_trajectory_csv)

seeds = st.integers(0, 2**32 - 1)


def test_gell_mann_normalization():
    for j in range(8):
        assert np.allclose(GELL_MANN[j], GELL_MANN[j].conj().T)
        assert abs(np.trace(GELL_MANN[j])) < 1e-15
        for k in range(8):
            assert np.trace(GELL_MANN[j] @ GELL_MANN[k]) == pytest.approx(2.0 * (j == k), abs=1e-14)


def test_gell_mann_component_meaning():
    # lambda_6 is the real |1><2| coherence, lambda_1 and lambda_4 the |0> coherences
    assert GELL_MANN[5][1, 2] == 1 and GELL_MANN[0][0, 1] == 1 and GELL_MANN[3][0, 2] == 1
    assert GELL_MANN[6][1, 2] == -1j


def test_gell_mann_is_read_only():
    with pytest.raises(ValueError):
        GELL_MANN[0, 0, 0] = 2


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_fidelity_bounds_and_identity(seed):
    rng = np.random.default_rng(seed)
    U, V = random_unitary(rng), random_unitary(rng)
    assert average_gate_fidelity(U, U) == pytest.approx(1.0)
    assert average_gate_fidelity(U * np.exp(0.3j), U) == pytest.approx(1.0)
    F = average_gate_fidelity(V, U)
    assert 0.25 - 1e-12 <= F <= 1 + 1e-12
    psi = rng.normal(size=3) + 1j * rng.normal(size=3)
    psi /= np.linalg.norm(psi)
    assert 0 <= state_fidelity(V, psi, U) <= 1 + 1e-12


def test_fidelity_equals_haar_average_of_state_fidelity():
    rng = np.random.default_rng(1)
    U, V = random_unitary(rng), random_unitary(rng)
    # exact 2-design average: the 12 states of mutually unbiased bases in d = 3
    w = np.exp(2j * np.pi / 3)
    ft = np.array([[1, 1, 1], [1, w, w**2], [1, w**2, w]]) / np.sqrt(3)
    mub = list(np.eye(3, dtype=complex))
    for k in range(3):
        mub += list((np.diag([1, w**k, w**k]) @ ft).T)
    avg = np.mean([state_fidelity(V, p, U) for p in mub])
    assert avg == pytest.approx(average_gate_fidelity(V, U), abs=1e-12)


def test_leakage_and_nonunitary_map():
    M = np.diag([1.0, np.sqrt(0.9), 1.0])
    assert leakage(M) == pytest.approx(0.1 / 3)
    assert average_gate_fidelity(M, np.eye(3)) < 1
    with pytest.raises(ValueError):
        average_gate_fidelity(np.eye(3), 2 * np.eye(3))
    with pytest.raises(ValueError):
        state_fidelity(np.eye(3), [1, 1, 0], np.eye(3))


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_bloch_round_trip(seed):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=3) + 1j * rng.normal(size=3)
    psi /= np.linalg.norm(psi)
    rho = density(psi)
    s = bloch_vector(rho, time=1.5)
    assert np.allclose(reconstruct(s), rho)
    assert np.dot(s.s, s.s) == pytest.approx(4 / 3)  # pure qutrit state
    assert s.time == 1.5 and s[6] == s.s[5]


def test_bloch_vector_validation():
    with pytest.raises(ValueError):
        bloch_vector(np.eye(3))
    with pytest.raises(ValueError):
        bloch_vector(np.array([[1, 1j, 0], [1j, 0, 0], [0, 0, 0]]))
    with pytest.raises(ValueError):
        bloch_vector(np.eye(2) / 2)
    # unvalidated path accepts a sub-normalized block
    assert bloch_components(0.5 * density([1, 0, 0])).shape == (8,)


def test_specific_components():
    s = bloch_vector(density(np.array([0, 1, 1]) / np.sqrt(2)))
    assert s[6] == pytest.approx(1.0)
    assert s[1] == pytest.approx(0.0) and s[4] == pytest.approx(0.0)


def test_series_and_deviation(tmp_path):
    times = np.linspace(0, 10, 5)
    states = np.zeros((5, 4), dtype=complex)
    states[:, 0] = 1
    other = states.copy()
    other[:, 0] = np.cos(0.1 * times)
    other[:, 1] = np.sin(0.1 * times)
    a = BlochSeries.from_states(times, other, (0, 1, 2))
    b = BlochSeries.from_states(times, states, (0, 1, 2))
    d = deviation_trajectory(a, b)
    assert np.allclose(d.s, a.s - b.s)
    assert plane_projection(d).shape == (5, 3)
    assert np.allclose(plane_projection(d)[:, 0], np.sin(0.2 * times))
    with pytest.raises(ValueError):
        deviation_trajectory(a, BlochSeries(times + 1, b.s))
    path = tmp_path / "traj.csv"
    write_trajectory_csv(path, d)
    lines = path.read_text().splitlines()
    assert lines[0].split(",") == TRAJECTORY_COLUMNS and len(lines) == 6


def test_table_csv(tmp_path):
    path = tmp_path / "t.csv"
    write_table_csv(path, ["x", "name"], [{"x": 0.1, "name": "a"}, {"x": 2.0, "name": "b"}])
    assert path.read_text().splitlines() == ["x,name", "0.1,a", "2,b"]
