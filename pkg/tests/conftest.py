import numpy as np
import pytest

from qutritmol.rotor import propanediol, solve_spectrum


@pytest.fixture(scope="session")
def molecule():
    return propanediol()


@pytest.fixture(scope="session")
def basis(molecule):
    return solve_spectrum(molecule, 3)


@pytest.fixture(scope="session")
def small_basis(molecule):
    return solve_spectrum(molecule, 1)


def random_unitary(rng, n=3):
    z = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
