"""Fidelities, Gell-Mann Bloch vectors and error trajectories for a qutrit."""
import csv
from dataclasses import dataclass

import numpy as np

D = 3


def _gell_mann():
    L = np.zeros((8, 3, 3), dtype=complex)
    for k, (i, j) in zip((0, 3, 5), ((0, 1), (0, 2), (1, 2))):
        L[k, i, j] = L[k, j, i] = 1
        L[k + 1, i, j], L[k + 1, j, i] = -1j, 1j
    L[2] = np.diag([1, -1, 0])
    L[7] = np.diag([1, 1, -2]) / np.sqrt(3)
    return L


GELL_MANN = _gell_mann()
GELL_MANN.setflags(write=False)


def _unit_vector(psi, name="psi_in"):
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if psi.shape != (3,):
        raise ValueError(f"{name} must have 3 components")
    if abs(np.linalg.norm(psi) - 1) > 1e-10:
        raise ValueError(f"{name} must be normalized (norm {np.linalg.norm(psi):.3g})")
    return psi


def _unitary(U, name="target", tol=1e-10):
    U = np.asarray(U, dtype=complex)
    if U.shape != (3, 3):
        raise ValueError(f"{name} must be 3x3")
    if np.abs(U.conj().T @ U - np.eye(3)).max() > tol:
        raise ValueError(f"{name} is not unitary")
    return U


def average_gate_fidelity(M, target):
    """``[Tr(M^dag M) + |Tr(target^dag M)|^2] / (d (d + 1))`` with d = 3."""
    M = np.asarray(M, dtype=complex)
    T = _unitary(target)
    return float((np.real(np.trace(M.conj().T @ M)) + abs(np.trace(T.conj().T @ M)) ** 2) / (D * (D + 1)))


def state_fidelity(M, psi_in, target):
    psi = _unit_vector(psi_in)
    T = _unitary(target)
    return float(abs(np.vdot(T @ psi, np.asarray(M, dtype=complex) @ psi)) ** 2)


def leakage(M):
    M = np.asarray(M, dtype=complex)
    return float(1 - np.real(np.trace(M.conj().T @ M)) / D)


@dataclass(frozen=True)
class BlochVector8:
    s: np.ndarray
    time: float = 0.0

    def __getitem__(self, k):
        """1-based component, matching the lambda_k numbering."""
        return self.s[k - 1]


def bloch_components(rho):
    """``Tr(rho lambda_k)`` without validation (works for sub-normalized blocks)."""
    rho = np.asarray(rho, dtype=complex)
    return np.real(np.einsum("...ij,kji->...k", rho, GELL_MANN))


def bloch_vector(rho, time=0.0, tol=1e-8):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (3, 3):
        raise ValueError("rho must be 3x3")
    if np.abs(rho - rho.conj().T).max() > tol:
        raise ValueError("rho is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValueError(f"rho has trace {np.trace(rho).real:.6g}, expected 1")
    return BlochVector8(bloch_components(rho), float(time))


def reconstruct(s):
    s = s.s if isinstance(s, BlochVector8) else np.asarray(s, dtype=float)
    return np.eye(3) / 3 + 0.5 * np.einsum("k,kij->ij", s, GELL_MANN)


def density(psi):
    psi = np.asarray(psi, dtype=complex)
    return np.einsum("...i,...j->...ij", psi, psi.conj())


@dataclass(frozen=True)
class BlochSeries:
    """Bloch components ``s[k, :]`` of the computational block at ``times[k]``."""

    times: np.ndarray
    s: np.ndarray

    @classmethod
    def from_states(cls, times, states, computational):
        """``states``: (K, N) full-space kets; the 3x3 computational block of each projector is used."""
        block = np.asarray(states)[:, list(computational)]
        return cls(np.asarray(times, dtype=float), bloch_components(density(block)))


def deviation_trajectory(run_err, run_ideal, atol=1e-9):
    """Componentwise ``s_err(t) - s_ideal(t)`` on a shared time grid."""
    if run_err.times.shape != run_ideal.times.shape or np.abs(run_err.times - run_ideal.times).max(initial=0) > atol:
        raise ValueError("trajectories are sampled on different time grids")
    return BlochSeries(run_err.times.copy(), run_err.s - run_ideal.s)


def plane_projection(series, components=(1, 4, 6)):
    """Columns of the requested 1-based components, e.g. (ds1, ds4, ds6)."""
    return series.s[:, [k - 1 for k in components]]


TRAJECTORY_COLUMNS = ["t_ns"] + [f"ds{k}" for k in range(1, 9)]


def write_trajectory_csv(path, series):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(TRAJECTORY_COLUMNS)
        for t, row in zip(series.times, series.s):
            w.writerow([f"{t:.6f}"] + [f"{x:.12e}" for x in row])


def write_table_csv(path, columns, rows):
    """Rows are mappings keyed by ``columns``; floats are written with 12 significant digits."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(columns)
        for r in rows:
            w.writerow([f"{r[c]:.12g}" if isinstance(r[c], float) else r[c] for c in columns])
