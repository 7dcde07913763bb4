"""Estimator-style front end: fit a target gate, then apply the simulated map to states."""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .dynamics import SimulationConfig, propagate
from .gates import Inadmissible, decompose, parse_ordering
from .metrics import average_gate_fidelity
from .pulses import DEFAULT_GAP, synthesize
from .rotor import propanediol, solve_spectrum


def check_target(U, tol=1e-10):
    U = np.asarray(U, dtype=complex)
    if U.shape != (3, 3):
        raise ValueError(f"target must be a 3x3 matrix, got shape {U.shape}")
    if not np.all(np.isfinite(U)):
        raise ValueError("target contains non-finite entries")
    if np.abs(U.conj().T @ U - np.eye(3)).max() > tol:
        raise ValueError("target is not unitary")
    return U


def check_states(X, tol=1e-8):
    """Rows of ``X`` as normalized qutrit kets; a single 3-vector is promoted to one row."""
    X = np.asarray(X, dtype=complex)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != 3:
        raise ValueError(f"expected states of shape (n_samples, 3), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("states contain non-finite entries")
    norms = np.linalg.norm(X, axis=1)
    if np.any(np.abs(norms - 1) > tol):
        raise ValueError("every input state must be normalized")
    return X


class QutritGateDesigner(BaseEstimator, TransformerMixin):
    """Designs and simulates the pulse train for a target single-qutrit gate.

    ``fit(target)`` decomposes the target for ``ordering``, synthesizes the pulses
    and propagates them. ``transform`` maps input kets through the simulated
    computational-subspace map; ``predict`` returns the most likely basis outcome;
    ``score`` is the mean state fidelity against the ideal target.
    """

    def __init__(self, ordering="cab", molecule=None, jmax=3, method="rwa",
                 durations_ns=None, gap_factor=DEFAULT_GAP, projective=False):
        self.ordering = ordering
        self.molecule = molecule
        self.jmax = jmax
        self.method = method
        self.durations_ns = durations_ns
        self.gap_factor = gap_factor
        self.projective = projective

    def fit(self, X, y=None):
        target = check_target(X)
        ordering = parse_ordering(self.ordering)
        config = SimulationConfig(jmax=self.jmax, method=self.method)
        seq = decompose(target, ordering, projective=self.projective)
        if isinstance(seq, Inadmissible):
            raise ValueError(f"ordering {''.join(ordering)} is inadmissible for this target "
                             f"(residual {seq.residual:.3g})")
        mol = self.molecule or propanediol()
        basis = solve_spectrum(mol, self.jmax)
        pulses = synthesize(seq, basis, self.durations_ns, self.gap_factor)
        result = propagate(pulses, basis, config)
        self.target_ = target * np.exp(1j * seq.global_phase)
        self.sequence_ = seq
        self.pulses_ = pulses
        self.result_ = result
        self.M_hat_ = result.M_hat
        self.fidelity_ = average_gate_fidelity(result.M_hat, self.target_)
        self.leakage_ = result.leakage
        return self

    def transform(self, X):
        check_is_fitted(self, "M_hat_")
        return check_states(X) @ self.M_hat_.T

    def predict(self, X):
        return np.argmax(np.abs(self.transform(X)) ** 2, axis=1)

    def score(self, X, y=None):
        check_is_fitted(self, "M_hat_")
        X = check_states(X)
        ideal = X @ self.target_.T
        out = X @ self.M_hat_.T
        return float(np.mean(np.abs(np.sum(ideal.conj() * out, axis=1)) ** 2))
