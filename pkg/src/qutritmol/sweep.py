"""Numerical experiments: fidelity maps, error sweeps and Bloch-vector trajectories."""
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from . import __version__
from .dynamics import SimulationConfig, propagate, uniform_checkpoints
from .gates import (WALSH_HADAMARD_ORDERINGS, ElementaryRotation, ErrorModel, decompose,
                    elementary_unitary, gate_error_coefficient, phase_unitary, PhaseGate,
                    state_error_coefficient, walsh_hadamard)
from .metrics import BlochSeries, average_gate_fidelity, deviation_trajectory, state_fidelity
from .pulses import (DEFAULT_GAP, DEFAULT_DURATIONS, Encoding, PulseSequence, make_subpulse,
                     schedule, synthesize)
from .rotor import propanediol, solve_spectrum

EXPERIMENTS = ("fidelity_map", "amplitude_sweep", "phase_sweep", "trajectory")
_W = np.exp(2j * np.pi / 3)
NAMED_INPUTS = {
    "0": np.array([1, 0, 0], dtype=complex),
    "1": np.array([0, 1, 0], dtype=complex),
    "2": np.array([0, 0, 1], dtype=complex),
    "psi2": np.array([1, _W, _W.conjugate()]) / np.sqrt(3),
}


def input_state(name):
    if isinstance(name, str):
        try:
            return NAMED_INPUTS[name]
        except KeyError:
            raise ValueError(f"unknown input state {name!r}; known: {sorted(NAMED_INPUTS)}") from None
    v = np.asarray(name, dtype=complex)
    if v.shape != (3,) or abs(np.linalg.norm(v) - 1) > 1e-10:
        raise ValueError("input state must be a normalized 3-vector")
    return v


@dataclass(frozen=True)
class SweepSpec:
    """One experiment.

    ``grid`` keys: fidelity_map -> ``channel``, ``theta`` and ``tau_ns`` (lists) and
    optionally ``phi``; amplitude/phase sweeps -> ``alpha`` (list); trajectory ->
    ``alpha`` (single value) and optional ``n_checkpoints``.
    ``sequences`` are 1-based indices into the admissible Walsh-Hadamard orderings.
    """

    experiment: str
    grid: dict
    sequences: tuple = (1, 2, 3, 4)
    inputs: tuple = ("0", "psi2")
    method: str = "rwa"
    jmax: int = 3
    gap_factor: float = DEFAULT_GAP
    durations_ns: dict = field(default_factory=lambda: dict(DEFAULT_DURATIONS))
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {EXPERIMENTS}")
        if not self.sequences or any(s not in (1, 2, 3, 4) for s in self.sequences):
            raise ValueError("sequences must be a nonempty subset of 1..4")
        for name in self.inputs:
            input_state(name)
        SimulationConfig(jmax=self.jmax, method=self.method)
        g = self.grid
        if self.experiment == "fidelity_map":
            for key in ("channel", "theta", "tau_ns"):
                if key not in g:
                    raise ValueError(f"fidelity_map grid needs {key!r}")
            if not len(g["theta"]) or not len(g["tau_ns"]):
                raise ValueError("grid must be nonempty")
            if g["channel"] not in ("a", "b", "c", "P", "Q"):
                raise ValueError("channel must be one of a, b, c, P, Q")
        else:
            alpha = np.atleast_1d(g.get("alpha", []))
            if alpha.size == 0:
                raise ValueError("grid must be nonempty")
            if np.any(np.abs(alpha) > 0.5):
                raise ValueError("error magnitudes must satisfy |alpha| <= 0.5")
            if self.experiment == "trajectory" and alpha.size != 1:
                raise ValueError("trajectory takes a single alpha")

    @property
    def kind(self):
        return {"amplitude_sweep": "amplitude", "phase_sweep": "phase"}.get(
            self.experiment, self.grid.get("kind", "amplitude"))

    def to_dict(self):
        d = asdict(self)
        d["sequences"] = list(self.sequences)
        d["inputs"] = [i if isinstance(i, str) else [complex(z).real for z in i] for i in self.inputs]
        return d

    @classmethod
    def from_dict(cls, d):
        allowed = set(cls.__dataclass_fields__)
        unknown = set(d) - allowed
        if unknown:
            raise ValueError(f"unknown sweep keys: {sorted(unknown)}")
        d = dict(d)
        for key in ("sequences", "inputs"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


def config_hash(obj):
    blob = json.dumps(obj, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def manifest(config, molecule, method, tolerances=None, extra=None):
    m = {
        "package_version": __version__,
        "config_hash": config_hash(config),
        "molecule": molecule.to_dict(),
        "method": method,
        "tolerances": tolerances or {},
    }
    if extra:
        m.update(extra)
    return m


@lru_cache(maxsize=8)
def _basis(molecule, jmax):
    return solve_spectrum(molecule, jmax)


def sequence_for(index, target=None):
    seq = decompose(walsh_hadamard() if target is None else target, WALSH_HADAMARD_ORDERINGS[index - 1])
    if not seq:
        raise ValueError(f"sequence {index} is not admissible for the target")
    return seq


# --- fidelity maps -----------------------------------------------------------

def _elementary_pulses(channel, basis, theta, tau, phi, phase):
    pairs = Encoding().pairs(basis)
    if channel in "abc":
        subs = [make_subpulse(channel, basis, pairs[channel], theta, phi, tau)]
        target = elementary_unitary(ElementaryRotation(channel, theta, phi))
    elif channel == "P":
        subs = [make_subpulse("P1", basis, pairs["P"], theta, 0.0, tau),
                make_subpulse("P2", basis, pairs["P"], theta, phase - np.pi, tau)]
        target = phase_unitary(PhaseGate(phase, 0.0))
    else:
        subs = [make_subpulse("Q1", basis, pairs["Q"], theta, 0.0, tau),
                make_subpulse("Q2", basis, pairs["Q"], theta, np.pi - phase, tau)]
        target = phase_unitary(PhaseGate(0.0, phase))
    return PulseSequence(schedule(subs), DEFAULT_GAP, ()), target


def _map_point(args):
    molecule, jmax, method, channel, theta, tau, phi, phase = args
    basis = _basis(molecule, jmax)
    row = {"channel": channel, "theta": float(theta), "tau_ns": float(tau)}
    try:
        seq, target = _elementary_pulses(channel, basis, theta, tau, phi, phase)
        r = propagate(seq, basis, SimulationConfig(jmax=jmax, method=method))
        row.update(F=average_gate_fidelity(r.M_hat, target), leakage=r.leakage, error="")
    except Exception as exc:  # recorded per cell
        row.update(F=float("nan"), leakage=float("nan"), error=f"{type(exc).__name__}: {exc}")
    return row


def _run(fn, jobs, workers):
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, jobs))


def run_fidelity_map(spec, molecule=None):
    """Rows ``(channel, theta, tau_ns, F, leakage, error)`` in grid order (theta outer)."""
    molecule = molecule or propanediol()
    g = spec.grid
    phi = float(g.get("phi", 0.0))
    phase = float(g.get("phase", 2 * np.pi / 3))
    jobs = [(molecule, spec.jmax, spec.method, g["channel"], float(th), float(tau), phi, phase)
            for th in g["theta"] for tau in g["tau_ns"]]
    return _run(_map_point, jobs, spec.workers)


# --- error sweeps ------------------------------------------------------------

def simulate_sequence(seq, basis, method="rwa", durations=None, gap_factor=DEFAULT_GAP, checkpoints=()):
    pulses = synthesize(seq, basis, durations, gap_factor)
    return pulses, propagate(pulses, basis, SimulationConfig(jmax=basis.jmax, method=method), checkpoints)


def _sweep_point(args):
    molecule, jmax, method, durations, gap, index, kind, alpha, inputs = args
    basis = _basis(molecule, jmax)
    target = walsh_hadamard()
    ideal = sequence_for(index)
    seq = ErrorModel(kind, alpha).apply(ideal)
    _, r = simulate_sequence(seq, basis, method, durations, gap)
    row = {"sequence": index, "kind": kind, "alpha": float(alpha),
           "F_gate": average_gate_fidelity(r.M_hat, target), "leakage": r.leakage,
           "C_gate": gate_error_coefficient(ideal, kind)}
    for name in inputs:
        psi = input_state(name)
        row[f"F_state_{name}"] = state_fidelity(r.M_hat, psi, target)
        row[f"C_state_{name}"] = state_error_coefficient(ideal, kind, psi)
    return row


def sweep_columns(inputs):
    cols = ["sequence", "kind", "alpha", "F_gate", "leakage", "C_gate"]
    for name in inputs:
        cols += [f"F_state_{name}", f"C_state_{name}"]
    return cols


def run_error_sweep(spec, molecule=None):
    """Rows ordered by sequence then alpha; see :func:`sweep_columns` for keys."""
    molecule = molecule or propanediol()
    kind = spec.kind
    jobs = [(molecule, spec.jmax, spec.method, spec.durations_ns, spec.gap_factor, idx, kind, float(a),
             tuple(spec.inputs))
            for idx in spec.sequences for a in np.atleast_1d(spec.grid["alpha"])]
    return _run(_sweep_point, jobs, spec.workers)


def curvature(alphas, values, degree=4):
    """Second-order Taylor coefficient of ``values(alpha)`` from a polynomial fit."""
    c = np.polynomial.polynomial.polyfit(np.asarray(alphas, float), np.asarray(values, float), degree)
    return float(c[2])


# --- trajectories ------------------------------------------------------------

def _trajectory_point(args):
    molecule, jmax, method, durations, gap, index, kind, alpha, psi, n_ck = args
    basis = _basis(molecule, jmax)
    comp = Encoding().computational(basis)
    ideal = sequence_for(index)
    pulses = synthesize(ideal, basis, durations, gap)
    times = uniform_checkpoints(pulses, n_ck)
    series = []
    for seq in (ErrorModel(kind, alpha).apply(ideal), ideal):
        _, r = simulate_sequence(seq, basis, method, durations, gap, times)
        series.append(BlochSeries.from_states(times, r.states(psi), comp))
    return deviation_trajectory(*series)


def run_trajectory(spec, molecule=None):
    """``{sequence index: BlochSeries of deltas}`` for one error value and one input."""
    molecule = molecule or propanediol()
    alpha = float(np.atleast_1d(spec.grid["alpha"])[0])
    psi = input_state(spec.inputs[0])
    n_ck = int(spec.grid.get("n_checkpoints", 200))
    jobs = [(molecule, spec.jmax, spec.method, spec.durations_ns, spec.gap_factor, idx, spec.kind,
             alpha, psi, n_ck) for idx in spec.sequences]
    return dict(zip(spec.sequences, _run(_trajectory_point, jobs, spec.workers)))
