"""Single-qutrit gates in rotational states of asymmetric-top molecules."""
__version__ = "0.1.0"

from .gates import (ElementaryRotation, ErrorModel, GateSequence, Inadmissible, PhaseGate,
                    compose, decompose, walsh_hadamard)
from .rotor import BasisSet, MoleculeSpec, propanediol, solve_spectrum
from .pulses import PulseSequence, SubpulseSpec, synthesize
from .dynamics import PropagationResult, SimulationConfig, propagate
from .metrics import average_gate_fidelity, bloch_vector, state_fidelity
from .estimator import QutritGateDesigner

__all__ = [
    "BasisSet", "ElementaryRotation", "ErrorModel", "GateSequence", "Inadmissible",
    "MoleculeSpec", "PhaseGate", "PropagationResult", "PulseSequence", "QutritGateDesigner",
    "SimulationConfig", "SubpulseSpec", "average_gate_fidelity", "bloch_vector", "compose",
    "decompose", "propagate", "propanediol", "solve_spectrum", "state_fidelity", "synthesize",
    "walsh_hadamard",
]
