"""Asymmetric-top rotational structure and space-fixed dipole couplings.

Energies are kept in MHz. Angular frequencies used by the dynamics are in
rad/ns (``hbar = 1``); see :func:`mhz_to_rad_per_ns`.
"""
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .angmom import wigner3j

DATA_DIR = Path(__file__).parent / "data"


def mhz_to_rad_per_ns(value):
    return 2.0 * np.pi * 1e-3 * np.asarray(value)


@dataclass(frozen=True)
class MoleculeSpec:
    """Rigid asymmetric rotor: rotational constants in MHz, dipoles in Debye."""

    A: float
    B: float
    C: float
    mu_a: float
    mu_b: float
    mu_c: float
    name: str = "molecule"

    def __post_init__(self):
        if not (self.A > self.B > self.C > 0):
            raise ValueError(f"need A > B > C > 0, got A={self.A}, B={self.B}, C={self.C}")
        if self.mu_a == 0 and self.mu_b == 0 and self.mu_c == 0:
            raise ValueError("at least one dipole component must be nonzero")

    @property
    def cyclic(self):
        """True when all three transition types are available."""
        return self.mu_a != 0 and self.mu_b != 0 and self.mu_c != 0

    def mf_dipole(self):
        """Molecule-fixed spherical components as ``{q': mu_q'}``."""
        s = 1 / math.sqrt(2)
        return {
            0: complex(self.mu_a),
            1: -s * complex(self.mu_b, self.mu_c),
            -1: s * complex(self.mu_b, -self.mu_c),
        }

    def replace(self, **changes):
        kw = dict(A=self.A, B=self.B, C=self.C, mu_a=self.mu_a, mu_b=self.mu_b,
                  mu_c=self.mu_c, name=self.name)
        kw.update(changes)
        return MoleculeSpec(**kw)

    _KEYS = ("name", "A_MHz", "B_MHz", "C_MHz", "mu_a_D", "mu_b_D", "mu_c_D")

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(cls._KEYS)
        missing = set(cls._KEYS) - set(d) - {"name"}
        if unknown:
            raise ValueError(f"unknown molecule keys: {sorted(unknown)}")
        if missing:
            raise ValueError(f"missing molecule keys: {sorted(missing)}")
        try:
            vals = {k: float(d[k]) for k in cls._KEYS if k != "name"}
        except (TypeError, ValueError) as exc:
            raise ValueError(f"molecule values must be numbers: {exc}") from None
        return cls(A=vals["A_MHz"], B=vals["B_MHz"], C=vals["C_MHz"],
                   mu_a=vals["mu_a_D"], mu_b=vals["mu_b_D"], mu_c=vals["mu_c_D"],
                   name=str(d.get("name", "molecule")))

    def to_dict(self):
        return {"name": self.name, "A_MHz": self.A, "B_MHz": self.B, "C_MHz": self.C,
                "mu_a_D": self.mu_a, "mu_b_D": self.mu_b, "mu_c_D": self.mu_c}

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def propanediol():
    """1,2-propanediol, the molecule used throughout the package examples."""
    return MoleculeSpec.load(DATA_DIR / "propanediol.json")


@dataclass(frozen=True, eq=False)
class RotorState:
    J: int
    Ka: int
    Kc: int
    M: int
    energy: float  # MHz
    coefficients: np.ndarray = field(repr=False)  # over K = -J..J

    @property
    def label(self):
        return f"{self.J}_{self.Ka}{self.Kc}"

    @property
    def omega(self):
        return float(mhz_to_rad_per_ns(self.energy))

    @property
    def key(self):
        return (self.J, self.Ka, self.Kc, self.M)

    def coefficient(self, K):
        return self.coefficients[K + self.J]

    def __repr__(self):
        return f"|{self.label}, M={self.M}>"


def hamiltonian_block(molecule, J):
    """Rigid-rotor Hamiltonian (MHz) in the |J K> basis, K = -J..J, a->z, b->x, c->y."""
    A, B, C = molecule.A, molecule.B, molecule.C
    K = np.arange(-J, J + 1)
    jj = J * (J + 1)
    H = np.diag(A * K**2 + 0.5 * (B + C) * (jj - K**2)).astype(float)
    for i, k in enumerate(K[:-2]):
        # <K+2| (Jx^2 - Jy^2) |K> = (1/2) sqrt[(jj - k(k+1)) (jj - (k+1)(k+2))]
        v = 0.25 * (B - C) * math.sqrt((jj - k * (k + 1)) * (jj - (k + 1) * (k + 2)))
        H[i + 2, i] = H[i, i + 2] = v
    return H


def _fix_phase(vec):
    mags = np.abs(vec)
    idx = int(np.flatnonzero(mags >= mags.max() - 1e-10)[0])
    return vec if vec[idx] > 0 else -vec


def _levels(molecule, J):
    H = hamiltonian_block(molecule, J)
    energies, vecs = np.linalg.eigh(H)
    out = []
    for rank in range(2 * J + 1):
        Ka = (rank + 1) // 2
        Kc = J - rank // 2
        out.append((Ka, Kc, float(energies[rank]), _fix_phase(vecs[:, rank])))
    return out


class BasisSet:
    """Every |J_{KaKc}, M> for J <= jmax, ordered by energy then M."""

    def __init__(self, states, molecule):
        self.states = tuple(states)
        self.molecule = molecule
        self._index = {s.key: i for i, s in enumerate(self.states)}

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def __getitem__(self, i):
        return self.states[i]

    @property
    def jmax(self):
        return max(s.J for s in self.states)

    def index(self, J, Ka, Kc, M):
        try:
            return self._index[(J, Ka, Kc, M)]
        except KeyError:
            raise KeyError(f"state |{J}_{Ka}{Kc}, M={M}> not in basis (jmax={self.jmax})") from None

    def find(self, label, M):
        """Index of a state given a label such as ``"1_01"`` and its M."""
        J, rest = label.split("_")
        return self.index(int(J), int(rest[0]), int(rest[1]), M)

    @cached_property
    def energies(self):
        return np.array([s.energy for s in self.states])

    @cached_property
    def omegas(self):
        return mhz_to_rad_per_ns(self.energies)

    @cached_property
    def dipole(self):
        """Space-fixed dipole matrices ``{q: <i|mu_q|j>}`` in Debye."""
        return dipole_matrices(self, self.molecule)


def solve_spectrum(molecule, jmax=3):
    if jmax < 1:
        raise ValueError("jmax must be >= 1")
    levels = []
    for J in range(jmax + 1):
        for Ka, Kc, E, vec in _levels(molecule, J):
            levels.append((E, J, Ka, Kc, vec))
    levels.sort(key=lambda x: (x[0], x[1]))
    states = [RotorState(J, Ka, Kc, M, E, vec)
              for E, J, Ka, Kc, vec in levels for M in range(-J, J + 1)]
    return BasisSet(states, molecule)


def _body_factor(bra, ket, molecule):
    # sum_{q'} mu_q' sum_{K,K'} C'_K' C_K (-1)^K' 3j(J 1 J'; K q' -K')
    J, Jp = ket.J, bra.J
    total = 0j
    for qp, mu in molecule.mf_dipole().items():
        if mu == 0:
            continue
        for K in range(-J, J + 1):
            Kp = K + qp
            if abs(Kp) > Jp:
                continue
            w = wigner3j(J, 1, Jp, K, qp, -Kp)
            if w:
                sign = -1.0 if Kp % 2 else 1.0
                total += mu * bra.coefficient(Kp) * ket.coefficient(K) * sign * w
    return total


def _lab_factor(bra, ket, q):
    J, Jp, M, Mp = ket.J, bra.J, ket.M, bra.M
    if Mp != M + q:
        return 0.0
    sign = -1.0 if Mp % 2 else 1.0
    return sign * math.sqrt((2 * J + 1) * (2 * Jp + 1)) * wigner3j(J, 1, Jp, M, q, -Mp)


def dipole_element(bra, ket, q, molecule):
    """<bra| mu_q^(sf) |ket> in Debye."""
    if q not in (-1, 0, 1):
        raise ValueError("q must be -1, 0 or +1")
    if abs(bra.J - ket.J) > 1:
        return 0j
    lab = _lab_factor(bra, ket, q)
    if lab == 0.0:
        return 0j
    return complex(lab * _body_factor(bra, ket, molecule))


def dipole_matrices(basis, molecule):
    n = len(basis)
    mats = {q: np.zeros((n, n), dtype=complex) for q in (-1, 0, 1)}
    body = {}
    for i, bra in enumerate(basis):
        for j, ket in enumerate(basis):
            if abs(bra.J - ket.J) > 1:
                continue
            q = bra.M - ket.M
            if abs(q) > 1:
                continue
            lk = (bra.J, bra.Ka, bra.Kc, ket.J, ket.Ka, ket.Kc)
            if lk not in body:
                body[lk] = _body_factor(bra, ket, molecule)
            if body[lk] == 0:
                continue
            mats[q][i, j] = _lab_factor(bra, ket, q) * body[lk]
    return mats


def transition_type(lower, upper):
    """``'a'``, ``'b'`` or ``'c'`` from the parities of (dKa, dKc); ``None`` if neither is odd."""
    dka = (upper.Ka - lower.Ka) % 2
    dkc = (upper.Kc - lower.Kc) % 2
    return {(0, 1): "a", (1, 1): "b", (1, 0): "c"}.get((dka, dkc))


@dataclass(frozen=True)
class Transition:
    lower: int
    upper: int
    q: int
    frequency: float  # MHz
    element: complex  # <upper| mu_q |lower>, Debye
    kind: str


def transition_table(basis, molecule=None, threshold=1e-10):
    """All dipole-allowed pairs of distinct levels with their frequency and type."""
    mats = basis.dipole if molecule is None or molecule is basis.molecule else dipole_matrices(basis, molecule)
    rows = []
    for u, up in enumerate(basis):
        for l, lo in enumerate(basis):
            if up.energy <= lo.energy:
                continue
            q = up.M - lo.M
            if abs(q) > 1:
                continue
            val = mats[q][u, l]
            if abs(val) > threshold:
                rows.append(Transition(l, u, q, up.energy - lo.energy, complex(val),
                                       transition_type(lo, up)))
    rows.sort(key=lambda t: (t.frequency, t.lower, t.upper))
    return rows
