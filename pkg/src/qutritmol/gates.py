"""Elementary qutrit operations, their composition, decomposition and error sensitivity."""
import itertools
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import least_squares

CHANNELS = {"a": (0, 1), "b": (1, 2), "c": (0, 2)}
ORDERINGS = tuple(itertools.permutations("abc"))
# Admissible orderings for the Walsh-Hadamard gate, in the numbering used by the
# error-analysis experiments (sequence 1..4).
WALSH_HADAMARD_ORDERINGS = (("c", "a", "b"), ("b", "c", "a"), ("b", "a", "c"), ("a", "c", "b"))

TWO_PI = 2 * np.pi


def walsh_hadamard():
    w = np.exp(2j * np.pi / 3)
    return np.array([[1, 1, 1], [1, w, w.conjugate()], [1, w.conjugate(), w]]) / np.sqrt(3)


def _wrap(x):
    y = float(np.mod(x, TWO_PI))
    return 0.0 if y < 1e-12 or TWO_PI - y < 1e-12 else y


def parse_ordering(ordering):
    o = tuple(ordering)
    if sorted(o) != ["a", "b", "c"]:
        raise ValueError(f"ordering must be a permutation of a, b, c; got {ordering!r}")
    return o


@dataclass(frozen=True)
class ElementaryRotation:
    channel: str
    theta: float
    phi: float

    def __post_init__(self):
        if self.channel not in CHANNELS:
            raise ValueError(f"unknown channel {self.channel!r}")

    @property
    def pair(self):
        return CHANNELS[self.channel]

    def matrix(self):
        return elementary_unitary(self)


@dataclass(frozen=True)
class PhaseGate:
    eta: float
    chi: float

    def matrix(self):
        return phase_unitary(self)


def elementary_unitary(rot):
    i, j = rot.pair
    c, s = np.cos(rot.theta), np.sin(rot.theta)
    U = np.eye(3, dtype=complex)
    U[i, i] = U[j, j] = c
    U[i, j] = 1j * s * np.exp(1j * rot.phi)
    U[j, i] = 1j * s * np.exp(-1j * rot.phi)
    return U


def phase_unitary(p):
    return np.diag([1.0, np.exp(1j * p.eta), np.exp(1j * p.chi)])


@dataclass(frozen=True)
class GateSequence:
    """``U(eta, chi) U_m1 U_m2 U_m3``; ``rotations`` follow ``ordering``.

    ``global_phase`` records the phase gamma with ``compose(seq) = exp(i gamma) target``
    for targets that are only matched projectively.
    """

    ordering: tuple
    rotations: tuple
    phase: PhaseGate
    global_phase: float = 0.0

    def __post_init__(self):
        o = parse_ordering(self.ordering)
        if tuple(r.channel for r in self.rotations) != o:
            raise ValueError("rotations must follow the ordering")
        object.__setattr__(self, "ordering", o)

    @classmethod
    def from_params(cls, ordering, theta, phi, eta, chi, global_phase=0.0):
        """Build from ``theta``/``phi`` mappings keyed by channel."""
        o = parse_ordering(ordering)
        rots = tuple(ElementaryRotation(m, float(theta[m]), float(phi[m])) for m in o)
        return cls(o, rots, PhaseGate(float(eta), float(chi)), global_phase)

    def rotation(self, channel):
        for r in self.rotations:
            if r.channel == channel:
                return r
        raise KeyError(channel)

    @property
    def theta(self):
        return {r.channel: r.theta for r in self.rotations}

    @property
    def phi(self):
        return {r.channel: r.phi for r in self.rotations}

    def params(self):
        """Parameters in the column order (theta_a, phi_a, theta_b, phi_b, theta_c, phi_c, eta, chi)."""
        out = []
        for m in "abc":
            r = self.rotation(m)
            out += [r.theta, r.phi]
        return np.array(out + [self.phase.eta, self.phase.chi])

    def perturbed(self, kind, magnitude):
        return ErrorModel(kind, magnitude).apply(self)

    def matrix(self):
        return compose(self)


def compose(seq):
    U = phase_unitary(seq.phase)
    for r in seq.rotations:
        U = U @ elementary_unitary(r)
    return U


@dataclass(frozen=True)
class ErrorModel:
    """Relative error on all rotation angles (``amplitude``) or all rotation phases (``phase``)."""

    kind: str
    magnitude: float

    def __post_init__(self):
        if self.kind not in ("amplitude", "phase"):
            raise ValueError("kind must be 'amplitude' or 'phase'")

    def apply(self, seq):
        f = 1.0 + self.magnitude
        if self.kind == "amplitude":
            rots = tuple(replace(r, theta=r.theta * f) for r in seq.rotations)
        else:
            rots = tuple(replace(r, phi=r.phi * f) for r in seq.rotations)
        return replace(seq, rotations=rots)


# --- decomposition -----------------------------------------------------------
#
# Each entry of U(eta, chi) U_m1 U_m2 U_m3 is a sum of monomials
#   coef * prod(cos/sin of thetas) * exp(i * (integer combination of phases)).
# Entries made of a single monomial fix the angles through their moduli and the
# phases through their arguments; the remaining entries are then checked.

_PHASES = ("a", "b", "c", "eta", "chi")


def _sym_rotation(ch):
    i, j = CHANNELS[ch]
    M = [[[] for _ in range(3)] for _ in range(3)]
    k = 3 - i - j
    M[k][k] = [(1 + 0j, (), {})]
    M[i][i] = [(1 + 0j, (("c", ch),), {})]
    M[j][j] = [(1 + 0j, (("c", ch),), {})]
    M[i][j] = [(1j, (("s", ch),), {ch: 1})]
    M[j][i] = [(1j, (("s", ch),), {ch: -1})]
    return M


def _sym_phase():
    M = [[[] for _ in range(3)] for _ in range(3)]
    M[0][0] = [(1 + 0j, (), {})]
    M[1][1] = [(1 + 0j, (), {"eta": 1})]
    M[2][2] = [(1 + 0j, (), {"chi": 1})]
    return M


def _sym_mul(X, Y):
    Z = [[[] for _ in range(3)] for _ in range(3)]
    for i in range(3):
        for k in range(3):
            acc = {}
            for j in range(3):
                for c1, t1, p1 in X[i][j]:
                    for c2, t2, p2 in Y[j][k]:
                        trig = tuple(sorted(t1 + t2))
                        ph = dict(p1)
                        for key, v in p2.items():
                            ph[key] = ph.get(key, 0) + v
                        ph = {key: v for key, v in ph.items() if v}
                        sig = (trig, tuple(sorted(ph.items())))
                        acc[sig] = acc.get(sig, 0) + c1 * c2
            Z[i][k] = [(c, sig[0], dict(sig[1])) for sig, c in acc.items() if c != 0]
    return Z


def symbolic_product(ordering):
    """Monomial expansion of every entry of the decomposition for ``ordering``."""
    M = _sym_phase()
    for ch in parse_ordering(ordering):
        M = _sym_mul(M, _sym_rotation(ch))
    return M


def _solve_angles(monos, absT):
    theta = {}
    eqs = [(trig, absT[i, k]) for (i, k), (_, trig, _) in monos.items()]
    progress = True
    while progress and len(theta) < 3:
        progress = False
        for trig, val in eqs:
            unknown = [f for f in trig if f[1] not in theta]
            if len(unknown) != 1 or sum(1 for f in trig if f == unknown[0]) != 1:
                continue
            known = 1.0
            for kind, ch in trig:
                if ch in theta:
                    known *= np.cos(theta[ch]) if kind == "c" else np.sin(theta[ch])
            if known < 1e-12:
                continue
            x = float(np.clip(val / known, 0.0, 1.0))
            kind, ch = unknown[0]
            theta[ch] = np.arccos(x) if kind == "c" else np.arcsin(x)
            progress = True
    return theta


def _solve_phases(monos, T, theta, fixed):
    phases = dict(fixed)
    eqs = []
    for (i, k), (coef, trig, ph) in monos.items():
        mag = 1.0
        for kind, ch in trig:
            mag *= np.cos(theta[ch]) if kind == "c" else np.sin(theta[ch])
        if mag < 1e-12 or abs(T[i, k]) < 1e-12:
            continue
        eqs.append((ph, np.angle(T[i, k]) - np.angle(coef)))
    progress = True
    while progress:
        progress = False
        for ph, rhs in eqs:
            unknown = [key for key in ph if key not in phases]
            if len(unknown) != 1:
                continue
            key = unknown[0]
            rest = sum(v * phases[k2] for k2, v in ph.items() if k2 != key)
            phases[key] = _wrap((rhs - rest) / ph[key])
            progress = True
    return phases


@dataclass(frozen=True)
class Inadmissible:
    """No real-parameter solution for this ordering.

    ``product`` is the matrix obtained from the closed-form parameters; ``offending``
    lists ``(row, col, value, target_value)`` for every element that misses the target.
    """

    ordering: tuple
    product: np.ndarray = field(repr=False)
    residual: float
    offending: tuple

    def __bool__(self):
        return False


def check_unitary(U, tol=1e-10, name="target"):
    U = np.asarray(U, dtype=complex)
    if U.shape != (3, 3):
        raise ValueError(f"{name} must be 3x3, got shape {U.shape}")
    err = np.abs(U.conj().T @ U - np.eye(3)).max()
    if err > tol:
        raise ValueError(f"{name} is not unitary (|U^dag U - I| = {err:.2e})")
    return U


def _unpack(x):
    return dict(zip("abc", x[0:6:2])), dict(zip("abc", x[1:6:2])), x[6], x[7]


def _residual_fn(T, ordering, free_phase):
    def resid(x):
        theta, phi, eta, chi = _unpack(x)
        gamma = x[8] if free_phase else 0.0
        D = compose(GateSequence.from_params(ordering, theta, phi, eta, chi)) - np.exp(1j * gamma) * T
        return np.concatenate([D.real.ravel(), D.imag.ravel()])
    return resid


def _least_squares(T, ordering, starts, free_phase):
    resid = _residual_fn(T, ordering, free_phase)
    best_x, best_err = None, np.inf
    for x0 in starts:
        x0 = x0 if free_phase else x0[:8]
        sol = least_squares(resid, x0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=3000)
        err = np.abs(resid(sol.x)).max()
        if err < best_err:
            best_x, best_err = sol.x, err
        if best_err < 1e-13:
            break
    return best_x, best_err


def _normalize(ordering, x, gamma=0.0):
    # R(2 pi - t, p + pi) == R(t, p), so angles land in [0, pi]
    theta, phi, eta, chi = _unpack(x)
    th, ph = {}, {}
    for m in "abc":
        t, p = float(np.mod(theta[m], TWO_PI)), float(phi[m])
        if t > np.pi:
            t, p = TWO_PI - t, p + np.pi
        if t < 1e-13:
            t, p = 0.0, 0.0
        th[m], ph[m] = t, _wrap(p)
    return GateSequence.from_params(ordering, th, ph, _wrap(eta), _wrap(chi), _wrap(gamma))


def _closed_form(T, ordering):
    sym = symbolic_product(ordering)
    monos = {(i, k): sym[i][k][0] for i in range(3) for k in range(3) if len(sym[i][k]) == 1}
    theta = _solve_angles(monos, np.abs(T))
    if len(theta) < 3:
        return None
    phases = _solve_phases(monos, T, theta, {})
    for m in "abc":
        if m not in phases and np.sin(theta[m]) < 1e-12:
            phases[m] = 0.0  # identity rotation: phase is irrelevant
    missing = [k for k in _PHASES if k not in phases]
    if missing:
        phases.update(_fill_phases(T, ordering, theta, phases, missing))

    return GateSequence.from_params(
        ordering, theta, {m: phases[m] for m in "abc"}, phases["eta"], phases["chi"])


def _fill_phases(T, ordering, theta, known, missing):
    # Phases left free by the monomial entries are fixed by the remaining ones.
    def build(v):
        ph = dict(known, **dict(zip(missing, v)))
        return GateSequence.from_params(ordering, theta, {m: ph[m] for m in "abc"}, ph["eta"], ph["chi"])

    def resid(v):
        D = compose(build(v)) - T
        return np.concatenate([D.real.ravel(), D.imag.ravel()])

    best, best_err = None, np.inf
    grid = np.linspace(0, TWO_PI, 6, endpoint=False)
    for start in itertools.product(grid, repeat=len(missing)):
        sol = least_squares(resid, np.array(start), xtol=1e-15, ftol=1e-15, gtol=1e-15)
        err = np.abs(resid(sol.x)).max()
        if err < best_err - 1e-12:
            best, best_err = sol.x, err
    return {k: _wrap(v) for k, v in zip(missing, best)}


def _random_starts(n, seed=1234):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        x = rng.uniform(0, TWO_PI, 9)
        x[0:6:2] = rng.uniform(0, np.pi / 2, 3)
        out.append(x)
    return out


def decompose(target, ordering, tol=1e-8, projective=False):
    """Solve ``U(eta, chi) U_m1 U_m2 U_m3 = target`` for the given ordering.

    Angles come from the moduli of the single-monomial entries of the product and
    phases from their arguments; all nine entries are then verified. If the
    closed form does not apply, a damped least-squares solve is attempted.

    With ``projective=False`` (default) the product must equal ``target`` exactly.
    With ``projective=True`` it only has to match up to a global phase, stored in
    ``GateSequence.global_phase``; every ordering is then generically admissible.

    Returns a :class:`GateSequence` with angles in [0, pi/2] (closed form) or
    [0, pi] (numeric) and phases in [0, 2 pi), or an :class:`Inadmissible` report.
    """
    T = check_unitary(target)
    ordering = parse_ordering(ordering)
    closed = _closed_form(T, ordering)

    starts = []
    if closed is not None:
        resid = _residual_fn(T, ordering, False)
        x0 = closed.params()
        if np.abs(resid(x0)).max() <= 1e-6:
            sol = least_squares(resid, x0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200)
            x = sol.x if np.abs(resid(sol.x)).max() <= np.abs(resid(x0)).max() else x0
            seq = _normalize(ordering, x)
            if np.abs(compose(seq) - T).max() <= tol:
                return seq
        starts.append(np.r_[x0, 0.0])
    if projective or closed is None:
        x, err = _least_squares(T, ordering, starts + _random_starts(16), projective)
        if err <= tol:
            seq = _normalize(ordering, x[:8], x[8] if projective else 0.0)
            if np.abs(compose(seq) - np.exp(1j * seq.global_phase) * T).max() <= tol:
                return seq
    if closed is not None:
        P = compose(closed)
    else:
        P = compose(_normalize(ordering, x[:8]))
        if projective:
            P = P * np.exp(-1j * x[8])
    D = np.abs(P - T)
    bad = tuple((i, k, complex(P[i, k]), complex(T[i, k]))
                for i in range(3) for k in range(3) if D[i, k] > tol)
    return Inadmissible(ordering, P, float(D.max()), bad)


def matrix_to_text(U, precision=17):
    """Nine complex entries, row-major, one per line as ``re im`` in %.{precision}g."""
    U = np.asarray(U, dtype=complex).reshape(-1)
    return "".join(f"{z.real:.{precision}g} {z.imag:.{precision}g}\n" for z in U)


def matrix_from_text(text):
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if len(rows) != 9 or any(len(r) != 2 for r in rows):
        raise ValueError("gate text must hold 9 lines of 're im'")
    return np.array([float(r[0]) + 1j * float(r[1]) for r in rows]).reshape(3, 3)


# --- error sensitivity -------------------------------------------------------

def _d_theta(rot):
    i, j = rot.pair
    c, s = np.cos(rot.theta), np.sin(rot.theta)
    D = np.zeros((3, 3), dtype=complex)
    D[i, i] = D[j, j] = -s
    D[i, j] = 1j * c * np.exp(1j * rot.phi)
    D[j, i] = 1j * c * np.exp(-1j * rot.phi)
    return D


def _d_phi(rot):
    i, j = rot.pair
    s = np.sin(rot.theta)
    D = np.zeros((3, 3), dtype=complex)
    D[i, j] = -s * np.exp(1j * rot.phi)
    D[j, i] = s * np.exp(-1j * rot.phi)
    return D


def generator_derivative(seq, kind):
    """dU_gen/d(alpha) at alpha = 0 for the relative error model ``kind``."""
    if kind not in ("amplitude", "phase"):
        raise ValueError("kind must be 'amplitude' or 'phase'")
    mats = [elementary_unitary(r) for r in seq.rotations]
    P = phase_unitary(seq.phase)
    total = np.zeros((3, 3), dtype=complex)
    for n, r in enumerate(seq.rotations):
        if kind == "amplitude":
            d = r.theta * _d_theta(r)
        else:
            d = r.phi * _d_phi(r)
        term = P.copy()
        for m, M in enumerate(mats):
            term = term @ (d if m == n else M)
        total += term
    return total


def error_generator(seq, kind):
    """Hermitian error generator ``i U_tar^dag dU_gen/d(alpha)``."""
    return 1j * compose(seq).conj().T @ generator_derivative(seq, kind)


def gate_error_coefficient(seq, kind, d=3):
    H = error_generator(seq, kind)
    return float(np.real(d * np.trace(H @ H) - np.trace(H) ** 2))


def state_error_coefficient(seq, kind, psi_in):
    psi = np.asarray(psi_in, dtype=complex).reshape(3)
    if abs(np.linalg.norm(psi) - 1) > 1e-10:
        raise ValueError("input state must be normalized")
    H = error_generator(seq, kind)
    Hp = H @ psi
    mean = np.real(np.vdot(psi, Hp))
    return float(max(np.real(np.vdot(Hp, Hp)) - mean**2, 0.0))
