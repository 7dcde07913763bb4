"""Driven rotational dynamics in the interaction picture.

``exact`` keeps co- and counter-rotating terms. Each step applies the exponential of
a second-order Magnus generator in which every entry's oscillation
``exp(i nu t)`` is integrated in closed form; only the slow Gaussian envelope is
discretized (linear within a step for the first-order term, midpoint value for the
commutator term). Step sizes are therefore set by envelopes and Rabi rates, not by
carrier periods. ``rwa`` runs the same integrator on co-rotating entries only.
``magnus1`` replaces every subpulse by its ideal two-level rotation.
"""
from dataclasses import dataclass, field

import numpy as np

from .pulses import Encoding, PulseSequence, field_at, spectral_area

METHODS = ("exact", "rwa", "magnus1")


class ConfigurationError(ValueError):
    pass


class NumericalStabilityError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimulationConfig:
    """``max_phase``: largest Rabi phase (peak coupling x dt) per step.
    ``steps_per_tau``: envelope sampling density. ``dt`` overrides both when set."""

    jmax: int = 3
    method: str = "exact"
    max_phase: float = 0.05
    steps_per_tau: float = 6.0
    dt: float | None = None
    unitarity_tol: float = 1e-6

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.jmax < 1:
            raise ConfigurationError("jmax must be >= 1")
        if not (self.max_phase > 0 and self.steps_per_tau > 0):
            raise ConfigurationError("max_phase and steps_per_tau must be positive")
        if self.dt is not None and not self.dt > 0:
            raise ConfigurationError("dt must be positive")


@dataclass
class PropagationResult:
    U_full: np.ndarray
    M_hat: np.ndarray
    computational: tuple
    times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    columns: np.ndarray | None = None  # U(t)[:, computational] at each checkpoint time
    n_steps: int = 0

    @property
    def leakage(self):
        return float(1 - np.real(np.trace(self.M_hat.conj().T @ self.M_hat)) / 3)

    def states(self, psi_in):
        """Full-space states U(t_k) P_q psi_in at the checkpoint times."""
        if self.columns is None:
            raise ValueError("no checkpoints recorded")
        return self.columns @ np.asarray(psi_in, dtype=complex)


def project_computational(U_full, indices):
    idx = np.asarray(indices)
    return np.asarray(U_full)[np.ix_(idx, idx)]


def interaction_hamiltonian(t, basis, seq):
    """``H_I[i,j] = -sum_q (-1)^q mu_q[i,j] E_{-q}(t) exp(i w_ij t)`` (rad/ns)."""
    E = field_at(seq, t)
    w = basis.omegas
    phase = np.exp(1j * (w[:, None] - w[None, :]) * t)
    H = np.zeros((len(basis), len(basis)), dtype=complex)
    for q in (-1, 0, 1):
        e = E[1 - q]
        if e != 0:
            H -= (-1) ** q * basis.dipole[q] * e
    return H * phase


# --- entry tables ----------------------------------------------------------

@dataclass
class _Entries:
    row: np.ndarray
    col: np.ndarray
    amp: np.ndarray   # complex, per unit envelope
    nu: np.ndarray    # rad/ns
    pulse: np.ndarray


def _pulse_entries(k, sub, basis, rwa, tol=1e-12):
    w = basis.omegas
    terms = []  # (q of the dipole, coefficient of exp(i r (w t + varphi)), r)
    if sub.q == 0:
        terms = [(0, 0.5, 1), (0, 0.5, -1)]
    else:
        terms = [(sub.q, 0.5 * (-1) ** sub.q, -1), (-sub.q, 0.5, 1)]
    rows, cols, amps, nus = [], [], [], []
    for q, c, r in terms:
        mu = basis.dipole[q]
        i, j = np.nonzero(np.abs(mu) > tol)
        wij = w[i] - w[j]
        nu = wij + r * sub.carrier
        if rwa:
            keep = r * wij <= 0
            i, j, wij, nu = i[keep], j[keep], wij[keep], nu[keep]
        a = -((-1) ** q) * mu[i, j] * c * sub.amplitude * np.exp(1j * r * sub.carrier_phase)
        rows.append(i); cols.append(j); amps.append(a); nus.append(nu)
    n = sum(len(x) for x in rows)
    return _Entries(np.concatenate(rows), np.concatenate(cols), np.concatenate(amps),
                    np.concatenate(nus), np.full(n, k))


def _merge(parts):
    return _Entries(*(np.concatenate([getattr(p, f) for p in parts])
                      for f in ("row", "col", "amp", "nu", "pulse")))


@dataclass
class _Block:
    """Entries for a fixed set of active pulses plus the index pairs feeding the commutator."""
    ent: _Entries
    p1: np.ndarray
    p2: np.ndarray
    out: np.ndarray  # flattened (row of p1, col of p2)
    flat: np.ndarray
    peak_rate: float


def _build_block(parts, active, n):
    ent = _merge([parts[k] for k in active])
    order = np.argsort(ent.row, kind="stable")
    starts = np.searchsorted(ent.row[order], np.arange(n + 1))
    p1, p2 = [], []
    for e1 in range(len(ent.row)):
        j = ent.col[e1]
        cand = order[starts[j]:starts[j + 1]]
        # the commutator term is anti-Hermitian: keep only outputs on or above the diagonal
        cand = cand[ent.col[cand] >= ent.row[e1]]
        p1.append(np.full(len(cand), e1)); p2.append(cand)
    p1 = np.concatenate(p1) if p1 else np.zeros(0, int)
    p2 = np.concatenate(p2) if p2 else np.zeros(0, int)
    out = ent.row[p1] * n + ent.col[p2]
    peak = max((float(np.abs(parts[k].amp).max(initial=0.0)) for k in active), default=0.0)
    return _Block(ent, p1, p2, out, ent.row * n + ent.col, peak)


# --- divided differences of exp on the imaginary axis -----------------------

def _dd1(a, b):
    """e[ia, ib]."""
    return np.exp(0.5j * (a + b)) * np.sinc((b - a) / (2 * np.pi))


def _dd2(a, b, c, small=1e-2):
    """e[ia, ib, ic] for real arrays a, b, c."""
    pts = np.sort(np.stack([a, b, c]), axis=0)
    lo, mid, hi = pts
    spread = hi - lo
    out = np.empty(lo.shape, dtype=complex)
    big = spread >= small
    if np.any(big):
        l, m, h = lo[big], mid[big], hi[big]
        out[big] = (_dd1(m, h) - _dd1(l, m)) / (1j * (h - l))
    sm = ~big
    if np.any(sm):
        cen = (lo[sm] + mid[sm] + hi[sm]) / 3
        d = 1j * np.stack([lo[sm] - cen, mid[sm] - cen, hi[sm] - cen])
        p = [None] + [np.sum(d**k, axis=0) for k in range(1, 6)]
        hk = [np.ones_like(cen, dtype=complex)]
        for k in range(1, 6):
            hk.append(sum(p[i] * hk[k - i] for i in range(1, k + 1)) / k)
        fact = [2, 6, 24, 120, 720, 5040]
        out[sm] = np.exp(1j * cen) * sum(hk[k] / fact[k] for k in range(6))
    return out


def _phi2(y):
    """int_0^1 (1 - v) exp(i y v) dv."""
    out = np.empty(y.shape, dtype=complex)
    s = np.abs(y) < 0.1
    z = 1j * y[s]
    term = np.full(z.shape, 0.5, dtype=complex)
    acc = term.copy()
    for k in range(3, 12):
        term = term * z / k
        acc += term
    out[s] = acc
    yb = y[~s]
    out[~s] = (_phi1(yb) - 1) / (1j * yb)
    return out


def _phi1(y):
    return _dd1(np.zeros_like(y), y)


# --- stepping ---------------------------------------------------------------

class _Kernel:
    """Step-size dependent weights for one block; only envelopes and exp(i nu t0) vary per step."""

    def __init__(self, block, h):
        ent = block.ent
        y = ent.nu * h
        p2 = _phi2(y)
        self.w0 = ent.amp * h * p2
        self.w1 = ent.amp * h * (_phi1(y) - p2)
        e1, e2 = block.p1, block.p2
        y1, y2 = y[e1], y[e2]
        zero = np.zeros_like(y1)
        D = _dd2(zero, y1, y1 + y2) - _dd2(zero, y2, y1 + y2)
        self.c2 = -0.5j * ent.amp[e1] * ent.amp[e2] * h * h * D
        self.block = block
        self.h = h

    def generator(self, env, t0, n):
        b = self.block
        ent = b.ent
        k = ent.pulse
        ga, gm, gb = env(t0), env(t0 + 0.5 * self.h), env(t0 + self.h)
        rot = np.exp(1j * ent.nu * t0)
        o1 = rot * (ga[k] * self.w0 + gb[k] * self.w1)
        K = _accumulate(b.flat, o1, n * n).reshape(n, n)
        K = 0.5 * (K + K.conj().T)
        if len(b.p1):
            g = gm[k]
            c = self.c2 * (rot * g)[b.p1] * (rot * g)[b.p2]
            C = _accumulate(b.out, c, n * n).reshape(n, n)
            d = np.diag(C).copy()
            C = C + C.conj().T
            C[np.diag_indices(n)] = d.real  # diagonal of the Hermitian part
            K += C
        return K


def _accumulate(idx, vals, size):
    return (np.bincount(idx, weights=vals.real, minlength=size)
            + 1j * np.bincount(idx, weights=vals.imag, minlength=size))


def _expi(K):
    w, V = np.linalg.eigh(K)
    return (V * np.exp(-1j * w)) @ V.conj().T


def _time_grid(seq, config, checkpoints):
    edges = set()
    for s in seq.subpulses:
        edges.update(s.window)
    edges.add(0.0)
    edges.update(float(t) for t in checkpoints)
    return np.array(sorted(edges))


def propagate(seq, basis, config=None, checkpoints=(), encoding=None):
    """Propagator over ``[0, max(total_duration, checkpoints)]`` in the interaction picture."""
    if not isinstance(seq, PulseSequence):
        raise TypeError("seq must be a PulseSequence")
    config = config or SimulationConfig()
    enc = encoding or Encoding()
    comp = enc.computational(basis)
    n = len(basis)
    checkpoints = np.asarray(sorted(float(t) for t in checkpoints))
    if config.method == "magnus1":
        return _propagate_magnus1(seq, basis, comp, checkpoints)

    subs = seq.subpulses
    rwa = config.method == "rwa"
    parts = [_pulse_entries(k, s, basis, rwa) for k, s in enumerate(subs)]
    blocks = {}

    def env(t):
        return np.array([s.envelope(t) for s in subs])

    grid = _time_grid(seq, config, checkpoints)
    U = np.eye(n, dtype=complex)
    cols, ck = [], 0
    nsteps = 0
    for ta, tb in zip(grid[:-1], grid[1:]):
        while ck < len(checkpoints) and checkpoints[ck] <= ta + 1e-12:
            cols.append(U[:, comp].copy()); ck += 1
        mid = 0.5 * (ta + tb)
        active = tuple(k for k, s in enumerate(subs) if s.window[0] <= mid <= s.window[1])
        if not active:
            continue
        if active not in blocks:
            blocks[active] = _build_block(parts, active, n)
        block = blocks[active]
        if config.dt is not None:
            dt = config.dt
        else:
            dt = min(min(subs[k].tau for k in active) / config.steps_per_tau,
                     config.max_phase / max(block.peak_rate, 1e-300))
        m = max(int(np.ceil((tb - ta) / dt - 1e-9)), 1)
        h = (tb - ta) / m
        kern = _Kernel(block, h)
        for s in range(m):
            U = _expi(kern.generator(env, ta + s * h, n)) @ U
        nsteps += m
    while ck < len(checkpoints):
        cols.append(U[:, comp].copy()); ck += 1
    drift = np.abs(U.conj().T @ U - np.eye(n)).max()
    if drift > config.unitarity_tol:
        raise NumericalStabilityError(f"propagator lost unitarity: {drift:.2e}")
    return PropagationResult(U, project_computational(U, comp), comp, checkpoints,
                             np.array(cols) if len(checkpoints) else None, nsteps)


def magnus1_propagator(sub, basis):
    """Ideal two-level rotation for one subpulse, identity elsewhere in the full space."""
    area = spectral_area(sub, sub.carrier, sub.mu)
    th, ph = abs(area), np.angle(area)
    lo, up = sub.transition
    U = np.eye(len(basis), dtype=complex)
    U[lo, lo] = U[up, up] = np.cos(th)
    U[lo, up] = 1j * np.sin(th) * np.exp(1j * ph)
    U[up, lo] = 1j * np.sin(th) * np.exp(-1j * ph)
    return U


def _propagate_magnus1(seq, basis, comp, checkpoints):
    n = len(basis)
    ops = sorted(((s.delay, magnus1_propagator(s, basis)) for s in seq.subpulses), key=lambda x: x[0])
    U = np.eye(n, dtype=complex)
    cols, k = [], 0
    for T, R in ops:
        while k < len(checkpoints) and checkpoints[k] < T:
            cols.append(U[:, comp].copy()); k += 1
        U = R @ U
    while k < len(checkpoints):
        cols.append(U[:, comp].copy()); k += 1
    return PropagationResult(U, project_computational(U, comp), comp, checkpoints,
                             np.array(cols) if len(checkpoints) else None, len(ops))


def uniform_checkpoints(seq, n=200):
    return np.linspace(0.0, seq.total_duration, n)
