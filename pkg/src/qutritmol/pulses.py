"""Gaussian microwave pulse trains realizing a :class:`~qutritmol.gates.GateSequence`.

Field convention: a subpulse driving dipole component ``mu_q`` on the transition
``lower -> upper`` (``M_upper = M_lower + q``) is

    E(t) = eps * g(t) * Re[exp(-i(w t + varphi)) e_hat],    g(t) = exp(-(t - T)^2 / (2 tau^2)),

with spherical components ``E_{-q} = (eps g / 2) (-1)^q exp(-i(w t + varphi))`` and,
for ``q != 0``, ``E_{q} = (eps g / 2) exp(+i(w t + varphi))`` (``E_0`` is ``eps g cos``).
Fields are in Rabi-rate units: ``mu[D] * E`` is an angular frequency in rad/ns.
"""
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .gates import GateSequence

LABELS = ("a", "b", "c", "P1", "P2", "Q1", "Q2")
TRUNCATION = 8.0
DEFAULT_GAP = 4.0
# Closest allowed spacing: envelope product at the crossing point exp(-gap^2) <= exp(-4).
MIN_GAP = 2.0

# Durations (ns) that keep every elementary gate above 0.9999 fidelity for propanediol.
DEFAULT_DURATIONS = {"a": 6.3, "b": 7.0, "c": 163.8, "P": 446.1, "Q": 94.3}


class SynthesisError(ValueError):
    pass


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class Encoding:
    """Rotational levels carrying |0>, |1>, |2> and the auxiliary state S."""

    zero: tuple = ("0_00", 0)
    one: tuple = ("1_01", 1)
    two: tuple = ("1_10", 0)
    aux: tuple = ("1_11", 1)

    def indices(self, basis):
        return tuple(basis.find(*lvl) for lvl in (self.zero, self.one, self.two, self.aux))

    def computational(self, basis):
        return self.indices(basis)[:3]

    def pairs(self, basis):
        """Basis-index pair for each subpulse family, in rotation order (i, j)."""
        z, o, t, s = self.indices(basis)
        return {"a": (z, o), "b": (o, t), "c": (z, t), "P": (o, s), "Q": (s, t)}


@dataclass(frozen=True)
class SubpulseSpec:
    """One Gaussian subpulse.

    ``pair`` is the logical rotation pair (i, j): the pulse implements
    ``<i|U|j> = i sin(theta) exp(i phi)``. ``transition`` is the same pair ordered
    by energy (lower, upper). ``q`` is the driven dipole component and
    ``polarization`` its indicator over (q=-1, 0, +1).
    """

    label: str
    pair: tuple
    transition: tuple
    theta: float
    phi: float
    tau: float
    delay: float
    carrier: float
    carrier_phase: float
    q: int
    mu: complex
    amplitude: float

    @property
    def polarization(self):
        e = [0.0, 0.0, 0.0]
        e[self.q + 1] = 1.0
        return tuple(e)

    @property
    def window(self):
        return self.delay - TRUNCATION * self.tau, self.delay + TRUNCATION * self.tau

    def envelope(self, t):
        t = np.asarray(t, dtype=float)
        x = (t - self.delay) / self.tau
        return np.where(np.abs(x) <= TRUNCATION, np.exp(-0.5 * x * x), 0.0)

    def shifted(self, dt):
        return _replace(self, delay=self.delay + dt)

    def to_dict(self):
        d = asdict(self)
        d["pair"] = list(self.pair)
        d["transition"] = list(self.transition)
        d["mu"] = [self.mu.real, self.mu.imag]
        d["polarization"] = list(self.polarization)
        return d


def _replace(sub, **kw):
    d = {k: getattr(sub, k) for k in SubpulseSpec.__dataclass_fields__}
    d.update(kw)
    return SubpulseSpec(**d)


@dataclass(frozen=True)
class PulseSequence:
    subpulses: tuple
    gap_factor: float = DEFAULT_GAP
    ordering: tuple = field(default=())

    @property
    def total_duration(self):
        if not self.subpulses:
            return 0.0
        return max(s.window[1] for s in self.subpulses)

    def __len__(self):
        return len(self.subpulses)

    def __getitem__(self, k):
        if isinstance(k, str):
            for s in self.subpulses:
                if s.label == k:
                    return s
            raise KeyError(k)
        return self.subpulses[k]

    def labels(self):
        return [s.label for s in self.subpulses]

    def to_json(self):
        return json.dumps({
            "gap_factor": self.gap_factor,
            "ordering": list(self.ordering),
            "total_duration_ns": self.total_duration,
            "subpulses": [export_row(s) for s in self.subpulses],
        }, indent=2)


def export_row(sub):
    return {
        "label": sub.label,
        "transition": list(sub.transition),
        "theta": sub.theta,
        "phi": sub.phi,
        "tau_ns": sub.tau,
        "delay_ns": sub.delay,
        "carrier_MHz": sub.carrier / (2e-3 * np.pi),
        "carrier_phase": sub.carrier_phase,
        "polarization": list(sub.polarization),
        "amplitude": sub.amplitude,
    }


def make_subpulse(label, basis, pair, theta, phi, tau, delay=0.0):
    """Gaussian subpulse rotating ``pair = (i, j)`` by ``(theta, phi)``."""
    if not tau > 0:
        raise SynthesisError(f"duration for {label} must be positive, got {tau}")
    i, j = pair
    E = basis.energies
    if E[i] <= E[j]:
        lower, upper, phase = i, j, phi
    else:  # <i|U|j> = i s e^{i phi} is <lower|U|upper> = i s e^{-i(-phi)}
        lower, upper, phase = j, i, -phi
    q = basis[upper].M - basis[lower].M
    elem = basis.dipole[q][upper, lower] if abs(q) <= 1 else 0.0
    if abs(elem) < 1e-10:
        raise SynthesisError(
            f"pulse {label}: transition {basis[lower]!r} -> {basis[upper]!r} has no dipole coupling")
    mu = complex(np.conj(elem))
    carrier = float(basis.omegas[upper] - basis.omegas[lower])
    amp = np.sqrt(2 / np.pi) * theta / (tau * abs(mu))
    return SubpulseSpec(label, (i, j), (lower, upper), float(theta), float(phi), float(tau),
                        float(delay), carrier, float(phase - np.angle(mu)), int(q), mu, float(amp))


def schedule(subpulses, gap_factor=DEFAULT_GAP, min_gap=MIN_GAP):
    """Place centers sequentially, ``T_{k+1} = T_k + gap_factor (tau_k + tau_{k+1})``,
    then shift the train so that the earliest truncation window opens at t = 0."""
    if gap_factor < min_gap:
        raise ScheduleError(
            f"gap factor {gap_factor} below {min_gap}: adjacent envelopes would overlap "
            f"(crossing-point product above exp(-{min_gap ** 2:g}))")
    centers, T, prev = [], 0.0, None
    for s in subpulses:
        T = T if prev is None else T + gap_factor * (prev.tau + s.tau)
        centers.append(T)
        prev = s
    if not centers:
        return ()
    shift = -min(T - TRUNCATION * s.tau for T, s in zip(centers, subpulses))
    return tuple(_replace(s, delay=T + shift) for T, s in zip(centers, subpulses))


def durations_by_label(durations):
    d = dict(DEFAULT_DURATIONS if durations is None else durations)
    for fam in ("P", "Q"):
        if fam in d:
            d.setdefault(fam + "1", d[fam])
            d.setdefault(fam + "2", d[fam])
    missing = [lab for lab in LABELS if lab not in d]
    if missing:
        raise SynthesisError(f"missing durations for {missing}")
    return d


def synthesize(seq, basis, durations=None, gap_factor=DEFAULT_GAP, encoding=None,
               phase_area=np.pi / 2):
    """Seven-pulse train for ``seq``: m3, m2, m1, then P1, P2, Q1, Q2.

    ``durations`` maps labels (``a``, ``b``, ``c``, ``P``/``P1``/``P2``, ``Q``...) to tau in ns.
    """
    if not isinstance(seq, GateSequence):
        raise TypeError("seq must be a GateSequence")
    enc = encoding or Encoding()
    pairs = enc.pairs(basis)
    tau = durations_by_label(durations)
    subs = [make_subpulse(r.channel, basis, pairs[r.channel], r.theta, r.phi, tau[r.channel])
            for r in reversed(seq.rotations)]
    eta, chi = seq.phase.eta, seq.phase.chi
    subs += [
        make_subpulse("P1", basis, pairs["P"], phase_area, 0.0, tau["P1"]),
        make_subpulse("P2", basis, pairs["P"], phase_area, eta - np.pi, tau["P2"]),
        make_subpulse("Q1", basis, pairs["Q"], phase_area, 0.0, tau["Q1"]),
        make_subpulse("Q2", basis, pairs["Q"], phase_area, np.pi - chi, tau["Q2"]),
    ]
    return PulseSequence(schedule(subs, gap_factor), gap_factor, seq.ordering)


def single_pulse(label, basis, theta, phi, tau, encoding=None):
    """One isolated subpulse (family ``a``/``b``/``c``/``P``/``Q``), window opening at t = 0."""
    enc = encoding or Encoding()
    fam = label[0]
    sub = make_subpulse(label, basis, enc.pairs(basis)[fam], theta, phi, tau)
    return PulseSequence(schedule([sub]), DEFAULT_GAP, ())


def field_components(sub, t):
    """Spherical components (E_-1, E_0, E_+1) of one subpulse at times ``t``."""
    t = np.asarray(t, dtype=float)
    g = sub.amplitude * sub.envelope(t)
    ph = sub.carrier * t + sub.carrier_phase
    out = np.zeros((3,) + t.shape, dtype=complex)
    q = sub.q
    if q == 0:
        out[1] = g * np.cos(ph)
    else:
        out[1 - q] = 0.5 * g * (-1) ** q * np.exp(-1j * ph)
        out[1 + q] = 0.5 * g * np.exp(1j * ph)
    return out


def field_at(seq, t):
    """Total field (E_-1, E_0, E_+1); vectorized over ``t``."""
    t = np.asarray(t, dtype=float)
    out = np.zeros((3,) + t.shape, dtype=complex)
    for s in seq.subpulses:
        out += field_components(s, t)
    return out


def _filon_weights(s):
    """``int_0^1 (1-x) e^{sx} dx`` and ``int_0^1 x e^{sx} dx`` for complex ``s``."""
    s = np.asarray(s, dtype=complex)
    small = np.abs(s) < 1e-3
    ss = np.where(small, 1.0, s)
    es = np.exp(ss)
    i0 = np.where(small, 1 + s / 2 + s**2 / 6 + s**3 / 24, (es - 1) / ss)
    i1 = np.where(small, 0.5 + s / 3 + s**2 / 8 + s**3 / 30, (es * (ss - 1) + 1) / ss**2)
    return i0 - i1, i1


def spectral_area(sub, omega, mu, panels_per_tau=128):
    """``mu * int eps(t) exp(-i omega t) dt`` for the scalar field
    ``eps(t) = amplitude g(t) cos(w t + varphi)`` over the pulse window.

    The cosine is split into its two exponentials. A resolved exponential is integrated
    with the plain trapezoid rule (spectrally accurate on a Gaussian); a fast one is
    integrated exactly against a piecewise-linear envelope (Filon rule), so the cost
    does not grow with the carrier.
    """
    if not omega > 0:
        raise ValueError("omega must be positive")
    if sub.amplitude == 0:
        return 0j
    t0, t1 = sub.window
    n = int(np.ceil((t1 - t0) * panels_per_tau / sub.tau))
    t = np.linspace(t0, t1, n + 1)
    h = t[1] - t[0]
    g = sub.amplitude * sub.envelope(t)
    total = 0j
    for sign in (1, -1):
        nu = sign * sub.carrier - omega
        if abs(nu) * h <= 0.5:
            total += 0.5 * np.trapezoid(g * np.exp(1j * (nu * t + sign * sub.carrier_phase)), t)
            continue
        w0, w1 = _filon_weights(1j * nu * h)
        phase = np.exp(1j * (nu * t[:-1] + sign * sub.carrier_phase))
        total += 0.5 * h * np.sum(phase * (w0 * g[:-1] + w1 * g[1:]))
    return complex(mu * total)


def sample(seq, rate_per_ns=10.0, t_start=0.0, t_stop=None):
    """Time series rows (t, E_-1, E_0, E_+1) at ``rate_per_ns`` samples per ns."""
    t_stop = seq.total_duration if t_stop is None else t_stop
    n = max(int(np.floor((t_stop - t_start) * rate_per_ns)) + 1, 2)
    t = np.linspace(t_start, t_stop, n)
    return t, field_at(seq, t)


def write_timeseries(path, seq, rate_per_ns=10.0):
    t, E = sample(seq, rate_per_ns)
    header = "t_ns,Em1_re,Em1_im,E0_re,E0_im,Ep1_re,Ep1_im"
    cols = [t]
    for k in range(3):
        cols += [E[k].real, E[k].imag]
    np.savetxt(path, np.column_stack(cols), delimiter=",", header=header, comments="", fmt="%.12g")
