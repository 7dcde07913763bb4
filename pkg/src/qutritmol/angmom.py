"""Wigner 3j symbols and symmetric-top matrix elements of the rotation matrix.

Quantum numbers may be integers or half-integers. They are converted to doubled
integers on entry so every selection rule is an exact integer test.
"""
import math
from functools import lru_cache

import numpy as np

_LOGFACT = np.concatenate([[0.0], np.cumsum(np.log(np.arange(1, 200)))])


def _doubled(x):
    d = 2 * x
    n = int(round(d))
    if abs(d - n) > 1e-9:
        raise ValueError(f"{x!r} is not an integer or half-integer")
    return n


def _lf(n2):
    # log((n2/2)!) for a doubled, even argument
    return _LOGFACT[n2 // 2]


@lru_cache(maxsize=65536)
def _wigner3j_doubled(j1, j2, j3, m1, m2, m3):
    for j, m in ((j1, m1), (j2, m2), (j3, m3)):
        if j < 0:
            raise ValueError("angular momenta must be non-negative")
        if (j - m) % 2:
            raise ValueError("projection and angular momentum differ in half-integer parity")
        if abs(m) > j:
            raise ValueError("|m| exceeds j")
    if m1 + m2 + m3 != 0:
        return 0.0
    if j3 > j1 + j2 or j3 < abs(j1 - j2) or (j1 + j2 + j3) % 2:
        return 0.0

    log_pref = 0.5 * (
        _lf(j1 + j2 - j3) + _lf(j1 - j2 + j3) + _lf(-j1 + j2 + j3) - _lf(j1 + j2 + j3 + 2)
        + _lf(j1 + m1) + _lf(j1 - m1) + _lf(j2 + m2) + _lf(j2 - m2) + _lf(j3 + m3) + _lf(j3 - m3)
    )
    kmin = max(0, j2 - j3 - m1, j1 - j3 + m2)
    kmax = min(j1 + j2 - j3, j1 - m1, j2 + m2)
    terms = []
    for k in range(kmin, kmax + 1, 2):
        lg = (_lf(k) + _lf(j3 - j2 + k + m1) + _lf(j3 - j1 + k - m2)
              + _lf(j1 + j2 - j3 - k) + _lf(j1 - k - m1) + _lf(j2 - k + m2))
        sign = -1.0 if (k // 2) % 2 else 1.0
        terms.append(sign * math.exp(log_pref - lg))
    phase = (j1 - j2 - m3) // 2
    value = math.fsum(terms)
    return -value if phase % 2 else value


def wigner3j(j1, j2, j3, m1, m2, m3):
    """Wigner 3j symbol ``(j1 j2 j3; m1 m2 m3)`` from the Racah sum.

    Returns exactly ``0.0`` when the projection sum or the triangle rule fails.
    Raises ``ValueError`` for inconsistent half-integer parities.
    """
    return _wigner3j_doubled(_doubled(j1), _doubled(j2), _doubled(j3),
                             _doubled(m1), _doubled(m2), _doubled(m3))


def _check_projection(j, m, name):
    if abs(m) > j:
        raise ValueError(f"|{name}| = {abs(m)} exceeds J = {j}")


def symtop_element(Jp, Kp, Mp, q, qp, J, K, M):
    """<J'K'M'| D^{1*}_{q q'} |J K M> between symmetric-top states.

    Nonzero only when ``M' = M + q`` and ``K' = K + q'``.
    """
    for name, j, m in (("K", J, K), ("M", J, M), ("K'", Jp, Kp), ("M'", Jp, Mp)):
        _check_projection(j, m, name)
    if q not in (-1, 0, 1) or qp not in (-1, 0, 1):
        raise ValueError("spherical indices must be -1, 0 or +1")
    if Mp != M + q or Kp != K + qp:
        return 0.0
    first = wigner3j(J, 1, Jp, M, q, -Mp)
    if first == 0.0:
        return 0.0
    second = wigner3j(J, 1, Jp, K, qp, -Kp)
    sign = -1.0 if (Mp - Kp) % 2 else 1.0
    return sign * math.sqrt((2 * J + 1) * (2 * Jp + 1)) * first * second
