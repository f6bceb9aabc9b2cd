"""Steady potential-flow relations for a polytropic or isothermal gas.

These are closed-form reference formulas (Bernoulli law, sound speed,
critical and cavitation speeds) in the scaling where the stagnation density
is 1.  They are used as oracles and as the ``gasref`` table.
"""
import math

import numpy as np

from .errors import BeyondCavitation


def cavitation_speed(gamma):
    if gamma <= 1.0:
        return math.inf
    return math.sqrt(2.0 / (gamma - 1.0))


def critical_speeds(gamma, c=None):
    """``(q_cav, q_cr)``.  For ``gamma == 1`` returns ``(inf, c)``."""
    if gamma < 1.0:
        raise ValueError("gamma must be >= 1")
    if gamma == 1.0:
        if c is None or c <= 0:
            raise ValueError("isothermal flow needs the sound speed c > 0")
        return math.inf, float(c)
    return cavitation_speed(gamma), math.sqrt(2.0 / (gamma + 1.0))


def isentropic_density(q, gamma):
    """``rho = (1 - (gamma-1) q^2 / 2)^(1/(gamma-1))`` on ``0 <= q <= q_cav``."""
    if gamma <= 1.0:
        raise ValueError("isentropic_density needs gamma > 1")
    q = np.asarray(q, dtype=float)
    qcav = cavitation_speed(gamma)
    if np.any(q < 0.0):
        raise ValueError("flow speed must be nonnegative")
    if np.any(q > qcav * (1.0 + 1e-14)):
        raise BeyondCavitation(f"q = {np.max(q)} exceeds the cavitation speed {qcav}")
    base = np.clip(1.0 - 0.5 * (gamma - 1.0) * q * q, 0.0, None)
    return base ** (1.0 / (gamma - 1.0))


def sound_speed_sq(q, gamma):
    q = np.asarray(q, dtype=float)
    return 1.0 - 0.5 * (gamma - 1.0) * q * q


def classification_identity_check(q, gamma):
    """Residual of ``q^2 - q_cr^2 = 2/(gamma+1) (q^2 - c^2)``."""
    q = np.asarray(q, dtype=float)
    qcr2 = 2.0 / (gamma + 1.0)
    c2 = sound_speed_sq(q, gamma)
    return np.abs(q * q - qcr2 - qcr2 * (q * q - c2))


def isothermal_density(q, c, rho0):
    if c <= 0 or rho0 <= 0:
        raise ValueError("isothermal_density needs c > 0 and rho0 > 0")
    q = np.asarray(q, dtype=float)
    return rho0 * np.exp(-q * q / (2.0 * c * c))


def flow_type(q, gamma, c=None, tol=1e-12):
    """'subsonic' / 'sonic' / 'supersonic' relative to the critical speed."""
    _, qcr = critical_speeds(gamma, c)
    if abs(q - qcr) <= tol:
        return "sonic"
    return "subsonic" if q < qcr else "supersonic"


def table(gamma, n=101, c=1.0, rho0=1.0, q_max=None):
    """Rows ``(q, rho, c, type)`` on ``n`` evenly spaced speeds.

    Speeds run to the cavitation speed for ``gamma > 1`` and to ``q_max``
    (default ``3 c``) for the isothermal case.
    """
    rows = []
    if gamma == 1.0:
        top = 3.0 * c if q_max is None else q_max
        for q in np.linspace(0.0, top, n):
            rows.append((float(q), float(isothermal_density(q, c, rho0)), float(c), flow_type(q, 1.0, c)))
        return rows
    top = cavitation_speed(gamma) if q_max is None else min(q_max, cavitation_speed(gamma))
    for q in np.linspace(0.0, top, n):
        rho = float(isentropic_density(q, gamma))
        cs = math.sqrt(max(float(sound_speed_sq(q, gamma)), 0.0))
        rows.append((float(q), rho, cs, flow_type(q, gamma)))
    return rows
