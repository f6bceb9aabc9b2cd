"""Geometry <-> Chaplygin-gas variables.

The normalised second fundamental form ``(L, M, N)`` is identified with the
momentum-flux tensor of a gas with pressure ``p = -1/rho``::

    L = rho v^2 + p,   M = -rho u v,   N = rho u^2 + p.

All functions broadcast over numpy arrays.  Velocity is defined up to the
gauge ``(u, v) -> (-u, -v)``; the canonical representative has ``u >= 0``
(and ``v >= 0`` when ``u == 0``).
"""
from dataclasses import dataclass
import enum

import numpy as np

from .errors import ConstraintViolation, NoNegativeRoot, SonicDegeneracy

SONIC_TOL = 1e-10
CLASSIFY_TOL = 1e-12
GAUSS_RTOL = 1e-8


@dataclass(frozen=True)
class FluidState:
    rho: np.ndarray
    u: np.ndarray
    v: np.ndarray
    p: np.ndarray

    @property
    def q2(self):
        return self.u * self.u + self.v * self.v


@dataclass(frozen=True)
class SecondFF:
    L: np.ndarray
    M: np.ndarray
    N: np.ndarray

    def gauss(self):
        return self.L * self.N - self.M * self.M


class FlowType(enum.Enum):
    SUBSONIC = "subsonic"
    SUPERSONIC = "supersonic"
    SONIC = "sonic"


def fluid_to_lmn(s):
    rho, u, v, p = (np.asarray(a, dtype=float) for a in (s.rho, s.u, s.v, s.p))
    return SecondFF(rho * v * v + p, -rho * u * v, rho * u * u + p)


def bernoulli_density(q2, kappa):
    """``(rho, p)`` with ``rho = 1/sqrt(q^2 + kappa)`` and ``p = -1/rho``."""
    s = np.asarray(q2, dtype=float) + np.asarray(kappa, dtype=float)
    if np.any(~(s > SONIC_TOL)):
        raise SonicDegeneracy(f"q^2 + kappa = {np.min(s):.3e} <= {SONIC_TOL}: density blows up")
    root = np.sqrt(s)
    return 1.0 / root, -root


def state_from_velocity(u, v, kappa):
    """Bernoulli-consistent :class:`FluidState` for velocity ``(u, v)``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    rho, p = bernoulli_density(u * u + v * v, kappa)
    return FluidState(rho, u, v, p)


def pressure_root(L, M, N, kappa=None):
    """Negative root of ``p^2 - (L + N) p + (LN - M^2) = 0``.

    The root product is taken from ``kappa`` when given (it is the Gauss
    constraint value), which avoids the cancellation in ``LN - M^2`` when the
    flux entries are large compared to the curvature.
    """
    L, M, N = (np.asarray(a, dtype=float) for a in (L, M, N))
    prod = L * N - M * M if kappa is None else np.asarray(kappa, dtype=float)
    trace = L + N
    disc = np.sqrt((L - N) ** 2 + 4.0 * M * M)
    pos = trace > 0.0
    big = np.where(pos, 0.5 * (trace + disc), 1.0)
    return np.where(pos, prod / big, 0.5 * (trace - disc))


def lmn_to_fluid(f, kappa, check=True):
    """Invert :func:`fluid_to_lmn` given the Gauss curvature at each point.

    Returns the canonical-gauge state.  The larger velocity component is taken
    from ``u^2 = p(p - N)`` or ``v^2 = p(p - L)``; the smaller one from
    ``u v = M p``, which keeps full relative accuracy when one component is
    nearly zero.
    """
    L, M, N = (np.asarray(a, dtype=float) for a in (f.L, f.M, f.N))
    kappa = np.asarray(kappa, dtype=float)
    if check:
        scale = np.maximum(1.0, np.maximum(np.abs(L * N), M * M))
        res = np.abs(L * N - M * M - kappa)
        if np.any(res > GAUSS_RTOL * scale):
            raise ConstraintViolation(f"|LN - M^2 - kappa| = {np.max(res):.3e} exceeds tolerance")
    p = pressure_root(L, M, N, kappa)
    if np.any(~(p < 0.0)):
        raise NoNegativeRoot(f"pressure root {np.max(p):.3e} is not negative")
    u, v = _velocity(L, M, N, p)
    return FluidState(-1.0 / p, u, v, p)


def _velocity(L, M, N, p):
    u2 = np.maximum(p * (p - N), 0.0)
    v2 = np.maximum(p * (p - L), 0.0)
    mp = np.abs(M * p)  # |u v|
    u_major = u2 >= v2
    ua = np.sqrt(u2)
    va = np.sqrt(v2)
    u = np.where(u_major, ua, np.where(va > 0.0, mp / np.where(va > 0.0, va, 1.0), 0.0))
    v_mag = np.where(u_major, np.where(ua > 0.0, mp / np.where(ua > 0.0, ua, 1.0), 0.0), va)
    v = np.where(M > 0.0, -v_mag, v_mag)
    # with u == 0 the gauge leaves v >= 0
    v = np.where(u == 0.0, v_mag, v)
    return u, v


def canonical_gauge(u, v):
    """Map ``(u, v)`` to the representative with ``u > 0`` or ``u == 0, v >= 0``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    flip = (u < 0.0) | ((u == 0.0) & (v < 0.0))
    return np.where(flip, -u, u), np.where(flip, -v, v)


def sound_speed(rho):
    """``c = 1/rho`` for the Chaplygin law ``p'(rho) = 1/rho^2``."""
    return 1.0 / np.asarray(rho, dtype=float)


def classify(kappa, tol=CLASSIFY_TOL):
    """Flow type from the sign of the Gauss curvature (scalar input)."""
    kappa = float(kappa)
    if kappa > tol:
        return FlowType.SUBSONIC
    if kappa < -tol:
        return FlowType.SUPERSONIC
    return FlowType.SONIC


def gauss_residual(s, kappa):
    """``rho p q^2 + p^2 - kappa``."""
    rho, p = np.asarray(s.rho, dtype=float), np.asarray(s.p, dtype=float)
    return rho * p * s.q2 + p * p - np.asarray(kappa, dtype=float)
