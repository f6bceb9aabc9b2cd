"""Distributional residuals of a gridded solution.

Both residuals pair the equations with compactly supported test functions
and integrate by parts, so only the field values (never their derivatives)
enter.  Quadrature is the midpoint rule on node-centred cells, i.e. uniform
weights ``dx * dy`` at the samples.  Test-function derivatives are centred
differences of the sampled bump (periodic in y when the field is), which is
the summation-by-parts form of the pairing: a constant field pairs to zero
whatever the alignment of the supports with the grid.
"""
from dataclasses import dataclass

import numpy as np

from . import metric as _metric
from .solver import pack_gamma


def _bump(s):
    """``(1 - s^2)^2`` on ``|s| < 1`` and its derivative; C^1 at the edges."""
    inside = np.abs(s) < 1.0
    w = 1.0 - s * s
    return np.where(inside, w * w, 0.0), np.where(inside, -4.0 * s * w, 0.0)


@dataclass(frozen=True)
class BumpTest:
    """Nonnegative product bump supported on ``[xa, xb] x [ya, yb]``."""

    xa: float
    xb: float
    ya: float
    yb: float

    def __call__(self, X, Y):
        hx = 0.5 * (self.xb - self.xa)
        hy = 0.5 * (self.yb - self.ya)
        bx, dbx = _bump((X - 0.5 * (self.xa + self.xb)) / hx)
        by, dby = _bump((Y - 0.5 * (self.ya + self.yb)) / hy)
        return bx * by, dbx * by / hx, bx * dby / hy


# supports as fractions of the rectangle; multiples of 1/8 land on nodes
# (x) and cell faces (y) of every grid whose counts divide by 8
DEFAULT_SUPPORTS = (
    (0.25, 0.75, 0.25, 0.75),
    (0.125, 0.625, 0.125, 0.875),
    (0.375, 0.875, 0.0, 0.5),
)


def default_test_functions(field):
    x0, x1 = float(field.x[0]), float(field.x[-1])
    y0, y1 = field.y0, field.y1
    out = []
    for a, b, c, d in DEFAULT_SUPPORTS:
        out.append(BumpTest(x0 + a * (x1 - x0), x0 + b * (x1 - x0), y0 + c * (y1 - y0), y0 + d * (y1 - y0)))
    return out


def _grid(field):
    dx = np.diff(field.x)
    if dx.size < 2 or not np.allclose(dx, dx[0], rtol=1e-9, atol=0.0):
        raise ValueError("residual quadrature needs at least 3 uniformly spaced x-slices")
    dy = (field.y1 - field.y0) / field.y.size
    X, Y = np.meshgrid(field.x, field.y, indexing="ij")
    return X, Y, float(dx[0]), dy


def _sampled(fn, X, Y, hx, hy, periodic):
    """``(phi, phi_x, phi_y)`` with difference-quotient derivatives."""
    phi = fn(X, Y)[0]
    phx = np.gradient(phi, hx, axis=0, edge_order=2)
    if periodic:
        phy = (np.roll(phi, -1, axis=1) - np.roll(phi, 1, axis=1)) / (2.0 * hy)
    else:
        phy = np.gradient(phi, hy, axis=1, edge_order=2)
    return phi, phx, phy


def _christoffel(field, metric, X, Y):
    geo = _metric.geometry(metric, X, Y, curvature=False, strict=False)
    return pack_gamma(geo["gamma"])


def weak_codazzi_residual(field, metric, test_fns=None):
    """``|<Codazzi_k, phi>|`` for each test function; shape ``(ntest, 2)``.

    Row entries: ``|sum (M phi_x - L phi_y + RHS1 phi)|`` and
    ``|sum (N phi_x - M phi_y + RHS2 phi)|`` times the cell area, with
    ``RHS1 = G2_22 L - 2 G2_12 M + G2_11 N`` and
    ``RHS2 = -G1_22 L + 2 G1_12 M - G1_11 N``.
    """
    test_fns = default_test_functions(field) if test_fns is None else test_fns
    X, Y, hx, hy = _grid(field)
    w = hx * hy
    L, M, N = field.lmn()
    G = _christoffel(field, metric, X, Y)
    rhs1 = G[5] * L - 2.0 * G[4] * M + G[3] * N
    rhs2 = -G[2] * L + 2.0 * G[1] * M - G[0] * N
    out = np.empty((len(test_fns), 2))
    for t, fn in enumerate(test_fns):
        phi, phx, phy = _sampled(fn, X, Y, hx, hy, field.periodic)
        out[t, 0] = abs(np.sum(M * phx - L * phy + rhs1 * phi) * w)
        out[t, 1] = abs(np.sum(N * phx - M * phy + rhs2 * phi) * w)
    return out


def entropy_production(field, metric, test_fns=None, q2_floor=1e-14):
    """Pair the rotationality and continuity equations with nonnegative tests.

    Returns ``{"values": (ntest, 2) signed pairings, "signs": ..., "max_abs": ...}``.
    The pairings are ``<d_x v - d_y u - S1, phi>`` and
    ``<d_x(rho u) + d_y(rho v) - S2, phi>``; both vanish for smooth solutions
    of the momentum balances.  Points with ``q^2`` below ``q2_floor`` are
    dropped from the source integrals.
    """
    test_fns = default_test_functions(field) if test_fns is None else test_fns
    X, Y, hx, hy = _grid(field)
    w = hx * hy
    u, v, rho, p = field.u, field.v, field.rho, field.p
    q2 = u * u + v * v
    G = _christoffel(field, metric, X, Y)
    L = rho * v * v + p
    N = rho * u * u + p
    ruv = rho * u * v
    R1 = -(L * G[5] + 2.0 * ruv * G[4] + N * G[3])
    R2 = -(L * G[2] + 2.0 * ruv * G[1] + N * G[0])
    kx, ky = _metric.curvature_gradient(metric, X, Y)
    ok = q2 > q2_floor
    q2s = np.where(ok, q2, 1.0)
    s1 = np.where(ok, (u * (0.5 * rho * ky + R1) - v * (0.5 * rho * kx + R2)) / (rho * q2s), 0.0)
    s2 = np.where(ok, 0.5 * rho * (u * kx + v * ky) / q2s + (v * R1 + u * R2) / q2s, 0.0)
    vals = np.empty((len(test_fns), 2))
    for t, fn in enumerate(test_fns):
        phi, phx, phy = _sampled(fn, X, Y, hx, hy, field.periodic)
        vals[t, 0] = np.sum(-v * phx + u * phy - s1 * phi) * w
        vals[t, 1] = np.sum(-rho * u * phx - rho * v * phy - s2 * phi) * w
    return {"values": vals, "signs": np.sign(vals).astype(int), "max_abs": float(np.max(np.abs(vals)))}


def gauss_residual_field(field):
    L, M, N = field.lmn()
    return np.abs(L * N - M * M - field.kappa)


def report(field, metric, test_fns=None):
    """JSON-ready residual summary of a field."""
    weak = weak_codazzi_residual(field, metric, test_fns)
    ent = entropy_production(field, metric, test_fns)
    return {
        "nx": int(field.x.size),
        "ny": int(field.y.size),
        "max_gauss_residual": float(np.max(gauss_residual_field(field))),
        "weak_codazzi": weak.tolist(),
        "max_weak_codazzi": float(np.max(weak)),
        "entropy": ent["values"].tolist(),
        "entropy_signs": ent["signs"].tolist(),
        "max_abs_entropy": ent["max_abs"],
    }
