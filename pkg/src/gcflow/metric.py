"""Two-dimensional metrics on a rectangle: Christoffel symbols and Gauss curvature.

A :class:`MetricField` either carries an analytic *jet* (values plus exact first
and second derivatives) or gridded samples that are differentiated with
second-order finite differences.  Everything is vectorised over arbitrary
point arrays.

Component arrays use the packed order ``(g11, g12, g22)``; second derivatives
use ``(xx, xy, yy)``.
"""
from dataclasses import dataclass, field
import csv
import math
from typing import Callable, Optional

import numpy as np
import sympy as sp
from scipy.interpolate import RectBivariateSpline

from . import expr as _expr
from .errors import DegenerateMetric, StencilOutOfDomain, UnknownTag

DET_TOL = 1e-12
TWO_PI = 2.0 * math.pi

BUILTIN_TAGS = ("catenoid", "helicoid", "flat")


@dataclass(frozen=True)
class GridSamples:
    x: np.ndarray
    y: np.ndarray
    g: np.ndarray  # (3, nx, ny)


@dataclass(frozen=True, eq=False)
class MetricField:
    """Immutable metric on ``[x0, x1] x [y0, y1]``.

    ``jet(x, y)`` (analytic mode) returns ``(g, dg, d2g)`` with shapes
    ``(3, ...)``, ``(2, 3, ...)`` and ``(3, 3, ...)``.
    """

    tag: str
    x0: float
    x1: float
    y0: float
    y1: float
    periodic_y: bool = False
    jet: Optional[Callable] = None
    grid: Optional[GridSamples] = None
    params: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def derivative_mode(self):
        return "analytic" if self.jet is not None else "finite-difference"

    @property
    def domain(self):
        return (self.x0, self.x1, self.y0, self.y1)

    def components(self, x, y):
        """Return ``(g11, g12, g22)`` at the given points."""
        x, y = _points(x, y)
        if self.jet is not None:
            return self.jet(x, y)[0]
        s = _splines(self)
        return np.stack([s["g"][c].ev(x, y) for c in range(3)])

    def describe(self):
        d = {"tag": self.tag, "domain": list(self.domain), "periodic_y": self.periodic_y,
             "mode": self.derivative_mode}
        if self.params:
            d["params"] = {k: v for k, v in self.params.items() if isinstance(v, (int, float, str))}
        return d


@dataclass(frozen=True)
class ChristoffelField:
    """Six independent symbols; the symmetric pair is served from one slot."""

    g1_11: np.ndarray
    g1_12: np.ndarray
    g1_22: np.ndarray
    g2_11: np.ndarray
    g2_12: np.ndarray
    g2_22: np.ndarray

    def __getitem__(self, kij):
        k, i, j = kij
        if (k, i, j) not in _GAMMA_SLOTS and (k, j, i) not in _GAMMA_SLOTS:
            raise IndexError(kij)
        i, j = min(i, j), max(i, j)
        return getattr(self, f"g{k}_{i}{j}")

    def as_array(self):
        """Full ``(2, 2, 2, ...)`` array indexed ``[k-1, i-1, j-1]``."""
        g1 = [[self.g1_11, self.g1_12], [self.g1_12, self.g1_22]]
        g2 = [[self.g2_11, self.g2_12], [self.g2_12, self.g2_22]]
        return np.array([g1, g2], dtype=float)

    @classmethod
    def from_array(cls, gam):
        return cls(gam[0, 0, 0], gam[0, 0, 1], gam[0, 1, 1], gam[1, 0, 0], gam[1, 0, 1], gam[1, 1, 1])


_GAMMA_SLOTS = {(k, i, j) for k in (1, 2) for i in (1, 2) for j in (1, 2) if i <= j}


@dataclass(frozen=True)
class CurvatureField:
    kappa: np.ndarray
    R1212: np.ndarray


# ----------------------------------------------------------------------------
# construction

def _points(x, y):
    return np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))


def _zeros(x):
    return np.zeros_like(x)


def _catenoid_jet(x, y):
    lam = np.cosh(x) ** 2
    dlam = np.sinh(2.0 * x)
    ddlam = 2.0 * np.cosh(2.0 * x)
    z = _zeros(x)
    g = np.stack([lam, z, lam])
    dg = np.stack([np.stack([dlam, z, dlam]), np.stack([z, z, z])])
    d2g = np.stack([np.stack([ddlam, z, ddlam]), np.stack([z, z, z]), np.stack([z, z, z])])
    return g, dg, d2g


def _helicoid_jet(x, y):
    z = _zeros(x)
    one = np.ones_like(x)
    g = np.stack([1.0 + y * y, z, one])
    dg = np.stack([np.stack([z, z, z]), np.stack([2.0 * y, z, z])])
    d2g = np.stack([np.stack([z, z, z]), np.stack([z, z, z]), np.stack([2.0 * one, z, z])])
    return g, dg, d2g


def _flat_jet(x, y):
    z = _zeros(x)
    one = np.ones_like(x)
    g = np.stack([one, z, one])
    zz = np.zeros((2, 3) + x.shape)
    return g, zz, np.zeros((3, 3) + x.shape)


_BUILTINS = {
    # tag: (jet, default domain, periodic in y)
    "catenoid": (_catenoid_jet, (-1.0, 1.0, 0.0, TWO_PI), True),
    "helicoid": (_helicoid_jet, (0.0, TWO_PI, -1.0, 1.0), False),
    "flat": (_flat_jet, (0.0, 1.0, 0.0, TWO_PI), True),
}


def builtin_metric(tag, **params):
    """Analytic builtin metric.

    catenoid: ``cosh(x)^2 (dx^2 + dy^2)``, periodic in ``y`` by default;
    helicoid: ``(1 + y^2) dx^2 + dy^2``; flat: the identity.
    Domain extents are overridden with ``x0, x1, y0, y1``; ``periodic`` sets
    the y-periodicity flag.
    """
    if tag not in _BUILTINS:
        raise UnknownTag(f"unknown builtin metric {tag!r}; expected one of {BUILTIN_TAGS}")
    jet, dom, periodic = _BUILTINS[tag]
    x0 = float(params.get("x0", dom[0]))
    x1 = float(params.get("x1", dom[1]))
    y0 = float(params.get("y0", dom[2]))
    y1 = float(params.get("y1", dom[3]))
    periodic = bool(params.get("periodic", periodic))
    return MetricField(tag, x0, x1, y0, y1, periodic, jet=jet)


def from_expressions(g11, g12, g22, x0, x1, y0, y1, periodic=False):
    """Custom analytic metric from expression strings in ``x`` and ``y``."""
    comps = [_expr.parse(s) for s in (g11, g12, g22)]
    X, Y = _expr.X, _expr.Y
    f = [_expr.compile_expr(c) for c in comps]
    fx = [_expr.compile_expr(sp.diff(c, X)) for c in comps]
    fy = [_expr.compile_expr(sp.diff(c, Y)) for c in comps]
    fxx = [_expr.compile_expr(sp.diff(c, X, 2)) for c in comps]
    fxy = [_expr.compile_expr(sp.diff(c, X, Y)) for c in comps]
    fyy = [_expr.compile_expr(sp.diff(c, Y, 2)) for c in comps]

    def jet(x, y):
        g = np.stack([h(x, y) for h in f])
        dg = np.stack([np.stack([h(x, y) for h in fx]), np.stack([h(x, y) for h in fy])])
        d2g = np.stack([np.stack([h(x, y) for h in hs]) for hs in (fxx, fxy, fyy)])
        return g, dg, d2g

    params = {"g11": g11, "g12": g12, "g22": g22}
    return MetricField("custom", float(x0), float(x1), float(y0), float(y1), bool(periodic),
                       jet=jet, params=params)


def from_samples(x, y, g11, g12, g22, tag="custom", periodic=False):
    """Gridded metric; derivatives by second-order finite differences."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    g = np.stack([np.asarray(c, dtype=float) for c in (g11, g12, g22)])
    if g.shape[1:] != (x.size, y.size):
        raise ValueError(f"samples must have shape {(x.size, y.size)}, got {g.shape[1:]}")
    if x.size < 5 or y.size < 5:
        raise ValueError("gridded metrics need at least 5 samples per axis")
    if np.any(np.diff(x) <= 0) or np.any(np.diff(y) <= 0):
        raise ValueError("sample coordinates must be strictly increasing")
    _check_positive(g)
    return MetricField(tag, float(x[0]), float(x[-1]), float(y[0]), float(y[-1]), periodic,
                       grid=GridSamples(x, y, g))


def sample(metric, nx, ny):
    """Gridded copy of ``metric`` on an ``nx x ny`` node grid covering its domain."""
    x = np.linspace(metric.x0, metric.x1, nx)
    y = np.linspace(metric.y0, metric.y1, ny)
    X, Y = np.meshgrid(x, y, indexing="ij")
    g = metric.components(X, Y)
    return from_samples(x, y, *g, tag=metric.tag, periodic=metric.periodic_y)


def load_csv(path, periodic=False):
    """Read a gridded metric from CSV with header ``x,y,g11,g12,g22``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if header != ["x", "y", "g11", "g12", "g22"]:
            raise ValueError(f"{path}: expected header x,y,g11,g12,g22, got {','.join(header)}")
        rows = np.array([[float(v) for v in row] for row in reader if row], dtype=float)
    xs = np.unique(rows[:, 0])
    ys = np.unique(rows[:, 1])
    if rows.shape[0] != xs.size * ys.size:
        raise ValueError(f"{path}: samples do not form a complete rectangular grid")
    order = np.lexsort((rows[:, 1], rows[:, 0]))
    rows = rows[order]
    g = rows[:, 2:].T.reshape(3, xs.size, ys.size)
    return from_samples(xs, ys, *g, periodic=periodic)


# ----------------------------------------------------------------------------
# tensor algebra

def _full(c):
    """Packed ``(3, ...)`` -> symmetric ``(2, 2, ...)``."""
    return np.stack([np.stack([c[0], c[1]]), np.stack([c[1], c[2]])])


def _check_positive(g):
    det = g[0] * g[2] - g[1] ** 2
    bad = (g[0] <= 0) | (det <= DET_TOL) | ~np.isfinite(det)
    if np.any(bad):
        idx = np.argwhere(np.atleast_1d(bad))[0]
        raise DegenerateMetric(f"metric not positive definite (|g| <= {DET_TOL}) at sample index {tuple(idx)}")
    return det


def _inverse(g):
    det = _check_positive(g)
    return np.stack([g[2] / det, -g[1] / det, g[0] / det]), det


def _christoffel_full(ginv_full, dG):
    # S[i,j,l] = d_j g_il + d_i g_jl - d_l g_ij ; dG[l,i,j] = d_l g_ij
    S = np.einsum("jil...->ijl...", dG) + np.einsum("ijl...->ijl...", dG) - np.einsum("lij...->ijl...", dG)
    return 0.5 * np.einsum("kl...,ijl...->kij...", ginv_full, S), S


def _r1212(G, gam, dgam):
    """R_1212 from the displayed Riemann formula with the (j, k) pair reversed.

    ``dgam[m, k, i, j]`` is d_m Gamma^k_ij.  The displayed expression evaluated
    at (1, 2, 1, 2) gives -R_1212 for the convention kappa = R_1212/|g|; it is
    evaluated at (1, 1, 2, 2) instead.
    """
    i, j, k, l = 0, 0, 1, 1
    T = (dgam[k, :, i, j] - dgam[j, :, i, k]
         + np.einsum("n...,mn...->m...", gam[:, i, j], gam[:, :, k])
         - np.einsum("n...,mn...->m...", gam[:, i, k], gam[:, :, j]))
    return np.einsum("m...,m...->...", G[l], T)


def _analytic_geometry(metric, x, y, curvature=True):
    g, dg, d2g = metric.jet(x, y)
    ginv, det = _inverse(g)
    G = _full(g)
    Ginv = _full(ginv)
    dG = np.stack([_full(dg[0]), _full(dg[1])])
    gam, S = _christoffel_full(Ginv, dG)
    out = {"g": g, "ginv": ginv, "det": det, "gamma": gam}
    if curvature:
        ddG = np.stack([np.stack([_full(d2g[0]), _full(d2g[1])]),
                        np.stack([_full(d2g[1]), _full(d2g[2])])])
        dGinv = -np.einsum("ka...,mab...,bl...->mkl...", Ginv, dG, Ginv)
        dS = (np.einsum("mjil...->mijl...", ddG) + ddG - np.einsum("mlij...->mijl...", ddG))
        dgam = 0.5 * (np.einsum("mkl...,ijl...->mkij...", dGinv, S)
                      + np.einsum("kl...,mijl...->mkij...", Ginv, dS))
        R = _r1212(G, gam, dgam)
        out["R1212"] = R
        out["kappa"] = R / det
    return out


def grid_geometry(metric):
    """Finite-difference geometry on the sample grid of a gridded metric.

    Interior nodes use centred second-order stencils, boundary nodes one-sided
    second-order ones.
    """
    if metric.grid is None:
        raise ValueError("grid_geometry needs a gridded metric")
    if "grid" in metric._cache:
        return metric._cache["grid"]
    gs = metric.grid
    g = gs.g
    ginv, det = _inverse(g)
    grads = [np.gradient(g[c], gs.x, gs.y, edge_order=2) for c in range(3)]
    dg = np.stack([np.stack([grads[c][a] for c in range(3)]) for a in range(2)])
    G = _full(g)
    Ginv = _full(ginv)
    dG = np.stack([_full(dg[0]), _full(dg[1])])
    gam, _ = _christoffel_full(Ginv, dG)
    dgam = np.empty((2,) + gam.shape)
    for k in range(2):
        for i in range(2):
            for j in range(2):
                dx, dy = np.gradient(gam[k, i, j], gs.x, gs.y, edge_order=2)
                dgam[0, k, i, j] = dx
                dgam[1, k, i, j] = dy
    R = _r1212(G, gam, dgam)
    out = {"g": g, "ginv": ginv, "det": det, "gamma": gam, "R1212": R, "kappa": R / det}
    metric._cache["grid"] = out
    return out


def _splines(metric):
    if "splines" in metric._cache:
        return metric._cache["splines"]
    gs = metric.grid
    geo = grid_geometry(metric)

    def fit(a):
        return RectBivariateSpline(gs.x, gs.y, a, kx=3, ky=3)

    s = {
        "g": [fit(gs.g[c]) for c in range(3)],
        "gamma": {(k, i, j): fit(geo["gamma"][k, i, j]) for k in range(2) for i in range(2) for j in range(i, 2)},
        "R1212": fit(geo["R1212"]),
        "kappa": fit(geo["kappa"]),
    }
    metric._cache["splines"] = s
    return s


def _grid_guard(metric, x, y, margin):
    gs = metric.grid
    lo_x, hi_x = gs.x[margin], gs.x[-1 - margin]
    lo_y, hi_y = gs.y[margin], gs.y[-1 - margin]
    tol = 1e-12 * max(1.0, abs(gs.x[-1]), abs(gs.y[-1]))
    if np.any(x < lo_x - tol) or np.any(x > hi_x + tol) or np.any(y < lo_y - tol) or np.any(y > hi_y + tol):
        raise StencilOutOfDomain(
            f"finite-difference stencil needs {margin} interior node(s) of margin: "
            f"x in [{lo_x}, {hi_x}], y in [{lo_y}, {hi_y}]")


def _grid_geometry_at(metric, x, y, curvature=True, strict=True):
    if strict:
        _grid_guard(metric, x, y, 2 if curvature else 1)
    s = _splines(metric)
    g = np.stack([s["g"][c].ev(x, y) for c in range(3)])
    ginv, det = _inverse(g)
    gam = np.empty((2, 2, 2) + x.shape)
    for (k, i, j), sp_ in s["gamma"].items():
        gam[k, i, j] = sp_.ev(x, y)
        gam[k, j, i] = gam[k, i, j]
    out = {"g": g, "ginv": ginv, "det": det, "gamma": gam}
    if curvature:
        out["R1212"] = s["R1212"].ev(x, y)
        out["kappa"] = s["kappa"].ev(x, y)
    return out


def geometry(metric, x, y, curvature=True, strict=False):
    """Dict with ``g``, ``ginv``, ``det``, ``gamma`` (full ``(2,2,2,...)``) and,
    when ``curvature`` is set, ``R1212`` and ``kappa`` at the given points.

    For gridded metrics values between nodes come from bicubic spline
    interpolation of the node values; ``strict`` enforces the stencil margin.
    """
    x, y = _points(x, y)
    if metric.jet is not None:
        return _analytic_geometry(metric, x, y, curvature)
    return _grid_geometry_at(metric, x, y, curvature, strict)


# ----------------------------------------------------------------------------
# public pointwise operations

def inverse_metric(metric, pt):
    """``(g^11, g^12, g^22)`` at ``pt = (x, y)``."""
    g = metric.components(*pt)
    ginv, _ = _inverse(g)
    return tuple(ginv)


def christoffel(metric, pt):
    """All Christoffel symbols at ``pt`` as a :class:`ChristoffelField`."""
    geo = geometry(metric, *pt, curvature=False, strict=True)
    return ChristoffelField.from_array(geo["gamma"])


def curvature(metric, pt):
    geo = geometry(metric, *pt, curvature=True, strict=True)
    return CurvatureField(geo["kappa"], geo["R1212"])


def gauss_curvature(metric, pt):
    """Gauss curvature ``R_1212 / |g|`` at ``pt``."""
    return curvature(metric, pt).kappa


def curvature_gradient(metric, x, y):
    """``(d kappa/dx, d kappa/dy)`` at the given points.

    Analytic metrics use a fourth-order centred difference of the exact
    curvature (step 1e-3); gridded metrics differentiate the curvature spline.
    """
    x, y = _points(x, y)
    if metric.jet is None:
        s = _splines(metric)["kappa"]
        return s.ev(x, y, dx=1), s.ev(x, y, dy=1)
    h = 1e-3

    def k(a, b):
        return _analytic_geometry(metric, a, b)["kappa"]

    kx = (-k(x + 2 * h, y) + 8 * k(x + h, y) - 8 * k(x - h, y) + k(x - 2 * h, y)) / (12 * h)
    ky = (-k(x, y + 2 * h) + 8 * k(x, y + h) - 8 * k(x, y - h) + k(x, y - 2 * h)) / (12 * h)
    return kx, ky


def curvature_table(metric, nx, ny):
    """``(X, Y, kappa)`` on a node grid spanning the metric's domain."""
    x = np.linspace(metric.x0, metric.x1, nx)
    y = np.linspace(metric.y0, metric.y1, ny)
    X, Y = np.meshgrid(x, y, indexing="ij")
    if metric.jet is not None:
        kap = _analytic_geometry(metric, X, Y)["kappa"]
    else:
        kap = _grid_geometry_at(metric, X, Y, strict=False)["kappa"]
    return X, Y, kap
