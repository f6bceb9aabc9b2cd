"""Surface reconstruction from the first and second fundamental forms.

The moving frame ``S = (t1; t2; n)`` (rows) obeys the linear system
``d_i S = A_i S`` with::

    d_i t_j = Gamma^k_ij t_k + h_ij n,     d_i n = -h_ij g^jk t_k,

and ``d_i r = t_i``.  Here ``h_ij = sqrt|g| (L, M, N)``.  Integration is RK4
along ``y = y0`` in ``x`` and then along every column in ``y``; after each
step the frame is projected back onto the prescribed Gram matrix.
"""
from dataclasses import dataclass, field
import logging
from typing import Callable, Union

import numpy as np

from . import io as _io
from . import kernels
from . import metric as _metric
from .errors import DegenerateConfiguration, DegenerateMetric, FrameDrift
from .fluid_map import SecondFF

log = logging.getLogger(__name__)

DRIFT_TOL = 1e-6


@dataclass(frozen=True)
class Frame:
    t1: np.ndarray
    t2: np.ndarray
    n: np.ndarray

    def as_matrix(self):
        return np.array([self.t1, self.t2, self.n], dtype=float)

    def invariant_errors(self, g):
        """Absolute deviations from ``Gram = g``, ``n . t_i = 0`` and ``|n| = 1``."""
        t1, t2, n = (np.asarray(a, float) for a in (self.t1, self.t2, self.n))
        return np.array([
            abs(t1 @ t1 - g[0]), abs(t1 @ t2 - g[1]), abs(t2 @ t2 - g[2]),
            abs(n @ t1), abs(n @ t2), abs(np.sqrt(n @ n) - 1.0),
        ])


@dataclass
class SurfaceMesh:
    """Structured ``(nx, ny)`` vertex grid with per-vertex frames."""

    x: np.ndarray
    y: np.ndarray
    points: np.ndarray  # (nx, ny, 3)
    frames: np.ndarray  # (nx, ny, 3, 3), rows t1, t2, n
    drift: float = 0.0
    metadata: dict = field(default_factory=dict)

    @property
    def t1(self):
        return self.frames[..., 0, :]

    @property
    def t2(self):
        return self.frames[..., 1, :]

    @property
    def normal(self):
        return self.frames[..., 2, :]

    def frame(self, i, j):
        f = self.frames[i, j]
        return Frame(f[0].copy(), f[1].copy(), f[2].copy())


def initial_frame(metric, origin):
    """Lower-triangular factorisation of ``g`` at ``origin``."""
    g11, g12, g22 = (float(c) for c in metric.components(*origin))
    det = g11 * g22 - g12 * g12
    if g11 <= 0.0 or det <= _metric.DET_TOL:
        raise DegenerateMetric(f"metric degenerate at {tuple(origin)}: g11 = {g11}, |g| = {det}")
    s = np.sqrt(g11)
    return Frame(np.array([s, 0.0, 0.0]), np.array([g12 / s, np.sqrt(det / g11), 0.0]), np.array([0.0, 0.0, 1.0]))


# ----------------------------------------------------------------------------
# coefficient fields

def _uniform(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or a.size < 4:
        raise ValueError(f"{name} needs at least 4 nodes")
    d = np.diff(a)
    if np.any(d <= 0) or not np.allclose(d, d[0], rtol=1e-9, atol=0.0):
        raise ValueError(f"{name} nodes must be increasing and uniformly spaced")
    return a


def _mid_cubic(f, axis):
    """Values halfway between consecutive samples along ``axis``.

    Four-point Lagrange interpolation: centred inside, one-sided on the first
    and last interval.
    """
    f = np.moveaxis(np.asarray(f, dtype=float), axis, 0)
    out = np.empty((f.shape[0] - 1,) + f.shape[1:])
    out[1:-1] = (-f[:-3] + 9.0 * f[1:-2] + 9.0 * f[2:-1] - f[3:]) / 16.0
    out[0] = (5.0 * f[0] + 15.0 * f[1] - 5.0 * f[2] + f[3]) / 16.0
    out[-1] = (5.0 * f[-1] + 15.0 * f[-2] - 5.0 * f[-3] + f[-4]) / 16.0
    return np.moveaxis(out, 0, axis)


def _coefficients(metric, X, Y, L, M, N, axis):
    """``A_axis`` of shape ``X.shape + (3, 3)`` and the Gram ``(g11, g12, g22)``."""
    geo = _metric.geometry(metric, X, Y, curvature=False, strict=False)
    g, gi, gam = geo["g"], geo["ginv"], geo["gamma"]
    root = np.sqrt(geo["det"])
    hrow = (root * L, root * M) if axis == 0 else (root * M, root * N)
    A = np.zeros(X.shape + (3, 3))
    for j in range(2):
        A[..., j, 0] = gam[0, axis, j]
        A[..., j, 1] = gam[1, axis, j]
        A[..., j, 2] = hrow[j]
    A[..., 2, 0] = -(hrow[0] * gi[0] + hrow[1] * gi[1])
    A[..., 2, 1] = -(hrow[0] * gi[1] + hrow[1] * gi[2])
    return A, np.moveaxis(g, 0, -1)


class _HField:
    """Second fundamental form on the node grid plus midpoint values."""

    def __init__(self, h_field, x, y):
        self.x, self.y = x, y
        X, Y = np.meshgrid(x, y, indexing="ij")
        if callable(h_field):
            self.fn = h_field
            self.nodes = tuple(np.asarray(a, float) for a in h_field(X, Y))
        else:
            self.fn = None
            self.nodes = tuple(np.broadcast_to(np.asarray(a, float), X.shape) for a in
                               (h_field.L, h_field.M, h_field.N))

    def mid(self, axis, X, Y):
        """Values at the step midpoints along ``axis``."""
        if self.fn is not None:
            return tuple(np.asarray(a, float) for a in self.fn(X, Y))
        return tuple(_mid_cubic(c, axis) for c in self.nodes)


def _sweep(metric, hf, axis, fixed, S0, r0, project, drift_tol):
    """Integrate along ``axis`` for every index of the other axis in ``fixed``.

    ``S0`` is (ncol, 3, 3) and ``r0`` (ncol, 3).  Returns frames and points of
    shape (ncol, nstep+1, ...) with the column index first.
    """
    x, y = hf.x, hf.y
    s = x if axis == 0 else y
    other = y if axis == 0 else x
    cols = np.asarray(fixed)
    # node grids oriented (col, step)
    if axis == 0:
        Xn, Yn = np.meshgrid(s, other[cols], indexing="ij")
        Xn, Yn = Xn.T, Yn.T
        L, M, N = (c[:, cols].T for c in hf.nodes)
    else:
        Xn, Yn = np.meshgrid(other[cols], s, indexing="ij")
        L, M, N = (c[cols, :] for c in hf.nodes)
    sm = 0.5 * (s[:-1] + s[1:])
    if axis == 0:
        Xm, Ym = np.meshgrid(sm, other[cols], indexing="ij")
        Xm, Ym = Xm.T, Ym.T
    else:
        Xm, Ym = np.meshgrid(other[cols], sm, indexing="ij")
    if hf.fn is not None:
        Lm, Mm, Nm = hf.mid(1, Xm, Ym)
    else:
        Lm, Mm, Nm = (_mid_cubic(c, 1) for c in (L, M, N))
    An, gram = _coefficients(metric, Xn, Yn, L, M, N, axis)
    Am, _ = _coefficients(metric, Xm, Ym, Lm, Mm, Nm, axis)
    A0 = np.ascontiguousarray(An[:, :-1])
    A1 = np.ascontiguousarray(An[:, 1:])
    Am = np.ascontiguousarray(Am)
    h = np.ascontiguousarray(np.diff(s))
    S, r, drift = kernels.frame_sweep(A0, Am, A1, h, np.ascontiguousarray(S0, dtype=float),
                                      np.ascontiguousarray(r0, dtype=float),
                                      np.ascontiguousarray(gram[:, 1:]), axis, project)
    worst = float(np.max(drift)) if drift.size else 0.0
    # the projected frames must satisfy the invariants; without projection the
    # accumulated drift itself is what gets checked
    final = kernels._drift_np(S[:, 1:], gram[:, 1:]) if project else drift
    bad = float(np.max(final)) if final.size else 0.0
    if not bad <= drift_tol:
        raise FrameDrift(f"frame invariants off by {bad:.3e} (threshold {drift_tol:.1e})")
    return S, r, worst


def integrate_frame(metric, h_field: Union[SecondFF, Callable], x, y, frame0=None, r0=None,
                    order="xy", project=True, drift_tol=DRIFT_TOL, metadata=None):
    """Build the immersion on the node grid ``x`` by ``y``.

    ``h_field`` is a :class:`SecondFF` of ``(nx, ny)`` node arrays or a
    callable ``(X, Y) -> (L, M, N)``.  Gridded data are interpolated to step
    midpoints with four-point Lagrange stencils.  ``order="xy"`` sweeps the
    ``y = y[0]`` edge first, ``"yx"`` the ``x = x[0]`` edge.

    ``mesh.drift`` is the largest one-step deviation from the target Gram
    matrix before re-projection.  :class:`FrameDrift` is raised when the
    stored frames miss the invariants by more than ``drift_tol``.
    """
    x = _uniform(x, "x")
    y = _uniform(y, "y")
    hf = _HField(h_field, x, y)
    if frame0 is None:
        frame0 = initial_frame(metric, (x[0], y[0]))
    S00 = frame0.as_matrix() if isinstance(frame0, Frame) else np.asarray(frame0, float)
    r00 = np.zeros(3) if r0 is None else np.asarray(r0, float)
    if order == "xy":
        S_edge, r_edge, d0 = _sweep(metric, hf, 0, [0], S00[None], r00[None], project, drift_tol)
        S, r, d1 = _sweep(metric, hf, 1, np.arange(x.size), S_edge[0], r_edge[0], project, drift_tol)
    elif order == "yx":
        S_edge, r_edge, d0 = _sweep(metric, hf, 1, [0], S00[None], r00[None], project, drift_tol)
        S, r, d1 = _sweep(metric, hf, 0, np.arange(y.size), S_edge[0], r_edge[0], project, drift_tol)
        S = np.swapaxes(S, 0, 1)
        r = np.swapaxes(r, 0, 1)
    else:
        raise ValueError(f"order must be 'xy' or 'yx', got {order!r}")
    meta = {"metric": metric.tag, "order": order, "nx": int(x.size), "ny": int(y.size),
            "backend": kernels.BACKEND}
    meta.update(metadata or {})
    return SurfaceMesh(x, y, np.ascontiguousarray(r), np.ascontiguousarray(S), max(d0, d1), meta)


def commutation_check(metric, h_field, x, y, **kw):
    """Disagreement between the x-then-y and y-then-x sweeps.

    Returns ``{"max_position", "max_frame"}``; both are maxima over vertices.
    """
    a = integrate_frame(metric, h_field, x, y, order="xy", **kw)
    b = integrate_frame(metric, h_field, x, y, order="yx", **kw)
    return {
        "max_position": float(np.max(np.linalg.norm(a.points - b.points, axis=-1))),
        "max_frame": float(np.max(np.abs(a.frames - b.frames))),
    }


# ----------------------------------------------------------------------------
# discrete fundamental forms

def _d1(f, h, axis, order):
    f = np.moveaxis(f, axis, 0)
    if order == 2:
        d = (f[2:] - f[:-2]) / (2.0 * h)
    else:
        d = (-f[4:] + 8.0 * f[3:-1] - 8.0 * f[1:-3] + f[:-4]) / (12.0 * h)
    return np.moveaxis(d, 0, axis)


def _d2(f, h, axis, order):
    f = np.moveaxis(f, axis, 0)
    if order == 2:
        d = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / (h * h)
    else:
        d = (-f[4:] + 16.0 * f[3:-1] - 30.0 * f[2:-2] + 16.0 * f[1:-3] - f[:-4]) / (12.0 * h * h)
    return np.moveaxis(d, 0, axis)


def discrete_fundamental_forms(mesh, order=2):
    """Centred-difference ``I`` and ``II`` at the interior vertices.

    ``order`` selects the 3-point (2) or 5-point (4) stencils; the interior
    loses ``order // 2`` vertices on each side.  Returns a dict with ``I`` and
    ``II`` of shape ``(3, nx - order, ny - order)`` in packed order and the
    index slice ``interior``.
    """
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    m = order // 2
    r = mesh.points
    hx = float(mesh.x[1] - mesh.x[0])
    hy = float(mesh.y[1] - mesh.y[0])
    inner = slice(m, -m)
    rx = _d1(r, hx, 0, order)[:, inner]
    ry = _d1(r, hy, 1, order)[inner, :]
    rxx = _d2(r, hx, 0, order)[:, inner]
    ryy = _d2(r, hy, 1, order)[inner, :]
    rxy = _d1(_d1(r, hy, 1, order), hx, 0, order)
    nrm = np.cross(rx, ry)
    nrm = nrm / np.linalg.norm(nrm, axis=-1, keepdims=True)

    def dot(a, b):
        return np.sum(a * b, axis=-1)

    I = np.stack([dot(rx, rx), dot(rx, ry), dot(ry, ry)])
    II = np.stack([dot(rxx, nrm), dot(rxy, nrm), dot(ryy, nrm)])
    return {"I": I, "II": II, "interior": (inner, inner)}


def form_errors(mesh, metric, h_field, order=2):
    """Per-vertex max-norm errors of the discrete forms against the inputs.

    Boundary vertices without a full stencil are NaN.
    """
    forms = discrete_fundamental_forms(mesh, order)
    X, Y = np.meshgrid(mesh.x, mesh.y, indexing="ij")
    hf = _HField(h_field, mesh.x, mesh.y)
    g = metric.components(X, Y)
    root = np.sqrt(g[0] * g[2] - g[1] ** 2)
    II_in = np.stack([root * hf.nodes[0], root * hf.nodes[1], root * hf.nodes[2]])
    sl = (slice(None),) + forms["interior"]
    eI = np.full(X.shape, np.nan)
    eII = np.full(X.shape, np.nan)
    eI[forms["interior"]] = np.max(np.abs(forms["I"] - g[sl]), axis=0)
    eII[forms["interior"]] = np.max(np.abs(forms["II"] - II_in[sl]), axis=0)
    return {"I": eI, "II": eII, "max_I": float(np.nanmax(eI)), "max_II": float(np.nanmax(eII)),
            "order": order}


# ----------------------------------------------------------------------------
# rigid alignment

@dataclass(frozen=True)
class Alignment:
    rotation: np.ndarray
    translation: np.ndarray
    rms: float
    max_error: float
    aligned: np.ndarray


def align_rigid(mesh, reference, rank_tol=1e-12):
    """Least-squares proper rigid motion taking ``mesh`` onto ``reference``.

    Either argument may be a :class:`SurfaceMesh` or an ``(..., 3)`` point
    array.  Kabsch/SVD with the determinant fixed to +1, so a mirrored cloud
    gets the best rotation and a nonzero residual, never a reflection.  A
    collinear or coincident cloud leaves the rotation undetermined and raises
    :class:`DegenerateConfiguration`.
    """
    P = np.asarray(mesh.points if isinstance(mesh, SurfaceMesh) else mesh, float).reshape(-1, 3)
    Q = np.asarray(reference.points if isinstance(reference, SurfaceMesh) else reference, float).reshape(-1, 3)
    if P.shape != Q.shape:
        raise ValueError(f"vertex counts differ: {P.shape[0]} vs {Q.shape[0]}")
    pc, qc = P.mean(axis=0), Q.mean(axis=0)
    H = (P - pc).T @ (Q - qc)
    U, s, Vt = np.linalg.svd(H)
    if s[0] == 0.0 or s[1] <= rank_tol * s[0]:
        raise DegenerateConfiguration(f"cross-covariance has rank < 2 (singular values {s})")
    d = 1.0 if np.linalg.det(Vt.T @ U.T) > 0 else -1.0
    R = Vt.T @ np.diag([1.0, 1.0, d]) @ U.T
    t = qc - R @ pc
    aligned = P @ R.T + t
    err = np.linalg.norm(aligned - Q, axis=1)
    return Alignment(R, t, float(np.sqrt(np.mean(err ** 2))), float(np.max(err)), aligned)


# ----------------------------------------------------------------------------
# export

def write_mesh(mesh, obj_path, sidecar_path=None, errors=None):
    """OBJ of the vertex grid plus an optional JSON sidecar.

    The sidecar holds the mesh metadata and, when ``errors`` (from
    :func:`form_errors`) is given, the per-vertex error norms in the OBJ
    vertex order (``null`` where no stencil fits).
    """
    _io.write_obj(obj_path, mesh.points)
    if sidecar_path is None:
        return
    side = {"metadata": mesh.metadata, "nx": int(mesh.x.size), "ny": int(mesh.y.size),
            "frame_drift": mesh.drift}
    if errors is not None:
        side["order"] = errors["order"]
        side["max_I_error"] = errors["max_I"]
        side["max_II_error"] = errors["max_II"]
        side["I_error"] = errors["I"].ravel()
        side["II_error"] = errors["II"].ravel()
    _io.write_json(sidecar_path, side)
