"""Hot loops of the marching solver and of the frame integrator.

Every kernel exists twice: an explicit-loop version compiled with numba
(``*_nb``) and a vectorised numpy version (``*_np``).  The public names
(``slice_rhs``, ``recover``, ``char_speed``, ``frame_sweep``) point at the numba
versions unless numba is unavailable or ``GCFLOW_DISABLE_NUMBA`` is set.

Conventions
-----------
Per-cell Christoffel symbols are packed as ``gam[6, n]`` in the order
``G1_11, G1_12, G1_22, G2_11, G2_12, G2_22`` (``Gk_ij`` = Gamma^(k)_ij).
The conserved x-fluxes are ``W = (rho u v, rho u^2 + p)``, the y-fluxes
``G = (rho v^2 + p, rho u v)``.

Recovery status codes: 0 ok, 1 sonic (q^2 + kappa <= tol), 2 characteristic
(N = rho u^2 + p vanishes), 3 no negative pressure root.
"""
import math

import numpy as np

from . import _accel
from ._accel import njit, prange
from .fluid_map import SONIC_TOL, _velocity, pressure_root

N_TOL = 1e-12
OK, SONIC, CHARACTERISTIC, NO_ROOT = 0, 1, 2, 3


# ----------------------------------------------------------------------------
# numpy versions

def fluxes_np(u, v, kappa):
    s = u * u + v * v + kappa
    root = np.sqrt(s)
    rho = 1.0 / root
    p = -root
    w1 = rho * u * v
    w2 = rho * u * u + p
    g1 = rho * v * v + p
    return rho, p, w1, w2, g1


def _pad(a, periodic):
    if periodic:
        return np.concatenate((a[-1:], a, a[:1]))
    return np.concatenate((a[:1], a, a[-1:]))


def slice_rhs_np(u, v, kappa, gam, dy, eps, periodic, lam):
    """x-derivative of the conserved fluxes for one slice.

    ``lam`` holds per-cell wave-speed bounds for local Lax-Friedrichs; pass an
    all-zero array for the plain central flux.
    """
    rho, p, w1, w2, g1 = fluxes_np(u, v, kappa)
    r1 = -(g1 * gam[5] + 2.0 * w1 * gam[4] + w2 * gam[3])
    r2 = -(g1 * gam[2] + 2.0 * w1 * gam[1] + w2 * gam[0])
    W1, W2, G1, LM = (_pad(a, periodic) for a in (w1, w2, g1, lam))
    alpha = np.maximum(LM[:-1], LM[1:])
    f1 = 0.5 * (G1[:-1] + G1[1:]) - 0.5 * alpha * (W1[1:] - W1[:-1])
    f2 = 0.5 * (W1[:-1] + W1[1:]) - 0.5 * alpha * (W2[1:] - W2[:-1])
    inv_dy = 1.0 / dy
    visc = eps * inv_dy * inv_dy
    k1 = -(f1[1:] - f1[:-1]) * inv_dy + r1 + visc * (W1[2:] - 2.0 * w1 + W1[:-2])
    k2 = -(f2[1:] - f2[:-1]) * inv_dy + r2 + visc * (W2[2:] - 2.0 * w2 + W2[:-2])
    return np.stack((k1, k2))


def recover_np(w1, w2, kappa):
    """Velocity ``(u, v)`` from the conserved fluxes and the curvature."""
    M = -w1
    N = w2
    status = np.zeros(w1.shape, dtype=np.int64)
    bad_n = ~(np.abs(N) > N_TOL)
    Ns = np.where(bad_n, 1.0, N)
    L = (kappa + M * M) / Ns
    p = pressure_root(L, M, Ns, kappa)
    no_root = ~(p < 0.0)
    sonic = ~(p * p > SONIC_TOL)
    ps = np.where(no_root | sonic, -1.0, p)
    u, v = _velocity(L, M, Ns, ps)
    status[sonic] = SONIC
    status[no_root] = NO_ROOT
    status[bad_n] = CHARACTERISTIC
    return u, v, status


def _jacobian_pair_np(u, v, kappa):
    hu = 1e-7 * np.maximum(1.0, np.abs(u) + np.abs(v))
    out = []
    for du, dv in ((hu, 0.0), (0.0, hu)):
        _, _, a1, a2, b1 = fluxes_np(u + du, v + dv, kappa)
        _, _, c1, c2, d1 = fluxes_np(u - du, v - dv, kappa)
        out.append(((a1 - c1) / (2 * hu), (a2 - c2) / (2 * hu), (b1 - d1) / (2 * hu), (a1 - c1) / (2 * hu)))
    (Au1, Au2, Bu1, Bu2), (Av1, Av2, Bv1, Bv2) = out
    return (Au1, Av1, Au2, Av2), (Bu1, Bv1, Bu2, Bv2)


def char_speed_np(u, v, kappa):
    """Spectral radius of ``A^-1 B`` (A, B: flux Jacobians by central FD)."""
    (a11, a12, a21, a22), (b11, b12, b21, b22) = _jacobian_pair_np(u, v, kappa)
    det_a = a11 * a22 - a12 * a21
    scale = np.abs(a11) + np.abs(a12) + np.abs(a21) + np.abs(a22)
    ok = np.abs(det_a) > 1e-10 * scale * scale
    det_a = np.where(ok, det_a, 1.0)
    c11 = (a22 * b11 - a12 * b21) / det_a
    c12 = (a22 * b12 - a12 * b22) / det_a
    c21 = (-a21 * b11 + a11 * b21) / det_a
    c22 = (-a21 * b12 + a11 * b22) / det_a
    tr = c11 + c22
    det = c11 * c22 - c12 * c21
    disc = 0.25 * tr * tr - det
    lam = np.where(disc >= 0.0, 0.5 * np.abs(tr) + np.sqrt(np.abs(disc)), np.sqrt(np.abs(det)))
    return np.where(ok, lam, np.inf)


def _project_np(S, g):
    """Re-project frames ``S[..., 3, 3]`` (rows t1, t2, n) onto Gram ``g``."""
    t1, t2 = S[..., 0, :], S[..., 1, :]
    a = t1 / np.linalg.norm(t1, axis=-1, keepdims=True)
    b = t2 - np.sum(t2 * a, axis=-1, keepdims=True) * a
    b = b / np.linalg.norm(b, axis=-1, keepdims=True)
    s11 = np.sqrt(g[..., 0])[..., None]
    det = (g[..., 0] * g[..., 2] - g[..., 1] ** 2)[..., None]
    out = np.empty_like(S)
    out[..., 0, :] = s11 * a
    out[..., 1, :] = (g[..., 1][..., None] / s11) * a + np.sqrt(det / s11 ** 2) * b
    out[..., 2, :] = np.cross(a, b)
    return out


def _drift_np(S, g):
    t1, t2, n = S[..., 0, :], S[..., 1, :], S[..., 2, :]
    d = np.stack([
        np.abs(np.sum(t1 * t1, -1) - g[..., 0]),
        np.abs(np.sum(t1 * t2, -1) - g[..., 1]),
        np.abs(np.sum(t2 * t2, -1) - g[..., 2]),
        np.abs(np.sum(n * t1, -1)),
        np.abs(np.sum(n * t2, -1)),
        np.abs(np.sqrt(np.sum(n * n, -1)) - 1.0),
    ])
    return d.max(axis=0)


def frame_sweep_np(A0, Am, A1, h, S0, r0, gram, axis, project):
    """RK4 for the linear frame system ``S' = A S``, ``r' = S[axis]``.

    Shapes: ``A*`` (ncol, nstep, 3, 3); ``h`` (nstep,); ``S0`` (ncol, 3, 3);
    ``r0`` (ncol, 3); ``gram`` (ncol, nstep, 3) target Gram at step ends.
    Returns ``S`` (ncol, nstep+1, 3, 3), ``r`` (ncol, nstep+1, 3) and the
    per-column maximum pre-projection drift.
    """
    ncol, nstep = A0.shape[:2]
    S = np.empty((ncol, nstep + 1, 3, 3))
    r = np.empty((ncol, nstep + 1, 3))
    S[:, 0] = S0
    r[:, 0] = r0
    drift = np.zeros(ncol)
    cur, pos = S0.copy(), r0.copy()
    for j in range(nstep):
        hj = h[j]
        k1 = A0[:, j] @ cur
        s2 = cur + 0.5 * hj * k1
        k2 = Am[:, j] @ s2
        s3 = cur + 0.5 * hj * k2
        k3 = Am[:, j] @ s3
        s4 = cur + hj * k3
        k4 = A1[:, j] @ s4
        nxt = cur + (hj / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        pos = pos + (hj / 6.0) * (cur[:, axis] + 2.0 * s2[:, axis] + 2.0 * s3[:, axis] + s4[:, axis])
        drift = np.maximum(drift, _drift_np(nxt, gram[:, j]))
        if project:
            nxt = _project_np(nxt, gram[:, j])
        S[:, j + 1] = nxt
        r[:, j + 1] = pos
        cur = nxt
    return S, r, drift


# ----------------------------------------------------------------------------
# numba versions

@njit()
def _fluxes_nb(u, v, kappa):
    root = math.sqrt(u * u + v * v + kappa)
    rho = 1.0 / root
    p = -root
    return rho * u * v, rho * u * u + p, rho * v * v + p


@njit()
def _wrap(i, n, periodic):
    if i < 0:
        return n - 1 if periodic else 0
    if i >= n:
        return 0 if periodic else n - 1
    return i


@njit(parallel=True)
def slice_rhs_nb(u, v, kappa, gam, dy, eps, periodic, lam):
    n = u.shape[0]
    w1 = np.empty(n)
    w2 = np.empty(n)
    g1 = np.empty(n)
    out = np.empty((2, n))
    for i in prange(n):
        w1[i], w2[i], g1[i] = _fluxes_nb(u[i], v[i], kappa[i])
    f1 = np.empty(n + 1)
    f2 = np.empty(n + 1)
    for f in range(n + 1):
        # face f sits between cells f-1 and f
        il = _wrap(f - 1, n, periodic)
        ir = _wrap(f, n, periodic)
        alpha = max(lam[il], lam[ir])
        f1[f] = 0.5 * (g1[il] + g1[ir]) - 0.5 * alpha * (w1[ir] - w1[il])
        f2[f] = 0.5 * (w1[il] + w1[ir]) - 0.5 * alpha * (w2[ir] - w2[il])
    inv_dy = 1.0 / dy
    visc = eps * inv_dy * inv_dy
    for i in prange(n):
        im = _wrap(i - 1, n, periodic)
        ip = _wrap(i + 1, n, periodic)
        r1 = -(g1[i] * gam[5, i] + 2.0 * w1[i] * gam[4, i] + w2[i] * gam[3, i])
        r2 = -(g1[i] * gam[2, i] + 2.0 * w1[i] * gam[1, i] + w2[i] * gam[0, i])
        out[0, i] = -(f1[i + 1] - f1[i]) * inv_dy + r1 + visc * (w1[ip] - 2.0 * w1[i] + w1[im])
        out[1, i] = -(f2[i + 1] - f2[i]) * inv_dy + r2 + visc * (w2[ip] - 2.0 * w2[i] + w2[im])
    return out


@njit()
def _recover_cell_nb(w1, w2, kappa):
    M = -w1
    N = w2
    if not abs(N) > N_TOL:
        return 0.0, 0.0, CHARACTERISTIC
    L = (kappa + M * M) / N
    trace = L + N
    disc = math.sqrt((L - N) ** 2 + 4.0 * M * M)
    if trace > 0.0:
        p = kappa / (0.5 * (trace + disc))
    else:
        p = 0.5 * (trace - disc)
    if not p < 0.0:
        return 0.0, 0.0, NO_ROOT
    if not p * p > SONIC_TOL:
        return 0.0, 0.0, SONIC
    u2 = max(p * (p - N), 0.0)
    v2 = max(p * (p - L), 0.0)
    mp = abs(M * p)
    if u2 >= v2:
        u = math.sqrt(u2)
        vm = mp / u if u > 0.0 else 0.0
    else:
        vm = math.sqrt(v2)
        u = mp / vm if vm > 0.0 else 0.0
    v = -vm if (M > 0.0 and u != 0.0) else vm
    return u, v, OK


@njit(parallel=True)
def recover_nb(w1, w2, kappa):
    n = w1.shape[0]
    u = np.empty(n)
    v = np.empty(n)
    status = np.empty(n, dtype=np.int64)
    for i in prange(n):
        u[i], v[i], status[i] = _recover_cell_nb(w1[i], w2[i], kappa[i])
    return u, v, status


@njit(parallel=True)
def char_speed_nb(u, v, kappa):
    n = u.shape[0]
    out = np.empty(n)
    for i in prange(n):
        h = 1e-7 * max(1.0, abs(u[i]) + abs(v[i]))
        a1p, a2p, b1p = _fluxes_nb(u[i] + h, v[i], kappa[i])
        a1m, a2m, b1m = _fluxes_nb(u[i] - h, v[i], kappa[i])
        a11 = (a1p - a1m) / (2 * h)
        a21 = (a2p - a2m) / (2 * h)
        b11 = (b1p - b1m) / (2 * h)
        b21 = a11
        a1p, a2p, b1p = _fluxes_nb(u[i], v[i] + h, kappa[i])
        a1m, a2m, b1m = _fluxes_nb(u[i], v[i] - h, kappa[i])
        a12 = (a1p - a1m) / (2 * h)
        a22 = (a2p - a2m) / (2 * h)
        b12 = (b1p - b1m) / (2 * h)
        b22 = a12
        det_a = a11 * a22 - a12 * a21
        scale = abs(a11) + abs(a12) + abs(a21) + abs(a22)
        if not abs(det_a) > 1e-10 * scale * scale:
            out[i] = np.inf
            continue
        c11 = (a22 * b11 - a12 * b21) / det_a
        c12 = (a22 * b12 - a12 * b22) / det_a
        c21 = (-a21 * b11 + a11 * b21) / det_a
        c22 = (-a21 * b12 + a11 * b22) / det_a
        tr = c11 + c22
        det = c11 * c22 - c12 * c21
        disc = 0.25 * tr * tr - det
        if disc >= 0.0:
            out[i] = 0.5 * abs(tr) + math.sqrt(abs(disc))
        else:
            out[i] = math.sqrt(abs(det))
    return out


@njit()
def _matmul3(A, S, out):
    for a in range(3):
        for c in range(3):
            acc = 0.0
            for b in range(3):
                acc += A[a, b] * S[b, c]
            out[a, c] = acc


@njit()
def _project_nb(S, g11, g12, g22):
    n1 = math.sqrt(S[0, 0] ** 2 + S[0, 1] ** 2 + S[0, 2] ** 2)
    a0, a1, a2 = S[0, 0] / n1, S[0, 1] / n1, S[0, 2] / n1
    d = S[1, 0] * a0 + S[1, 1] * a1 + S[1, 2] * a2
    b0, b1, b2 = S[1, 0] - d * a0, S[1, 1] - d * a1, S[1, 2] - d * a2
    nb = math.sqrt(b0 * b0 + b1 * b1 + b2 * b2)
    b0, b1, b2 = b0 / nb, b1 / nb, b2 / nb
    s11 = math.sqrt(g11)
    ca = g12 / s11
    cb = math.sqrt((g11 * g22 - g12 * g12) / (s11 * s11))
    S[0, 0], S[0, 1], S[0, 2] = s11 * a0, s11 * a1, s11 * a2
    S[1, 0], S[1, 1], S[1, 2] = ca * a0 + cb * b0, ca * a1 + cb * b1, ca * a2 + cb * b2
    S[2, 0] = a1 * b2 - a2 * b1
    S[2, 1] = a2 * b0 - a0 * b2
    S[2, 2] = a0 * b1 - a1 * b0


@njit()
def _drift_nb(S, g11, g12, g22):
    t11 = S[0, 0] ** 2 + S[0, 1] ** 2 + S[0, 2] ** 2
    t12 = S[0, 0] * S[1, 0] + S[0, 1] * S[1, 1] + S[0, 2] * S[1, 2]
    t22 = S[1, 0] ** 2 + S[1, 1] ** 2 + S[1, 2] ** 2
    n1 = S[2, 0] * S[0, 0] + S[2, 1] * S[0, 1] + S[2, 2] * S[0, 2]
    n2 = S[2, 0] * S[1, 0] + S[2, 1] * S[1, 1] + S[2, 2] * S[1, 2]
    nn = math.sqrt(S[2, 0] ** 2 + S[2, 1] ** 2 + S[2, 2] ** 2)
    return max(abs(t11 - g11), abs(t12 - g12), abs(t22 - g22), abs(n1), abs(n2), abs(nn - 1.0))


@njit(parallel=True)
def frame_sweep_nb(A0, Am, A1, h, S0, r0, gram, axis, project):
    ncol, nstep = A0.shape[0], A0.shape[1]
    S = np.empty((ncol, nstep + 1, 3, 3))
    r = np.empty((ncol, nstep + 1, 3))
    drift = np.zeros(ncol)
    for c in prange(ncol):
        cur = S0[c].copy()
        pos = r0[c].copy()
        k1 = np.empty((3, 3))
        k2 = np.empty((3, 3))
        k3 = np.empty((3, 3))
        k4 = np.empty((3, 3))
        s2 = np.empty((3, 3))
        s3 = np.empty((3, 3))
        s4 = np.empty((3, 3))
        S[c, 0] = cur
        r[c, 0] = pos
        for j in range(nstep):
            hj = h[j]
            _matmul3(A0[c, j], cur, k1)
            for a in range(3):
                for b in range(3):
                    s2[a, b] = cur[a, b] + 0.5 * hj * k1[a, b]
            _matmul3(Am[c, j], s2, k2)
            for a in range(3):
                for b in range(3):
                    s3[a, b] = cur[a, b] + 0.5 * hj * k2[a, b]
            _matmul3(Am[c, j], s3, k3)
            for a in range(3):
                for b in range(3):
                    s4[a, b] = cur[a, b] + hj * k3[a, b]
            _matmul3(A1[c, j], s4, k4)
            for b in range(3):
                pos[b] = pos[b] + (hj / 6.0) * (cur[axis, b] + 2.0 * s2[axis, b] + 2.0 * s3[axis, b] + s4[axis, b])
            for a in range(3):
                for b in range(3):
                    cur[a, b] = cur[a, b] + (hj / 6.0) * (k1[a, b] + 2.0 * k2[a, b] + 2.0 * k3[a, b] + k4[a, b])
            g11, g12, g22 = gram[c, j, 0], gram[c, j, 1], gram[c, j, 2]
            d = _drift_nb(cur, g11, g12, g22)
            if d > drift[c]:
                drift[c] = d
            if project:
                _project_nb(cur, g11, g12, g22)
            S[c, j + 1] = cur
            r[c, j + 1] = pos
    return S, r, drift


# ----------------------------------------------------------------------------
# dispatch

if _accel.USE_NUMBA:
    slice_rhs = slice_rhs_nb
    recover = recover_nb
    char_speed = char_speed_nb
    frame_sweep = frame_sweep_nb
else:
    slice_rhs = slice_rhs_np
    recover = recover_np
    char_speed = char_speed_np
    frame_sweep = frame_sweep_np

BACKEND = "numba" if _accel.USE_NUMBA else "numpy"
