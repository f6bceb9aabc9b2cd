import math

import numpy as np
import pytest
import sympy as sp

from gcflow import exact, kernels, solver as S
from gcflow import metric as gm
from gcflow.errors import CflViolation, SonicDegeneracy

SQ2 = math.sqrt(2.0)


# ----------------------------------------------------------------------------
# manufactured solution on the catenoid chart
#
# Geometry written out by hand for g = cosh^2 x (dx^2 + dy^2):
# kappa = -sech^4 x, Gamma^1_11 = Gamma^2_12 = tanh x, Gamma^1_22 = -tanh x.
# Hence R1 = -2 rho u v tanh x and R2 = (L - N) tanh x.

_x, _y = sp.symbols("x y", real=True)
_eps = sp.Symbol("eps", positive=True)
_U = sp.sqrt(2) / sp.cosh(_x) ** 2 * (1 + sp.Rational(1, 10) * sp.sin(_y) * sp.cos(_x))
_V = sp.Rational(1, 10) * sp.cos(_y) / sp.cosh(_x)
_K = -1 / sp.cosh(_x) ** 4
_root = sp.sqrt(_U ** 2 + _V ** 2 + _K)
_rho, _p = 1 / _root, -_root
_L = _rho * _V ** 2 + _p
_N = _rho * _U ** 2 + _p
_W = (_rho * _U * _V, _N)
_G = (_L, _rho * _U * _V)
_R = (-2 * _rho * _U * _V * sp.tanh(_x), (_L - _N) * sp.tanh(_x))
_F = [sp.diff(_W[k], _x) + sp.diff(_G[k], _y) - _R[k] - _eps * sp.diff(_W[k], _y, 2) for k in range(2)]
_f_forcing = sp.lambdify((_x, _y, _eps), _F, "numpy")
_f_wx = sp.lambdify((_x, _y), [sp.diff(w, _x) for w in _W], "numpy")
_f_uv = sp.lambdify((_x, _y), [_U, _V], "numpy")


def mms_forcing(eps):
    def forcing(x, y):
        return np.array([np.broadcast_to(a, y.shape) for a in _f_forcing(x, y, eps)])
    return forcing


def mms_slice(x, n):
    g = S.Grid1D(n, 0.0, 2 * math.pi)
    u, v = _f_uv(x, g.centers)
    return S.SolutionSlice(x, np.asarray(u, float), np.asarray(v, float), g)


def test_mms_local_truncation(catenoid):
    eps = 1e-2
    x = 0.3
    errs = []
    for n in (32, 64, 128, 256):
        sl = mms_slice(x, n)
        geo = S.slice_geometry(catenoid, x, sl.grid.centers)
        cfg = S.SolverConfig(epsilon=eps)
        k = S._rhs(sl.u, sl.v, geo, sl.grid, cfg, mms_forcing(eps), x, None)
        wx = np.array(_f_wx(x, sl.grid.centers))
        errs.append(np.max(np.abs(k - wx)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.9), (errs, orders)


def test_mms_global(catenoid):
    eps = 1e-2
    errs = []
    for n in (32, 64, 128):
        f, d = S.run(mms_slice(0.0, n), 0.5, S.SolverConfig(epsilon=eps), catenoid,
                     forcing=mms_forcing(eps), verify=False)
        u, v = _f_uv(0.5, f.y)
        errs.append(max(np.max(np.abs(f.u[-1] - u)), np.max(np.abs(f.v[-1] - v))))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.0), (errs, orders)
    assert errs[-1] < 1e-3


# ----------------------------------------------------------------------------
# sources

def test_source_terms_flat_zero(flat):
    g = S.Grid1D(16, 0, 2 * math.pi)
    sl = S.SolutionSlice(0.3, 2 + 0.1 * np.sin(g.centers), 0.5 + 0 * g.centers, g)
    st = S.source_terms(sl, flat)
    assert np.all(st.R1 == 0) and np.all(st.R2 == 0)


@pytest.mark.parametrize("x", [0.0, 1.0])
def test_source_terms_catenoid(catenoid, x):
    g = S.Grid1D(16, 0, 2 * math.pi)
    u, v = exact.catenoid_velocity(np.full(16, x), g.centers)
    st = S.source_terms(S.SolutionSlice(x, u, v, g), catenoid)
    # independent re-evaluation of the displayed formulas
    kap = -1 / math.cosh(x) ** 4
    root = np.sqrt(u * u + v * v + kap)
    rho, p = 1 / root, -root
    L, N, ruv = rho * v * v + p, rho * u * u + p, rho * u * v
    t = math.tanh(x)
    R1 = -(L * 0 + 2 * ruv * t + N * 0)
    R2 = -(L * -t + 2 * ruv * 0 + N * t)
    assert np.allclose(st.R1, R1, rtol=0, atol=1e-14)
    assert np.allclose(st.R2, R2, rtol=0, atol=1e-14)
    if x == 0.0:
        assert np.all(np.abs(st.R2) <= 1e-15)


# ----------------------------------------------------------------------------
# conservation and fixed points

def test_flat_conservation(flat):
    g = S.Grid1D(64, 0, 2 * math.pi)
    y = g.centers
    sl = S.SolutionSlice(0.0, 2 + 0.1 * np.sin(y), 1.0 + 0.1 * np.cos(2 * y), g)
    f, d = S.run(sl, 0.5, S.SolverConfig(epsilon=2e-2, dx=5e-4), flat, verify=False)
    assert d.steps == 1000
    sums = np.array(d.flux_sums)
    W = S.conserved(f.u, f.v, f.kappa)
    scale = np.sum(np.abs(W[:, 0]), axis=-1)
    drift = np.max(np.abs(np.diff(sums, axis=0)) / scale)
    assert drift <= 1e-13
    assert np.max(np.abs(sums[-1] - sums[0]) / scale) <= 1e-12


@pytest.mark.parametrize("scheme", ["central", "llf"])
def test_constant_state_fixed_point(flat, scheme):
    g = S.Grid1D(32, 0, 1)
    sl = S.SolutionSlice(0.0, np.full(32, 2.0), np.full(32, 0.5), g)
    f, d = S.run(sl, 0.1, S.SolverConfig(epsilon=1e-3, dx=2e-3, flux_scheme=scheme), flat)
    # the closed-form recovery may land a few ulps off, but never drifts
    assert np.max(np.abs(f.u - 2.0)) <= 4 * np.spacing(2.0)
    assert np.max(np.abs(f.v - 0.5)) <= 4 * np.spacing(0.5)
    assert np.array_equal(f.u[-1], f.u[len(f.x) // 2])
    assert np.max(d.gauss_residual) <= 1e-15
    assert np.max(np.abs(d.weak_codazzi)) <= 1e-15
    assert np.max(np.abs(d.entropy)) <= 1e-15


# ----------------------------------------------------------------------------
# exact catenoid family

def test_single_step(catenoid):
    g = S.Grid1D(256, 0, 2 * math.pi)
    u0, v0 = exact.catenoid_velocity(np.zeros(256), g.centers)
    dx = eps = 1e-3
    out = S.step(S.SolutionSlice(0.0, u0, v0, g), S.SolverConfig(epsilon=eps), catenoid, dx=dx)
    u1, v1 = exact.catenoid_velocity(np.full(256, dx), g.centers)
    err = max(np.max(np.abs(out.u - u1)), np.max(np.abs(out.v - v1)))
    assert err <= dx * dx + eps * dx


@pytest.mark.parametrize("scheme", ["central", "llf"])
def test_exact_catenoid_convergence(catenoid, scheme):
    errs = []
    for n, eps in ((64, 4e-3), (128, 2e-3), (256, 1e-3)):
        g = S.Grid1D(n, 0, 2 * math.pi)
        u0, v0 = exact.catenoid_velocity(np.zeros(n), g.centers)
        f, d = S.run(S.SolutionSlice(0.0, u0, v0, g), 1.0,
                     S.SolverConfig(epsilon=eps, dx=1.28 / n, flux_scheme=scheme), catenoid, verify=False)
        ue, ve = exact.catenoid_velocity(*np.meshgrid(f.x, f.y, indexing="ij"))
        errs.append(max(np.max(np.abs(f.u - ue)), np.max(np.abs(f.v - ve))))
        assert max(d.gauss_residual) <= 1e-10
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.0), (errs, orders)


# ----------------------------------------------------------------------------
# failures and diagnostics

def test_cfl_violation(catenoid):
    g = S.Grid1D(64, 0, 2 * math.pi)
    u0, v0 = exact.catenoid_velocity(np.zeros(64), g.centers)
    with pytest.raises(CflViolation) as ei:
        S.run(S.SolutionSlice(0.0, u0, v0, g), 1.0, S.SolverConfig(dx=0.5), catenoid)
    assert ei.value.diagnostics.status == "CflViolation"
    assert ei.value.field.x.size == 1


def test_helicoid_is_characteristic(helicoid):
    g = S.Grid1D(32, -1, 1, periodic=False)
    u0, v0 = exact.helicoid_velocity(np.zeros(32), g.centers)
    with pytest.raises(SonicDegeneracy, match="characteristic"):
        S.run(S.SolutionSlice(0.0, u0, v0, g), 1.0, S.SolverConfig(), helicoid)


def test_sonic_initial_data(catenoid):
    g = S.Grid1D(16, 0, 2 * math.pi)
    with pytest.raises(SonicDegeneracy):
        S.run(S.SolutionSlice(0.0, np.full(16, 1.0), np.zeros(16), g), 1.0, S.SolverConfig(), catenoid)


def test_auto_step_restarts(catenoid):
    g = S.Grid1D(64, 0, 2 * math.pi)
    y = g.centers
    u0 = SQ2 * (1 + 0.2 * np.cos(y))
    v0 = 0.2 * np.sin(2 * y)
    f, d = S.run(S.SolutionSlice(0.0, u0, v0, g), 1.0, S.SolverConfig(epsilon=1e-2), catenoid, verify=False)
    assert d.restarts >= 1 and f.x[-1] == pytest.approx(1.0)
    assert np.allclose(np.diff(f.x), f.x[1] - f.x[0], rtol=1e-9, atol=0)
    assert all(c["dx"] <= c["bound"] for c in d.cfl)


def test_fixed_step_too_large_is_fatal(catenoid):
    g = S.Grid1D(64, 0, 2 * math.pi)
    y = g.centers
    u0 = SQ2 * (1 + 0.2 * np.cos(y))
    v0 = 0.2 * np.sin(2 * y)
    with pytest.raises(CflViolation):
        S.run(S.SolutionSlice(0.0, u0, v0, g), 1.0, S.SolverConfig(epsilon=1e-2, dx=1 / 64), catenoid)


def test_region_violations_recorded(catenoid):
    g = S.Grid1D(32, 0, 2 * math.pi)
    u0, v0 = exact.catenoid_velocity(np.zeros(32), g.centers)
    cfg = S.SolverConfig(region_predicate=lambda u, v: u >= 1.2)
    f, d = S.run(S.SolutionSlice(0.0, u0, v0, g), 1.0, cfg, catenoid, verify=False)
    assert d.status == "ok" and d.region_violations
    first = d.region_violations[0]
    assert np.sqrt(2) / np.cosh(first["x"]) ** 2 < 1.2
    with pytest.raises(ValueError):
        S.run(S.SolutionSlice(0.0, u0, v0, g), 1.0, S.SolverConfig(region_predicate=lambda u, v: u > 5), catenoid)


def test_repeatable(catenoid):
    g = S.Grid1D(64, 0, 2 * math.pi)
    y = g.centers
    sl = S.SolutionSlice(0.0, SQ2 * (1 + 0.05 * np.cos(y)), 0.05 * np.sin(2 * y), g)
    a, da = S.run(sl, 0.5, S.SolverConfig(epsilon=1e-2), catenoid)
    b, db = S.run(sl, 0.5, S.SolverConfig(epsilon=1e-2), catenoid)
    assert np.array_equal(a.u, b.u) and np.array_equal(a.v, b.v)
    assert da.as_dict() == db.as_dict()


def test_config_validation():
    for kw in ({"epsilon": 0}, {"cfl_safety": 0}, {"cfl_safety": 1.5}, {"flux_scheme": "upwind"}, {"dx": -1}):
        with pytest.raises(ValueError):
            S.SolverConfig(**kw)
    with pytest.raises(ValueError):
        S.Grid1D(4, 0, 1)
    with pytest.raises(ValueError):
        S.Grid1D(8, 1, 0)


def test_recover_status_codes():
    # N = 0 is characteristic, q^2 + kappa <= 0 is sonic
    w1 = np.array([0.0, 0.5])
    w2 = np.array([0.0, 1.0])
    u, v, status = kernels.recover_np(w1, w2, np.array([-1.0, -1.0]))
    assert status[0] == kernels.CHARACTERISTIC
    assert status[1] == kernels.OK
