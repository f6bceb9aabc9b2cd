"""Vanishing-viscosity march of the Codazzi momentum balance laws.

With ``W(U) = (rho u v, rho u^2 + p)`` and ``G(U) = (rho v^2 + p, rho u v)``
the system advanced in the time-like variable ``x`` is::

    d_x W + d_y G = R + eps d_yy W

for the velocity ``U = (u, v)``; density and pressure come from the Bernoulli
relation ``rho = 1/sqrt(q^2 + kappa)``, ``p = -1/rho`` at every evaluation, so
``LN - M^2 = kappa`` holds identically.  Space: conservative central (or
local Lax-Friedrichs) flux differences on a cell-centred y-grid.  Marching:
Heun's method; after each stage the velocity is recovered from ``W`` in closed
form via ``L = (kappa + M^2)/N``.
"""
from dataclasses import dataclass, field
import logging
import math
from typing import Callable, Optional

import numpy as np

from . import fluid_map, kernels
from . import metric as _metric
from .errors import CflViolation, ConstraintViolation, NumericalFailure, SonicDegeneracy

log = logging.getLogger(__name__)

FLUX_SCHEMES = ("central", "llf")


@dataclass(frozen=True)
class Grid1D:
    n: int
    y0: float
    y1: float
    periodic: bool = True

    def __post_init__(self):
        if self.n < 8:
            raise ValueError("Grid1D needs n >= 8 cells")
        if not self.y1 > self.y0:
            raise ValueError("Grid1D needs y1 > y0")

    @property
    def dy(self):
        return (self.y1 - self.y0) / self.n

    @property
    def centers(self):
        return self.y0 + (np.arange(self.n) + 0.5) * self.dy


@dataclass
class SolverConfig:
    epsilon: float = 1e-3
    dx: Optional[float] = None
    cfl_safety: float = 0.4
    flux_scheme: str = "central"
    region_predicate: Optional[Callable] = None
    max_steps: int = 1_000_000
    gauss_tol: float = 1e-10

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if self.flux_scheme not in FLUX_SCHEMES:
            raise ValueError(f"flux_scheme must be one of {FLUX_SCHEMES}")
        if self.dx is not None and not self.dx > 0:
            raise ValueError("dx must be > 0")


@dataclass
class SliceGeometry:
    kappa: np.ndarray
    gam: np.ndarray  # (6, n) packed Christoffel symbols


@dataclass
class SolutionSlice:
    x: float
    u: np.ndarray
    v: np.ndarray
    grid: Grid1D

    def state(self, kappa):
        return fluid_map.state_from_velocity(self.u, self.v, kappa)


@dataclass
class SourceTerms:
    R1: np.ndarray
    R2: np.ndarray


@dataclass
class SolutionField:
    """Gridded solution: rows are x-slices, columns y-cells."""

    x: np.ndarray
    y: np.ndarray
    u: np.ndarray
    v: np.ndarray
    kappa: np.ndarray
    y0: float
    y1: float
    periodic: bool = True

    @property
    def rho(self):
        return 1.0 / np.sqrt(self.u ** 2 + self.v ** 2 + self.kappa)

    @property
    def p(self):
        return -np.sqrt(self.u ** 2 + self.v ** 2 + self.kappa)

    def lmn(self):
        f = fluid_map.fluid_to_lmn(fluid_map.FluidState(self.rho, self.u, self.v, self.p))
        return f.L, f.M, f.N

    def slice(self, j):
        return SolutionSlice(float(self.x[j]), self.u[j].copy(), self.v[j].copy(),
                             Grid1D(self.y.size, self.y0, self.y1, self.periodic))

    def truncated(self, nx):
        return SolutionField(self.x[:nx], self.y, self.u[:nx], self.v[:nx], self.kappa[:nx],
                             self.y0, self.y1, self.periodic)


@dataclass
class Diagnostics:
    steps: int = 0
    restarts: int = 0
    status: str = "ok"
    message: str = ""
    gauss_residual: list = field(default_factory=list)
    cfl: list = field(default_factory=list)
    region_violations: list = field(default_factory=list)
    flux_sums: list = field(default_factory=list)
    weak_codazzi: list = field(default_factory=list)
    entropy: list = field(default_factory=list)

    def as_dict(self):
        return {
            "steps": self.steps,
            "restarts": self.restarts,
            "status": self.status,
            "message": self.message,
            "max_gauss_residual": max(self.gauss_residual, default=0.0),
            "gauss_residual": self.gauss_residual,
            "cfl": self.cfl,
            "region_violations": self.region_violations,
            "flux_sums": self.flux_sums,
            "weak_codazzi": self.weak_codazzi,
            "entropy": self.entropy,
        }


def pack_gamma(gam):
    """Full ``(2, 2, 2, n)`` Christoffel array -> packed ``(6, n)``."""
    return np.stack([gam[0, 0, 0], gam[0, 0, 1], gam[0, 1, 1], gam[1, 0, 0], gam[1, 0, 1], gam[1, 1, 1]])


def slice_geometry(metric, x, y):
    geo = _metric.geometry(metric, np.full_like(y, x), y, curvature=True, strict=False)
    return SliceGeometry(np.ascontiguousarray(geo["kappa"]), np.ascontiguousarray(pack_gamma(geo["gamma"])))


def source_terms(sl, metric):
    """Right-hand sides of the momentum balances at the cells of ``sl``."""
    geo = slice_geometry(metric, sl.x, sl.grid.centers)
    s = sl.state(geo.kappa)
    L = s.rho * s.v ** 2 + s.p
    N = s.rho * s.u ** 2 + s.p
    ruv = s.rho * s.u * s.v
    G = geo.gam
    R1 = -(L * G[5] + 2.0 * ruv * G[4] + N * G[3])
    R2 = -(L * G[2] + 2.0 * ruv * G[1] + N * G[0])
    return SourceTerms(R1, R2)


def conserved(u, v, kappa):
    """The x-fluxes ``(rho u v, rho u^2 + p)``."""
    _, _, w1, w2, _ = kernels.fluxes_np(u, v, kappa)
    return np.stack((w1, w2))


def cfl_bound(u, v, kappa, dy, config):
    """``(bound, lam_max)`` for the combined parabolic/hyperbolic limit."""
    lam = kernels.char_speed(u, v, kappa)
    lam_max = float(np.max(lam))
    parabolic = dy * dy / (2.0 * config.epsilon)
    hyperbolic = dy / lam_max if lam_max > 0 else math.inf
    return config.cfl_safety * min(parabolic, hyperbolic), lam_max, lam


def _check_state(u, v, kappa):
    s = u * u + v * v + kappa
    if np.any(~(s > fluid_map.SONIC_TOL)):
        i = int(np.argmin(s))
        raise SonicDegeneracy(f"cell {i}: q^2 + kappa = {s[i]:.3e} left the Bernoulli domain")


def _recover(W, kappa, x):
    u, v, status = kernels.recover(np.ascontiguousarray(W[0]), np.ascontiguousarray(W[1]), kappa)
    if np.any(status != kernels.OK):
        i = int(np.flatnonzero(status != kernels.OK)[0])
        why = {kernels.SONIC: "q^2 + kappa vanished",
               kernels.CHARACTERISTIC: "N = rho u^2 + p vanished (x-direction characteristic)",
               kernels.NO_ROOT: "no negative pressure root"}[int(status[i])]
        raise SonicDegeneracy(f"x = {x:.6g}, cell {i}: {why}")
    return u, v


def gauss_residual_max(u, v, kappa):
    st = fluid_map.state_from_velocity(u, v, kappa)
    f = fluid_map.fluid_to_lmn(st)
    res = np.abs(f.L * f.N - f.M ** 2 - kappa)
    scale = np.maximum(1.0, np.maximum(np.abs(f.L * f.N), f.M ** 2))
    return float(np.max(res)), float(np.max(res / scale))


def _rhs(u, v, geo, grid, config, forcing, x, lam):
    if config.flux_scheme == "central":
        lam = np.zeros_like(u)
    k = kernels.slice_rhs(u, v, geo.kappa, geo.gam, grid.dy, config.epsilon, grid.periodic, lam)
    if forcing is not None:
        k = k + forcing(x, grid.centers)
    return k


def _advance(sl, dx, config, forcing, geo0, geo1):
    """One Heun step; returns the new velocity."""
    grid = sl.grid
    llf = config.flux_scheme == "llf"
    lam0 = kernels.char_speed(sl.u, sl.v, geo0.kappa) if llf else None
    W0 = conserved(sl.u, sl.v, geo0.kappa)
    K0 = _rhs(sl.u, sl.v, geo0, grid, config, forcing, sl.x, lam0)
    x1 = sl.x + dx
    u1, v1 = _recover(W0 + dx * K0, geo1.kappa, x1)
    _check_state(u1, v1, geo1.kappa)
    lam1 = kernels.char_speed(u1, v1, geo1.kappa) if llf else None
    K1 = _rhs(u1, v1, geo1, grid, config, forcing, x1, lam1)
    return _recover(W0 + (0.5 * dx) * (K0 + K1), geo1.kappa, x1)


def step(sl, config, metric, dx=None, forcing=None):
    """Advance ``sl`` by one step (``dx`` defaults to ``config.dx`` or the CFL bound)."""
    y = sl.grid.centers
    geo0 = slice_geometry(metric, sl.x, y)
    _check_state(sl.u, sl.v, geo0.kappa)
    bound, lam_max, _ = cfl_bound(sl.u, sl.v, geo0.kappa, sl.grid.dy, config)
    if dx is None:
        dx = config.dx if config.dx is not None else bound
    if dx > bound * (1.0 + 1e-12):
        raise CflViolation(f"dx = {dx:.4g} exceeds the CFL bound {bound:.4g} (lambda_max = {lam_max:.4g})")
    geo1 = slice_geometry(metric, sl.x + dx, y)
    u, v = _advance(sl, dx, config, forcing, geo0, geo1)
    return SolutionSlice(sl.x + dx, u, v, sl.grid)


def uniform_step(x0, x_end, bound):
    span = x_end - x0
    nsteps = max(1, int(math.ceil(span / bound - 1e-9)))
    return span / nsteps, nsteps


class _StepTooLarge(CflViolation):
    pass


def run(init, x_end, config, metric, forcing=None, test_functions=None, verify=True, max_restarts=6):
    """March ``init`` to ``x_end``.

    Returns ``(SolutionField, Diagnostics)``.  Steps are uniform so the field
    lives on a tensor grid.  With ``config.dx`` set, that step (shortened so
    an integer number of steps lands on ``x_end``) must satisfy the CFL bound
    at every slice.  Without it the step starts at the CFL bound of the
    initial slice and the march restarts with half the step whenever the
    bound is crossed later on.

    Numerical failures are re-raised with ``.field`` and ``.diagnostics``
    attached, holding everything computed up to the failure.
    """
    grid = init.grid
    y = grid.centers
    u0 = np.asarray(init.u, float).copy()
    v0 = np.asarray(init.v, float).copy()
    geo0 = slice_geometry(metric, init.x, y)
    _check_state(u0, v0, geo0.kappa)
    if config.region_predicate is not None:
        bad = int(np.count_nonzero(~np.asarray(config.region_predicate(u0, v0), bool)))
        if bad:
            raise ValueError(f"initial data violates the invariant-region predicate in {bad} cells")
    bound, lam_max, _ = cfl_bound(u0, v0, geo0.kappa, grid.dy, config)
    if not bound > 0.0:
        # N = 0 somewhere: the x-lines are characteristic and x cannot serve as time
        exc = SonicDegeneracy(f"x = {init.x:.6g}: characteristic speed unbounded "
                              f"(lambda_max = {lam_max}); the x-direction is characteristic")
        diag = Diagnostics(status=type(exc).__name__, message=str(exc))
        exc.field = SolutionField(np.array([init.x]), y.copy(), u0[None], v0[None], geo0.kappa[None],
                                  grid.y0, grid.y1, grid.periodic)
        exc.diagnostics = diag
        raise exc
    target = config.dx if config.dx is not None else bound
    restarts = 0
    while True:
        dx, nsteps = uniform_step(init.x, x_end, target)
        try:
            return _march(init, u0, v0, geo0, dx, nsteps, config, metric, forcing, test_functions, verify,
                          adaptive=config.dx is None and restarts < max_restarts, restarts=restarts)
        except _StepTooLarge:
            restarts += 1
            target = 0.5 * dx
            log.info("CFL bound crossed; restarting the march with dx = %.6g", target)


def _march(init, u0, v0, geo, dx, nsteps, config, metric, forcing, test_functions, verify, adaptive, restarts):
    grid = init.grid
    y = grid.centers
    diag = Diagnostics()
    diag.restarts = restarts
    xs, us, vs, ks = [init.x], [u0], [v0], [geo.kappa]

    def finish():
        fld = SolutionField(np.array(xs), y.copy(), np.array(us), np.array(vs), np.array(ks),
                            grid.y0, grid.y1, grid.periodic)
        if verify and fld.x.size >= 5:
            from . import verify as _verify
            try:
                diag.weak_codazzi = _verify.weak_codazzi_residual(fld, metric, test_functions).tolist()
                diag.entropy = _verify.entropy_production(fld, metric, test_functions)["values"].tolist()
            except Exception as exc:  # diagnostics must never mask the march result
                log.warning("final-field diagnostics failed: %s", exc)
        return fld

    sl = SolutionSlice(init.x, u0, v0, grid)
    try:
        if nsteps > config.max_steps:
            raise CflViolation(f"{nsteps} steps needed, max_steps = {config.max_steps}")
        diag.gauss_residual.append(gauss_residual_max(u0, v0, geo.kappa)[0])
        diag.flux_sums.append(conserved(u0, v0, geo.kappa).sum(axis=1).tolist())
        for j in range(nsteps):
            bound, lam_max, _ = cfl_bound(sl.u, sl.v, geo.kappa, grid.dy, config)
            diag.cfl.append({"x": sl.x, "dx": dx, "lambda_max": lam_max, "bound": bound})
            if dx > bound * (1.0 + 1e-12):
                err = _StepTooLarge if adaptive else CflViolation
                raise err(f"step {j}: dx = {dx:.4g} exceeds the CFL bound {bound:.4g} "
                          f"(lambda_max = {lam_max:.4g})")
            x1 = init.x + (j + 1) * dx
            geo1 = slice_geometry(metric, x1, y)
            u, v = _advance(sl, x1 - sl.x, config, forcing, geo, geo1)
            _check_state(u, v, geo1.kappa)
            g_abs, g_rel = gauss_residual_max(u, v, geo1.kappa)
            diag.gauss_residual.append(g_abs)
            if g_rel > config.gauss_tol:
                raise ConstraintViolation(f"step {j}: Gauss residual {g_abs:.3e} exceeds {config.gauss_tol}")
            sl = SolutionSlice(x1, u, v, grid)
            geo = geo1
            xs.append(x1)
            us.append(u)
            vs.append(v)
            ks.append(geo1.kappa)
            diag.flux_sums.append(conserved(u, v, geo1.kappa).sum(axis=1).tolist())
            diag.steps = j + 1
            if config.region_predicate is not None:
                bad = int(np.count_nonzero(~np.asarray(config.region_predicate(u, v), bool)))
                if bad:
                    diag.region_violations.append({"step": j + 1, "x": x1, "cells": bad})
                    log.warning("x = %.6g: %d cells outside the invariant region", x1, bad)
    except _StepTooLarge:
        raise
    except NumericalFailure as exc:
        diag.status = type(exc).__name__
        diag.message = str(exc)
        exc.field = finish()
        exc.diagnostics = diag
        raise
    return finish(), diag
