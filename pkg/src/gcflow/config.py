"""Run configuration: JSON with ``"schema": 1``.

Example (every key except ``schema`` and ``metric`` is optional)::

    {
      "schema": 1,
      "metric": {"builtin": "catenoid"},
      "march": {"x0": 0.0, "x1": 1.0},
      "grid": {"n": 256},
      "solver": {"epsilon": 1e-3, "cfl_safety": 0.4, "dx": null,
                 "flux_scheme": "central",
                 "region": {"kind": "box", "u": [0, 3], "v": [-1, 1]}},
      "initial": {"kind": "exact-catenoid"},
      "reconstruct": {"forms_order": 4},
      "output": "out",
      "seed": 0
    }

``metric`` may instead be ``{"expressions": {"g11": ..., "g12": ..., "g22": ...},
"domain": [x0, x1, y0, y1], "periodic": false}`` or ``{"csv": path}``.
``initial.kind`` is one of ``exact-catenoid``, ``exact-helicoid``,
``expression`` (keys ``u``, ``v`` in ``y``), ``csv`` (key ``path``, columns
``y,u,v``) and ``perturbed-catenoid`` (keys ``amplitude``, ``modes``; random
phases drawn from ``seed``).  Relative paths resolve against the config file.
"""
from dataclasses import dataclass, field
import json
import math
import os
from typing import Optional

import numpy as np

from .errors import ConfigError

SCHEMA = 1
DEFAULT_N = 256
DEFAULT_EPSILON = 1e-3
DEFAULT_CFL = 0.4
INITIAL_KINDS = ("exact-catenoid", "exact-helicoid", "expression", "csv", "perturbed-catenoid")
REGION_KINDS = ("box", "diamond")


@dataclass(frozen=True)
class RunConfig:
    metric: dict
    initial: dict
    x0: Optional[float] = None
    x1: Optional[float] = None
    n: int = DEFAULT_N
    epsilon: float = DEFAULT_EPSILON
    cfl_safety: float = DEFAULT_CFL
    dx: Optional[float] = None
    flux_scheme: str = "central"
    max_steps: int = 1_000_000
    region: Optional[dict] = None
    forms_order: int = 4
    output: str = "out"
    seed: int = 0
    base_dir: str = "."
    raw: dict = field(default_factory=dict, compare=False)

    # -- builders ---------------------------------------------------------
    def build_metric(self):
        from . import metric as gm

        m = self.metric
        if "builtin" in m:
            return gm.builtin_metric(m["builtin"])
        if "expressions" in m:
            e = m["expressions"]
            x0, x1, y0, y1 = m["domain"]
            return gm.from_expressions(e["g11"], e.get("g12", "0"), e["g22"], x0, x1, y0, y1,
                                       periodic=bool(m.get("periodic", False)))
        return gm.load_csv(self.resolve(m["csv"]), periodic=bool(m.get("periodic", False)))

    def march_range(self, metric):
        x0 = metric.x0 if self.x0 is None else self.x0
        x1 = metric.x1 if self.x1 is None else self.x1
        return x0, x1

    def solver_config(self):
        from .solver import SolverConfig

        return SolverConfig(epsilon=self.epsilon, dx=self.dx, cfl_safety=self.cfl_safety,
                            flux_scheme=self.flux_scheme, region_predicate=region_predicate(self.region),
                            max_steps=self.max_steps)

    def initial_slice(self, metric):
        from . import expr, exact
        from .solver import Grid1D, SolutionSlice

        grid = Grid1D(self.n, metric.y0, metric.y1, metric.periodic_y)
        y = grid.centers
        x0, _ = self.march_range(metric)
        opts = self.initial
        kind = opts["kind"]
        if kind in ("exact-catenoid", "exact-helicoid"):
            u, v = exact.VELOCITY[kind.split("-")[1]](np.full_like(y, x0), y)
        elif kind == "expression":
            u = np.broadcast_to(expr.compile_expr(opts["u"])(x0, y), y.shape)
            v = np.broadcast_to(expr.compile_expr(opts["v"])(x0, y), y.shape)
        elif kind == "csv":
            from . import io as gio

            t = gio.read_table(self.resolve(opts["path"]))
            order = np.argsort(t["y"])
            u = np.interp(y, t["y"][order], t["u"][order])
            v = np.interp(y, t["y"][order], t["v"][order])
        else:
            u, v = perturbed_catenoid(x0, y, metric, opts.get("amplitude", 0.05), opts.get("modes", 3), self.seed)
        return SolutionSlice(float(x0), np.array(u, dtype=float), np.array(v, dtype=float), grid)

    def resolve(self, path):
        return path if os.path.isabs(path) else os.path.normpath(os.path.join(self.base_dir, path))

    def output_dir(self, override=None):
        return override if override is not None else self.resolve(self.output)


def perturbed_catenoid(x0, y, metric, amplitude, modes, seed):
    """Exact catenoid velocity at ``x0`` times ``1 + a f(y)`` plus a transverse
    ``a g(y)``; ``f, g`` are unit-amplitude Fourier sums with seeded phases
    (periodic in the metric's y-period)."""
    rng = np.random.default_rng(seed)
    period = metric.y1 - metric.y0
    phases = rng.uniform(0.0, 2.0 * math.pi, size=(2, modes))
    k = np.arange(1, modes + 1)[:, None]
    arg = 2.0 * math.pi * k * (y - metric.y0)[None, :] / period
    f = np.sum(np.cos(arg + phases[0][:, None]), axis=0) / modes
    g = np.sum(np.sin(arg + phases[1][:, None]), axis=0) / modes
    u0 = math.sqrt(2.0) / math.cosh(x0) ** 2
    return u0 * (1.0 + amplitude * f), u0 * amplitude * g


def region_predicate(opts):
    """Invariant-region membership test ``(u, v) -> bool array`` or ``None``."""
    if opts is None:
        return None
    if opts["kind"] == "box":
        (ua, ub), (va, vb) = opts["u"], opts["v"]
        return lambda u, v: (u >= ua) & (u <= ub) & (v >= va) & (v <= vb)
    cu, cv = opts["center"]
    ru, rv = opts["radius"]
    return lambda u, v: np.abs(u - cu) / ru + np.abs(v - cv) / rv <= 1.0


# ----------------------------------------------------------------------------
# parsing

def _num(errs, d, key, where, positive=False, integer=False, minimum=None, allow_none=False):
    if key not in d:
        return None
    v = d[key]
    if v is None and allow_none:
        return None
    ok = isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)
    if integer:
        ok = ok and float(v).is_integer()
    if not ok:
        errs.append(f"{where}.{key}: expected a {'integer' if integer else 'finite number'}, got {v!r}")
        return None
    if positive and not v > 0:
        errs.append(f"{where}.{key}: must be > 0, got {v!r}")
        return None
    if minimum is not None and v < minimum:
        errs.append(f"{where}.{key}: must be >= {minimum}, got {v!r}")
        return None
    return int(v) if integer else float(v)


def _section(errs, raw, key):
    v = raw.get(key, {})
    if not isinstance(v, dict):
        errs.append(f"{key}: expected an object")
        return {}
    return v


def _check_metric(errs, m, base):
    from .metric import BUILTIN_TAGS

    if not isinstance(m, dict):
        errs.append("metric: expected an object")
        return
    kinds = [k for k in ("builtin", "expressions", "csv") if k in m]
    if len(kinds) != 1:
        errs.append("metric: give exactly one of 'builtin', 'expressions', 'csv'")
        return
    if "builtin" in m and m["builtin"] not in BUILTIN_TAGS:
        errs.append(f"metric.builtin: unknown tag {m['builtin']!r} (known: {', '.join(BUILTIN_TAGS)})")
    if "expressions" in m:
        from .errors import ExpressionError
        from .expr import parse

        e = m["expressions"]
        if not isinstance(e, dict) or not {"g11", "g22"} <= set(e):
            errs.append("metric.expressions: needs at least 'g11' and 'g22'")
        else:
            for k, text in e.items():
                try:
                    parse(str(text))
                except ExpressionError as exc:
                    errs.append(f"metric.expressions.{k}: {exc}")
        dom = m.get("domain")
        if not (isinstance(dom, list) and len(dom) == 4 and all(isinstance(a, (int, float)) for a in dom)
                and dom[0] < dom[1] and dom[2] < dom[3]):
            errs.append("metric.domain: expected [x0, x1, y0, y1] with x0 < x1 and y0 < y1")
    if "csv" in m:
        p = m["csv"] if os.path.isabs(m["csv"]) else os.path.join(base, m["csv"])
        if not os.path.isfile(p):
            errs.append(f"metric.csv: file not found: {m['csv']}")


def _check_initial(errs, opts, base):
    if not isinstance(opts, dict) or opts.get("kind") not in INITIAL_KINDS:
        errs.append(f"initial.kind: expected one of {', '.join(INITIAL_KINDS)}")
        return
    kind = opts["kind"]
    if kind == "expression":
        from .errors import ExpressionError
        from .expr import parse

        for k in ("u", "v"):
            if k not in opts:
                errs.append(f"initial.{k}: missing expression")
                continue
            try:
                parse(str(opts[k]))
            except ExpressionError as exc:
                errs.append(f"initial.{k}: {exc}")
    elif kind == "csv":
        p = opts.get("path")
        if not isinstance(p, str) or not os.path.isfile(p if os.path.isabs(p) else os.path.join(base, p)):
            errs.append(f"initial.path: file not found: {p}")
    elif kind == "perturbed-catenoid":
        _num(errs, opts, "amplitude", "initial", minimum=0.0)
        _num(errs, opts, "modes", "initial", integer=True, minimum=1)


def _check_region(errs, r):
    if r is None:
        return
    if not isinstance(r, dict) or r.get("kind") not in REGION_KINDS:
        errs.append(f"solver.region.kind: expected one of {', '.join(REGION_KINDS)}")
        return
    keys = ("u", "v") if r["kind"] == "box" else ("center", "radius")
    for k in keys:
        v = r.get(k)
        if not (isinstance(v, list) and len(v) == 2 and all(isinstance(a, (int, float)) for a in v)):
            errs.append(f"solver.region.{k}: expected a pair of numbers")
    if r["kind"] == "diamond" and isinstance(r.get("radius"), list) and not all(
            isinstance(a, (int, float)) and a > 0 for a in r["radius"]):
        errs.append("solver.region.radius: entries must be > 0")


def config_from_dict(raw, base_dir="."):
    """Validate ``raw`` and build a :class:`RunConfig`.

    All problems are collected and raised together as :class:`ConfigError`.
    """
    errs = []
    if not isinstance(raw, dict):
        raise ConfigError(["config: expected a JSON object"])
    if raw.get("schema") != SCHEMA:
        errs.append(f"schema: expected {SCHEMA}, got {raw.get('schema')!r}")
    known = {"schema", "metric", "march", "grid", "solver", "initial", "reconstruct", "output", "seed"}
    for k in sorted(set(raw) - known):
        errs.append(f"{k}: unknown key")
    if "metric" not in raw:
        errs.append("metric: required")
    else:
        _check_metric(errs, raw["metric"], base_dir)
    march = _section(errs, raw, "march")
    grid = _section(errs, raw, "grid")
    solver = _section(errs, raw, "solver")
    rec = _section(errs, raw, "reconstruct")
    x0 = _num(errs, march, "x0", "march")
    x1 = _num(errs, march, "x1", "march")
    if x0 is not None and x1 is not None and not x1 > x0:
        errs.append("march.x1: must exceed march.x0")
    n = _num(errs, grid, "n", "grid", integer=True, minimum=8)
    eps = _num(errs, solver, "epsilon", "solver", positive=True)
    cfl = _num(errs, solver, "cfl_safety", "solver", positive=True)
    if cfl is not None and cfl > 1:
        errs.append(f"solver.cfl_safety: must be <= 1, got {cfl!r}")
    dx = _num(errs, solver, "dx", "solver", positive=True, allow_none=True)
    max_steps = _num(errs, solver, "max_steps", "solver", integer=True, minimum=1)
    scheme = solver.get("flux_scheme", "central")
    if scheme not in ("central", "llf"):
        errs.append(f"solver.flux_scheme: expected 'central' or 'llf', got {scheme!r}")
    _check_region(errs, solver.get("region"))
    initial = raw.get("initial", {"kind": "exact-catenoid"})
    _check_initial(errs, initial, base_dir)
    order = _num(errs, rec, "forms_order", "reconstruct", integer=True)
    if order is not None and order not in (2, 4):
        errs.append(f"reconstruct.forms_order: expected 2 or 4, got {order}")
    out = raw.get("output", "out")
    if not isinstance(out, str) or not out:
        errs.append("output: expected a directory path")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        errs.append(f"seed: expected a nonnegative integer, got {seed!r}")
    if errs:
        raise ConfigError(errs)
    kw = {k: v for k, v in (("x0", x0), ("x1", x1), ("n", n), ("epsilon", eps), ("cfl_safety", cfl),
                            ("max_steps", max_steps), ("forms_order", order)) if v is not None}
    return RunConfig(metric=raw["metric"], initial=initial, dx=dx, flux_scheme=scheme,
                     region=solver.get("region"), output=out, seed=seed,
                     base_dir=os.path.abspath(base_dir), raw=raw, **kw)


def parse_config(path):
    """Read and validate a config file; ``OSError`` propagates for I/O trouble."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config: invalid JSON ({exc})"]) from None
    return config_from_dict(raw, os.path.dirname(os.path.abspath(path)))
