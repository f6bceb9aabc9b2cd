"""Command-line front end: ``gcflow <command> ...``.

Exit codes: 0 success, 1 usage or validation error, 2 numerical failure,
3 I/O error.  The numerical modules are imported only after the thread count
is known, because numba sizes its pool from ``NUMBA_NUM_THREADS`` at import.
"""
import argparse
import hashlib
import json
import logging
import os
import sys

log = logging.getLogger("gcflow")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_metric_args(p, required=False):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--metric", help="builtin metric tag (catenoid, helicoid, flat)")
    g.add_argument("--metric-csv", help="gridded metric CSV with columns x,y,g11,g12,g22")
    g.add_argument("--config", help="take the metric from a run config")


def build_parser():
    p = _Parser(prog="gcflow", description="Gauss-Codazzi solver and surface reconstruction.")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: $GCFLOW_THREADS, else the CPU count)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("curvature", help="table of Gauss curvature on a node grid")
    _add_metric_args(c, required=True)
    c.add_argument("--x0", type=float)
    c.add_argument("--x1", type=float)
    c.add_argument("--y0", type=float)
    c.add_argument("--y1", type=float)
    c.add_argument("--n", type=int, default=64, help="nodes per axis")
    c.add_argument("--ny", type=int, help="nodes in y (default: --n)")
    c.add_argument("--out", help="output CSV (default: stdout)")

    s = sub.add_parser("solve", help="march a run config; writes field.csv and diagnostics.json")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="output directory (default: the config's)")

    r = sub.add_parser("reconstruct", help="integrate the frame system for a solved field")
    r.add_argument("--field", required=True)
    _add_metric_args(r, required=True)
    r.add_argument("--order", type=int, choices=(2, 4), default=4, help="stencil order of the form check")
    r.add_argument("--out", default="out", help="output directory")

    v = sub.add_parser("verify", help="weak residual report for a solved field")
    v.add_argument("--field", required=True)
    _add_metric_args(v, required=True)
    v.add_argument("--out", help="output JSON (default: stdout)")

    g = sub.add_parser("gasref", help="polytropic/isothermal gas reference table")
    g.add_argument("--gamma", type=float, required=True)
    g.add_argument("--n", type=int, default=101)
    g.add_argument("--c", type=float, default=1.0, help="sound speed (isothermal case)")
    g.add_argument("--rho0", type=float, default=1.0, help="stagnation density (isothermal case)")
    g.add_argument("--q-max", type=float)
    g.add_argument("--out", help="output CSV (default: stdout)")

    pl = sub.add_parser("pipeline", help="solve, reconstruct and verify one config")
    pl.add_argument("--config", required=True)
    pl.add_argument("--out", help="output directory (default: the config's)")
    return p


def _threads(args):
    if args.threads is not None:
        if args.threads < 1:
            raise UsageError("gcflow: --threads must be >= 1")
        return args.threads
    env = os.environ.get("GCFLOW_THREADS", "").strip()
    if env:
        try:
            n = int(env)
        except ValueError:
            raise UsageError(f"gcflow: GCFLOW_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise UsageError("gcflow: GCFLOW_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


# ----------------------------------------------------------------------------
# commands

def _metric(args):
    from . import config as gconf
    from . import metric as gm

    if args.metric is not None:
        return gm.builtin_metric(args.metric)
    if args.metric_csv is not None:
        return gm.load_csv(args.metric_csv)
    return gconf.parse_config(args.config).build_metric()


def _emit(text, out):
    from . import io as gio

    if out is None:
        sys.stdout.write(text)
    else:
        gio.atomic_write_text(out, text)


def cmd_curvature(args):
    import numpy as np

    from . import io as gio
    from . import metric as gm

    m = _metric(args)
    ny = args.n if args.ny is None else args.ny
    if args.n < 2 or ny < 2:
        raise UsageError("gcflow curvature: need at least 2 nodes per axis")
    x = np.linspace(m.x0 if args.x0 is None else args.x0, m.x1 if args.x1 is None else args.x1, args.n)
    y = np.linspace(m.y0 if args.y0 is None else args.y0, m.y1 if args.y1 is None else args.y1, ny)
    X, Y = np.meshgrid(x, y, indexing="ij")
    kap = gm.geometry(m, X, Y, curvature=True, strict=False)["kappa"]
    _emit(gio.table_text(("x", "y", "kappa"), (X, Y, kap)), args.out)
    return EXIT_OK


def _config_hash(cfg):
    return hashlib.sha256(json.dumps(cfg.raw, sort_keys=True).encode()).hexdigest()[:16]


def _solve(cfg, out_dir):
    """March the config and write ``field.csv`` + ``diagnostics.json``.

    Returns ``(field, diagnostics, metric)``; numerical failures are re-raised
    after the partial outputs are on disk.
    """
    from . import io as gio
    from . import solver
    from .errors import NumericalFailure

    m = cfg.build_metric()
    init = cfg.initial_slice(m)
    _, x_end = cfg.march_range(m)
    meta = {"metric": m.describe(), "config_hash": _config_hash(cfg), "n": cfg.n, "epsilon": cfg.epsilon}
    try:
        fld, diag = solver.run(init, x_end, cfg.solver_config(), m)
    except NumericalFailure as exc:
        fld = getattr(exc, "field", None)
        diag = getattr(exc, "diagnostics", None)
        d = diag.as_dict() if diag is not None else {"status": type(exc).__name__, "message": str(exc)}
        d["run"] = meta
        if fld is not None:
            gio.write_field_csv(os.path.join(out_dir, "field.csv"), fld)
        gio.write_json(os.path.join(out_dir, "diagnostics.json"), d)
        raise
    d = diag.as_dict()
    d["run"] = meta
    gio.write_field_csv(os.path.join(out_dir, "field.csv"), fld)
    gio.write_json(os.path.join(out_dir, "diagnostics.json"), d)
    return fld, diag, m


def _reconstruct(fld, m, out_dir, order, metadata):
    from . import reconstruct as rc
    from .fluid_map import SecondFF

    h = SecondFF(*fld.lmn())
    mesh = rc.integrate_frame(m, h, fld.x, fld.y, metadata=metadata)
    errs = rc.form_errors(mesh, m, h, order=order)
    rc.write_mesh(mesh, os.path.join(out_dir, "mesh.obj"), os.path.join(out_dir, "mesh.json"), errs)
    return mesh, errs


def _read_field(path, m):
    from . import io as gio

    return gio.read_field_csv(path, y0=m.y0, y1=m.y1, periodic=m.periodic_y)


def cmd_solve(args):
    from . import config as gconf

    cfg = gconf.parse_config(args.config)
    out = cfg.output_dir(args.out)
    _, diag, _ = _solve(cfg, out)
    print(f"solve: {diag.steps} steps, status {diag.status}; wrote {out}", file=sys.stderr)
    return EXIT_OK


def cmd_reconstruct(args):
    m = _metric(args)
    fld = _read_field(args.field, m)
    mesh, errs = _reconstruct(fld, m, args.out, args.order, {"field": os.path.basename(args.field)})
    print(f"reconstruct: {mesh.x.size}x{mesh.y.size} mesh, max |I - g| = {errs['max_I']:.3e}; "
          f"wrote {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args):
    from . import io as gio
    from . import verify

    m = _metric(args)
    fld = _read_field(args.field, m)
    _emit(gio.dumps_json(verify.report(fld, m)), args.out)
    return EXIT_OK


def cmd_gasref(args):
    from . import gas_reference as gr
    from . import io as gio

    if args.n < 2:
        raise UsageError("gcflow gasref: --n must be >= 2")
    rows = gr.table(args.gamma, n=args.n, c=args.c, rho0=args.rho0, q_max=args.q_max)
    text = "q,rho,c,type\n" + "".join(
        f"{gio._num(q)},{gio._num(rho)},{gio._num(c)},{getattr(t, 'value', t)}\n" for q, rho, c, t in rows)
    _emit(text, args.out)
    return EXIT_OK


def cmd_pipeline(args):
    from . import config as gconf
    from . import io as gio
    from . import verify

    cfg = gconf.parse_config(args.config)
    out = cfg.output_dir(args.out)
    fld, diag, m = _solve(cfg, out)
    mesh, errs = _reconstruct(fld, m, out, cfg.forms_order,
                              {"config_hash": _config_hash(cfg), "metric_tag": m.tag})
    rep = verify.report(fld, m)
    rep["max_I_error"] = errs["max_I"]
    rep["max_II_error"] = errs["max_II"]
    rep["forms_order"] = errs["order"]
    rep["frame_drift"] = mesh.drift
    gio.write_json(os.path.join(out, "verify.json"), rep)
    print(f"pipeline: {diag.steps} steps, max |I - g| = {errs['max_I']:.3e}, "
          f"max weak Codazzi = {rep['max_weak_codazzi']:.3e}; wrote {out}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "curvature": cmd_curvature,
    "solve": cmd_solve,
    "reconstruct": cmd_reconstruct,
    "verify": cmd_verify,
    "gasref": cmd_gasref,
    "pipeline": cmd_pipeline,
}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        threads = _threads(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if "numba" not in sys.modules:
        os.environ["NUMBA_NUM_THREADS"] = str(threads)
    from . import _accel
    from .errors import ConfigError, GcflowError, NumericalFailure

    _accel.set_threads(threads)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailure as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (GcflowError, ValueError) as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
