"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--n 1024] [--repeat 20]

Each kernel is called once untimed (JIT warm-up), then ``--repeat`` times;
the best wall time is reported together with the max difference between
the two outputs.
"""
import argparse
import time

import numpy as np

from gcflow import _accel, exact, kernels
from gcflow import metric as gm
from gcflow import reconstruct as rc
from gcflow.solver import pack_gamma


def best_of(fn, repeat):
    fn()
    t = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        t.append(time.perf_counter() - t0)
    return min(t), out


def slice_inputs(n):
    m = gm.builtin_metric("catenoid")
    y = (np.arange(n) + 0.5) * 2 * np.pi / n
    x = np.full_like(y, 0.3)
    geo = gm.geometry(m, x, y)
    u, v = exact.catenoid_velocity(x, y)
    u = u * (1 + 0.05 * np.cos(y))
    v = v + 0.05 * np.sin(2 * y)
    return u, v, np.ascontiguousarray(geo["kappa"]), np.ascontiguousarray(pack_gamma(geo["gamma"])), y[1] - y[0]


def sweep_inputs(n):
    m = gm.builtin_metric("catenoid")
    x = np.linspace(-1, 1, n)
    y = np.linspace(0, 2 * np.pi, n)
    hf = rc._HField(exact.catenoid_lmn, x, y)
    X, Y = np.meshgrid(x, y, indexing="ij")
    ym = 0.5 * (y[:-1] + y[1:])
    Xm, Ym = np.meshgrid(x, ym, indexing="ij")
    An, gram = rc._coefficients(m, X, Y, *hf.nodes, 1)
    Am, _ = rc._coefficients(m, Xm, Ym, *exact.catenoid_lmn(Xm, Ym), 1)
    S0 = np.broadcast_to(np.eye(3), (n, 3, 3)).copy()
    r0 = np.zeros((n, 3))
    return (np.ascontiguousarray(An[:, :-1]), np.ascontiguousarray(Am), np.ascontiguousarray(An[:, 1:]),
            np.diff(y), S0, r0, np.ascontiguousarray(gram[:, 1:]), 1, True)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1024)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        print("numba not importable; only the numpy path exists")
        return
    u, v, kap, gam, dy = slice_inputs(args.n)
    lam = kernels.char_speed_np(u, v, kap)
    W = np.stack(kernels.fluxes_np(u, v, kap)[2:4])
    sw = sweep_inputs(max(16, args.n // 8))
    cases = {
        "slice_rhs": (lambda: kernels.slice_rhs_nb(u, v, kap, gam, dy, 1e-3, True, lam),
                      lambda: kernels.slice_rhs_np(u, v, kap, gam, dy, 1e-3, True, lam)),
        "recover": (lambda: kernels.recover_nb(W[0].copy(), W[1].copy(), kap)[:2],
                    lambda: kernels.recover_np(W[0], W[1], kap)[:2]),
        "char_speed": (lambda: kernels.char_speed_nb(u, v, kap), lambda: kernels.char_speed_np(u, v, kap)),
        "frame_sweep": (lambda: kernels.frame_sweep_nb(*sw)[:2], lambda: kernels.frame_sweep_np(*sw)[:2]),
    }
    print(f"n = {args.n}, numba threads = {_accel.numba.get_num_threads()}")
    print(f"{'kernel':<12} {'numba [ms]':>11} {'numpy [ms]':>11} {'speedup':>8} {'max |diff|':>11}")
    for name, (fnb, fnp) in cases.items():
        tb, ob = best_of(fnb, args.repeat)
        tp, op = best_of(fnp, args.repeat)
        diff = max(float(np.max(np.abs(np.asarray(a) - np.asarray(b)))) for a, b in zip(ob, op))
        print(f"{name:<12} {1e3 * tb:11.3f} {1e3 * tp:11.3f} {tp / tb:8.1f} {diff:11.2e}")


if __name__ == "__main__":
    main()
