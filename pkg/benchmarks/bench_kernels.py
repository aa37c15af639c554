"""Benchmark the hot quadrature kernels: numba path vs numpy fallback.

Times the left/right kernel accumulation (the inner loop of every
Cauchy-type integral) and the node principal values end to end, then
prints per-call wall time and the speedup of the compiled path.  When
numba is unavailable (or HYPERCAUCHY_NO_NUMBA is set) both columns run
the numpy fallback and the speedup is ~1.
"""

import argparse
import time

import numpy as np

from hypercauchy import _accel
from hypercauchy.cauchy import _measure_density, principal_value_nodes
from hypercauchy.surface import DomainSpec, build_mesh
from hypercauchy._corpus import random_smooth


def _prepared(ctx, targets, nodes, g):
    targets = np.ascontiguousarray(np.atleast_2d(targets), dtype=np.float64)
    excl = np.full(targets.shape[0], -1, dtype=np.int64)
    out = np.empty((targets.shape[0], ctx.dim))
    return targets, excl, np.ascontiguousarray(nodes), np.ascontiguousarray(g), out


def _time(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(
        description="Compare numba-compiled and numpy quadrature kernels")
    parser.add_argument("--surface", choices=["circle", "sphere"],
                        default="sphere")
    parser.add_argument("--level", type=int, default=3)
    parser.add_argument("--targets", type=int, default=256)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    n = 1 if args.surface == "circle" else 2
    spec = DomainSpec(args.surface, n, center=(0.0,) * (n + 1), radius=1.0)
    mesh = build_mesh(spec, args.level)
    ctx = mesh.context
    f = random_smooth(mesh, seed=1)
    g = _measure_density(mesh, f, "left")
    rng = np.random.default_rng(0)
    dirs = rng.standard_normal((args.targets, n + 1))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    targets = 0.5 * dirs

    print(f"surface={args.surface} level={args.level} "
          f"nodes={mesh.node_count} targets={args.targets} "
          f"numba_active={_accel.HAVE_NUMBA}")

    rows = []
    for name, active, fallback in [
        ("accum_left",
         lambda: _accel.accum_left(ctx, targets, mesh.nodes, g),
         lambda a=_prepared(ctx, targets, mesh.nodes, g):
             _accel._accum_left_np(a[0], a[1], a[2], a[3],
                                   ctx.para_idx, ctx.para_sign, ctx.n, a[4])),
        ("accum_right",
         lambda: _accel.accum_right(ctx, targets, mesh.nodes, g),
         lambda a=_prepared(ctx, targets, mesh.nodes, g):
             _accel._accum_right_np(a[0], a[1], a[2], a[3],
                                    ctx.para_idx_right, ctx.para_sign_right,
                                    ctx.n, a[4])),
        ("pv_nodes",
         lambda: principal_value_nodes(mesh, f),
         None),
    ]:
        active()  # warm up (triggers JIT compilation on the numba path)
        t_active = _time(active, args.repeats)
        t_fallback = _time(fallback, args.repeats) if fallback else float("nan")
        rows.append((name, t_active, t_fallback))

    print(f"{'kernel':<12} {'active_ms':>10} {'numpy_ms':>10} {'speedup':>8}")
    for name, ta, tf in rows:
        speed = tf / ta if np.isfinite(tf) else float("nan")
        print(f"{name:<12} {1e3 * ta:>10.3f} {1e3 * tf:>10.3f} {speed:>8.2f}")


if __name__ == "__main__":
    main()
