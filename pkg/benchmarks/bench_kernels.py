"""Compare the numba loop kernels with their numpy counterparts.

    python3 benchmarks/bench_kernels.py [--n 33] [--repeat 20]

Both forms run in one process: the numba versions are compiled here from the
loop sources, independent of QLINV_NO_NUMBA.
"""
from __future__ import annotations

import argparse
import itertools
import timeit

import numpy as np

from qlinv import kernels
from qlinv import pde_core as pc


def _compiled():
    try:
        import numba
    except ImportError:
        return None
    return {"stencil": numba.njit(kernels._stencil_loop), "contract": numba.njit(kernels._sym_contract_loop)}


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=33)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)

    grid = pc.build_grid(3, args.n)
    rng = np.random.default_rng(0)
    u = rng.standard_normal(grid.n_nodes)
    interior = grid.interior_index.astype(np.int64)
    strides = np.array(grid.strides, dtype=np.int64)
    inv_h2 = 1.0 / np.array(grid.spacing) ** 2
    out = np.empty(interior.size)

    idx = np.array(list(itertools.combinations_with_replacement(range(3), 3)), dtype=np.int64)
    M = grid.n_nodes
    coef = rng.standard_normal((idx.shape[0], M))
    mult = rng.uniform(1, 6, idx.shape[0])
    p = rng.standard_normal((M, 3))
    out2 = np.empty(M)

    cases = {
        "stencil": (kernels._stencil_numpy, (u, interior, strides, inv_h2, out)),
        "contract": (kernels._sym_contract_numpy, (coef, idx, mult, p, out2)),
    }
    jit = _compiled()
    print(f"grid {args.n}^3, {args.repeat} repeats; times in ms per call")
    print(f"{'kernel':10s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s} {'max diff':>10s}")
    for name, (fn, fargs) in cases.items():
        t_np = min(timeit.repeat(lambda: fn(*fargs), number=1, repeat=args.repeat)) * 1e3
        ref = fn(*fargs).copy()
        if jit is None:
            print(f"{name:10s} {t_np:10.3f} {'n/a':>10s}")
            continue
        jfn = jit[name]
        jfn(*fargs)  # compile
        t_nb = min(timeit.repeat(lambda: jfn(*fargs), number=1, repeat=args.repeat)) * 1e3
        diff = float(np.max(np.abs(jfn(*fargs) - ref)))
        print(f"{name:10s} {t_np:10.3f} {t_nb:10.3f} {t_np / t_nb:8.2f} {diff:10.2e}")


if __name__ == "__main__":
    main()
