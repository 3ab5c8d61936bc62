"""Compare the numba and pure-numpy evaluation kernels on the same program.

Usage: python benchmarks/bench_kernels.py [--points N] [--repeat R]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from varinv.expr import parse
from varinv.kernels import HAVE_NUMBA, compile_expr, run
from varinv.jet import JetContext
from varinv.tonti import tonti_lagrangian

CASES = {
    "polynomial": ("w1[1]^2*w2 + 3*x1*w1*w2[2] - w2[1]^3/2 + x2^2", 2, 2),
    "transcendental": ("2*(exp(w1)/w1[1])*(1 - w1[1,1]/w1[1]^2)", 1, 1),
}


def _timed(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(points: int, repeat: int) -> list:
    rng = np.random.default_rng(0)
    rows = []
    for name, (src, n, m) in CASES.items():
        e = parse(src, n=n, m=m)
        if name == "transcendental":
            # the homotopy integrand of the Tonti Lagrangian, with t as a column
            q = tonti_lagrangian([e], [parse("x1", n=n, m=m)], JetContext(n, m))
            e = q.integrand
        refs = tuple(sorted(e.free, key=lambda r: r.key))
        prog = compile_expr(e, refs)
        X = rng.uniform(0.5, 1.5, size=(points, len(refs)))
        a = run(prog, X, use_numba=False)
        t_np = _timed(lambda: run(prog, X, use_numba=False), repeat)
        if HAVE_NUMBA:
            b = run(prog, X, use_numba=True)  # compile outside the timed region
            t_nb = _timed(lambda: run(prog, X, use_numba=True), repeat)
            err = float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(a))))
        else:
            t_nb, err = float("nan"), float("nan")
        rows.append((name, points, t_np, t_nb, err))
    return rows


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    print(f"numba available: {HAVE_NUMBA}")
    print(f"{'case':<16}{'points':>10}{'numpy s':>12}{'numba s':>12}{'speedup':>10}{'max rel diff':>14}")
    for name, pts, t_np, t_nb, err in bench(args.points, args.repeat):
        print(f"{name:<16}{pts:>10}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.2f}{err:>14.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
