"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_core.py [--period 5] [--returns 20000]

Times the periodic-orbit solver over every admissible word up to ``--period``
and the batched first-return kernel, checks that both backends agree bit for
bit, and prints the speed-up.
"""
import argparse
import time

import numpy as np

from tangency_horseshoe import _core_py
from tangency_horseshoe.map_core import DEFAULT_PARAMS
from tangency_horseshoe.orbit_checks import fold_image
from tangency_horseshoe.periodic_orbits import (MARGIN, RESIDUAL_TOL,
                                                enumerate_itineraries, seed_grid)

try:
    from tangency_horseshoe import _core
except ImportError:  # not built
    _core = None


def _words(period):
    words = [w for w in enumerate_itineraries(period) if any(r.code == 2 for r in w)]
    return [(np.array([r.code for r in w], dtype=np.intc), seed_grid(w[0])) for w in words]


def _same(a, b):
    """Bitwise agreement of nested tuples of arrays (NaN equals NaN)."""
    if isinstance(a, tuple):
        return len(a) == len(b) and all(_same(x, y) for x, y in zip(a, b))
    a, b = np.asarray(a), np.asarray(b)
    return a.shape == b.shape and np.array_equal(a, b, equal_nan=a.dtype.kind == "f")


def bench_solve(mod, words, pv):
    t0 = time.perf_counter()
    out = [mod.solve_word(codes, pv, seeds, 200, 30, MARGIN, RESIDUAL_TOL)
           for codes, seeds in words]
    return time.perf_counter() - t0, out


def bench_returns(mod, xs, ys, pv):
    t0 = time.perf_counter()
    out = mod.first_return_batch(pv, xs, ys, 1000)
    return time.perf_counter() - t0, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--period", type=int, default=5)
    ap.add_argument("--returns", type=int, default=20000)
    args = ap.parse_args()
    if _core is None:
        raise SystemExit("compiled core not built; run `pip install -e . --no-build-isolation`")

    pv = DEFAULT_PARAMS.vector()
    words = _words(args.period)
    rng = np.random.default_rng(0)
    xs, ys = fold_image(rng.uniform(0, 1, args.returns),
                        rng.uniform(DEFAULT_PARAMS.y4a, DEFAULT_PARAMS.y4b, args.returns))
    keep = (ys > 0) & (ys <= 1)
    xs, ys = np.ascontiguousarray(xs[keep]), np.ascontiguousarray(ys[keep])

    print(f"{'kernel':<28}{'python s':>10}{'compiled s':>12}{'speed-up':>10}  identical")
    tp, rp = bench_solve(_core_py, words, pv)
    tc, rc = bench_solve(_core, words, pv)
    same = _same(tuple(rp), tuple(rc))
    print(f"{f'solve_word ({len(words)} words)':<28}{tp:>10.3f}{tc:>12.3f}{tp / tc:>10.1f}  {same}")
    tp, rp = bench_returns(_core_py, xs, ys, pv)
    tc, rc = bench_returns(_core, xs, ys, pv)
    same = _same(rp, rc)
    print(f"{f'first_return_batch ({len(xs)})':<28}{tp:>10.3f}{tc:>12.3f}{tp / tc:>10.1f}  {same}")


if __name__ == "__main__":
    main()
