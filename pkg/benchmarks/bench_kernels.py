"""Compare the numba and numpy modular kernels.

    python benchmarks/bench_kernels.py [--sizes 100 200 400] [--repeat 3]

The numba timings exclude the first (compiling) call.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from twistpf import kernels
from twistpf.kernels import PRIME, matmul_mod_numpy, rref_mod_numpy


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def low_rank(rng, n, rank):
    a = rng.integers(0, PRIME, size=(n, rank), dtype=np.int64)
    b = rng.integers(0, PRIME, size=(rank, n), dtype=np.int64)
    return matmul_mod_numpy(a, b)


def bench_probe(repeat):
    """Whole modular order probe for the three-loop sunset, once per backend."""
    code = ("import time, sys; sys.path.insert(0, 'tests'); from conftest import sunset_polys;"
            "from twistpf.modular import probe_order; from twistpf.twist import TwistSpec;"
            "sp = sunset_polys(4); ts = TwistSpec.uniform(1, 4);"
            "probe_order(sp, ts, 't', 4);"
            "t0 = time.perf_counter();"
            f"[probe_order(sp, ts, 't', 4) for _ in range({repeat})];"
            f"print((time.perf_counter() - t0) / {repeat})")
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    out = {}
    for flag, name in (("0", "numpy"), ("1", "numba")):
        env = dict(os.environ, TWISTPF_NUMBA=flag)
        p = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env, cwd=root)
        out[name] = float(p.stdout.strip()) if p.returncode == 0 else float("nan")
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 200, 400])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--no-probe", action="store_true")
    args = ap.parse_args()
    if not kernels.HAVE_NUMBA:
        sys.exit("numba is not available (or TWISTPF_NUMBA=0); nothing to compare")
    rng = np.random.default_rng(0)
    kernels.rref_mod_numba(low_rank(rng, 8, 4), 8)          # compile
    kernels._matmul_mod_jit(low_rank(rng, 8, 4), low_rank(rng, 8, 4), PRIME)
    print(f"{'kernel':<8}{'n':>6}{'numpy s':>12}{'numba s':>12}{'speedup':>10}")
    for n in args.sizes:
        A = low_rank(rng, n, n * 3 // 4)
        t_np = best_of(lambda: rref_mod_numpy(A.copy(), n), args.repeat)
        t_nb = best_of(lambda: kernels.rref_mod_numba(A.copy(), n), args.repeat)
        print(f"{'rref':<8}{n:>6}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}")
        B = rng.integers(0, PRIME, size=(n, n), dtype=np.int64)
        t_np = best_of(lambda: matmul_mod_numpy(A, B), args.repeat)
        t_nb = best_of(lambda: kernels._matmul_mod_jit(A, B, PRIME), args.repeat)
        print(f"{'matmul':<8}{n:>6}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}")
    if not args.no_probe:
        p = bench_probe(args.repeat)
        print(f"{'probe':<8}{'n=4':>6}{p['numpy']:>12.4f}{p['numba']:>12.4f}{p['numpy'] / p['numba']:>10.1f}")


if __name__ == "__main__":
    main()
