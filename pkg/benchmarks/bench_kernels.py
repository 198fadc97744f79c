"""Compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--grid 64 96 128] [--repeat 3]

Kernel timings call both implementations directly on the same inputs and
check that they agree.  The end-to-end row runs a small eigen solve in a
subprocess with and without SECTORLAB_PURE=1.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from sectorlab import _kernels_py
from sectorlab.discretization import PolarGrid, assemble_laplacian
from sectorlab.domain import SectorDomain

try:
    from sectorlab import _kernels
except ImportError:
    _kernels = None

E2E = (
    "import math, time; from sectorlab.discretization import PolarGrid, constant_potential; "
    "from sectorlab.domain import SectorDomain; from sectorlab.spectral import smallest_eigenpairs; "
    "from sectorlab.kernels import BACKEND; "
    "g = PolarGrid(SectorDomain(0, 1, math.pi / 2), {n}, {n}); t = time.perf_counter(); "
    "smallest_eigenpairs(constant_potential(g, 0.0), 4); print(BACKEND, time.perf_counter() - t)"
)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def bench_grid(n, repeat):
    lap = assemble_laplacian(PolarGrid(SectorDomain(0.0, 1.0, np.pi / 2), n, n))
    A = lap.A.add_diagonal(-20.0 * lap.mass)  # indefinite, as in shifted solves
    band = np.ascontiguousarray(A.lower_band())
    rhs = np.random.default_rng(0).standard_normal((A.n, 4))
    x = rhs[:, 0].copy()
    rows = []
    impls = [("python", _kernels_py)] + ([("compiled", _kernels)] if _kernels else [])
    results = {}
    for name, mod in impls:
        t_f, fac = best_of(lambda: (lambda b: (mod.band_ldlt(b), b))(band.copy()), repeat)
        t_s, sol = best_of(lambda: (lambda r: (mod.band_ldlt_solve(fac[1], r), r)[1])(rhs.copy()), repeat)
        t_m, mv = best_of(lambda: mod.csr_matvec(A.indptr, A.indices, A.data, x), repeat)
        results[name] = (fac, sol, mv)
        rows.append((name, t_f, t_s, t_m))
    if len(results) == 2:
        (fp, sp, mp), (fc, sc, mc) = results["python"], results["compiled"]
        assert fp[0] == fc[0], "negative pivot counts differ"
        for a, c in ((sp, sc), (mp, mc)):
            assert np.abs(a - c).max() <= 1e-10 * np.abs(a).max(), "backends disagree"
    return A.n, A.bandwidth(), rows


def end_to_end(n):
    out = {}
    for pure in ("0", "1"):
        env = dict(os.environ, SECTORLAB_PURE=pure)
        res = subprocess.run([sys.executable, "-c", E2E.format(n=n)], env=env, capture_output=True, text=True, check=True)
        backend, secs = res.stdout.split()
        out[backend] = float(secs)
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", type=int, nargs="+", default=[64, 96, 128])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; timing the fallback only")
    print(f"{'grid':>6} {'n':>7} {'band':>5} {'backend':>9} {'factor s':>10} {'solve s':>10} {'matvec s':>10}")
    for g in args.grid:
        n, b, rows = bench_grid(g, args.repeat)
        for name, tf, ts, tm in rows:
            print(f"{g:>6} {n:>7} {b:>5} {name:>9} {tf:>10.4f} {ts:>10.4f} {tm:>10.5f}")
    print("\nend to end, 4 eigenpairs on the quarter disc")
    for g in args.grid:
        times = end_to_end(g)
        line = "  ".join(f"{k} {v:.3f} s" for k, v in sorted(times.items()))
        print(f"{g:>6}x{g:<4} {line}")


if __name__ == "__main__":
    main()
