"""Compiled versus pure-Python kernels.

Run from the repository root::

    python benchmarks/bench_kernels.py [--repeat 5]

It times ``resolvent_moments`` at the shift counts the root finders use,
``separable_extrema`` at the pair budgets used for ``[m, M]``, and one
end-to-end fiber root search under each backend. It also checks that the two
backends agree.
"""
from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from fockspec import _kernels_py
from fockspec.model import cubic_cosine_model
from fockspec.torus import make_grid

try:
    from fockspec import _ckernels
except ImportError:  # pragma: no cover - extension not built
    _ckernels = None


def best(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def moments_case(N, r, Z, seed=0):
    rng = np.random.default_rng(seed)
    F = rng.standard_normal((N, r))
    d = rng.uniform(1.0, 5.0, N)
    zs = -rng.uniform(0.5, 3.0, Z)
    return F, d, zs


def row(label, tc, tp, agree):
    ratio = tp / tc if tc else float("nan")
    print(f"{label:<38s} {tc * 1e6:12.1f} {tp * 1e6:12.1f} {ratio:8.2f}x  {agree:.1e}")


def end_to_end(repeat):
    code = (
        "import time; import numpy as np; from fockspec import BACKEND, fiber_roots, make_grid;"
        "from fockspec.model import cubic_cosine_model; s = cubic_cosine_model();"
        "g = make_grid(3, 12); fiber_roots(s, np.zeros(3), g, (-130.0, -1e-6));"
        f"ts = [];\nfor _ in range({repeat}):\n"
        "    t = time.perf_counter(); fiber_roots(s, np.zeros(3), g, (-130.0, -1e-6));"
        " ts.append(time.perf_counter() - t)\nprint(BACKEND, min(ts))"
    )
    out = {}
    for pure in ("", "1"):
        env = dict(os.environ, FOCKSPEC_PURE_PYTHON=pure)
        res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                             check=True)
        name, t = res.stdout.split()
        out[name] = float(t)
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not available; nothing to compare")
        return 1
    print(f"{'case':<38s} {'cython us':>12s} {'python us':>12s} {'speedup':>9s}  max|diff|")
    N, r = 1728, 6  # nu = 3 on a 12^3 grid, six square-root factors
    for Z in (1, 4, 16, 64, 401):
        F, d, zs = moments_case(N, r, Z)
        number = max(1, 200 // Z)
        tc = best(lambda: _ckernels.resolvent_moments(F, d, zs, 1e-3), args.repeat, number)
        tp = best(lambda: _kernels_py.resolvent_moments(F, d, zs, 1e-3), args.repeat, number)
        a = _ckernels.resolvent_moments(F, d, zs, 1e-3)
        b = _kernels_py.resolvent_moments(F, d, zs, 1e-3)
        diff = max(float(np.abs(np.asarray(x) - np.asarray(y)).max()) for x, y in zip(a, b))
        row(f"resolvent_moments N={N} r={r} Z={Z}", tc, tp, diff)
    spec = cubic_cosine_model()
    for nu, n in ((1, 256), (3, 8), (3, 12)):
        s = spec if nu == 3 else None
        if s is None:
            from fockspec.model import random_chain_model

            s = random_chain_model(0)
        g = make_grid(nu, n)
        L, R = s.w2.left_matrix(g.points), s.w2.right_matrix(g.points)
        tc = best(lambda: _ckernels.separable_extrema(L, R), args.repeat, 1)
        tp = best(lambda: _kernels_py.separable_extrema(L, R), args.repeat, 1)
        a = _ckernels.separable_extrema(L, R)
        b = _kernels_py.separable_extrema(L, R)
        diff = max(abs(a[0] - b[0]), abs(a[2] - b[2]))
        row(f"separable_extrema nu={nu} n={n} pairs={g.size ** 2}", tc, tp, diff)
    e2e = end_to_end(args.repeat)
    print(f"{'fiber_roots nu=3 n=12 (end to end)':<38s} {e2e['cython'] * 1e6:12.1f} "
          f"{e2e['python'] * 1e6:12.1f} {e2e['python'] / e2e['cython']:8.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
