"""Kernel dispatch: the compiled extension when it imports, numpy otherwise.

Set ``FOCKSPEC_PURE_PYTHON=1`` to force the fallback.
"""
import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
if not os.environ.get("FOCKSPEC_PURE_PYTHON"):
    try:
        from . import _ckernels
    except ImportError:  # extension not built
        _ckernels = None
    else:
        BACKEND = "cython"
else:
    _ckernels = None


# above this many shifts the BLAS-backed GEMM catches up with the compiled loop
# (see benchmarks/bench_kernels.py); root isolation mostly calls with one shift
BATCH_CROSSOVER = 16


def resolvent_moments(F, d, zs, weight=1.0):
    zs = np.atleast_1d(zs)
    if (_ckernels is not None and len(zs) <= BATCH_CROSSOVER
            and not np.iscomplexobj(zs) and not np.iscomplexobj(d)):
        return _ckernels.resolvent_moments(F, d, zs, weight)
    return _kernels_py.resolvent_moments(F, d, zs, weight)


def separable_extrema(left, right):
    # memory-bound: the chunked BLAS product outruns the compiled scan at every
    # size we use (see benchmarks/bench_kernels.py), so it stays on numpy
    return _kernels_py.separable_extrema(left, right)
