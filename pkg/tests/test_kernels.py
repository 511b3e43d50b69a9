import ast
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fockspec import _kernels, _kernels_py

try:
    from fockspec import _ckernels
except ImportError:  # extension not built
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled extension not built")


def moments_case(seed, N, r, Z):
    rng = np.random.default_rng(seed)
    return (rng.standard_normal((N, r)), rng.uniform(1.0, 5.0, N), -rng.uniform(0.1, 3.0, Z))


def test_backend_flag():
    assert _kernels.BACKEND in ("cython", "python")
    if _ckernels is not None and not os.environ.get("FOCKSPEC_PURE_PYTHON"):
        assert _kernels.BACKEND == "cython"


def test_reference_moments_small():
    F = np.array([[1.0, 2.0], [0.5, -1.0]])
    d = np.array([2.0, 3.0])
    got = _kernels_py.resolvent_moments(F, d, [1.0], weight=2.0)[0]
    want = 2.0 * (np.outer(F[0], F[0]) / 1.0 + np.outer(F[1], F[1]) / 2.0)
    assert np.allclose(got, want, atol=1e-15)


@needs_ext
@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), N=st.integers(1, 300), r=st.integers(1, 7), Z=st.integers(1, 80))
def test_moments_backends_agree(seed, N, r, Z):
    F, d, zs = moments_case(seed, N, r, Z)
    a = _ckernels.resolvent_moments(F, d, zs, 0.7)
    b = _kernels_py.resolvent_moments(F, d, zs, 0.7)
    assert a.shape == b.shape == (Z, r, r)
    assert np.abs(a - b).max() <= 1e-12 * max(1.0, np.abs(b).max())


def test_dispatch_complex_shifts_use_numpy():
    F, d, zs = moments_case(1, 20, 3, 4)
    zc = zs + 0.5j
    got = _kernels.resolvent_moments(F, d, zc)
    assert np.iscomplexobj(got)
    assert np.array_equal(got, _kernels_py.resolvent_moments(F, d, zc))


def test_dispatch_large_batch_matches():
    F, d, zs = moments_case(2, 50, 4, _kernels.BATCH_CROSSOVER + 5)
    got = _kernels.resolvent_moments(F, d, zs)
    assert np.abs(got - _kernels_py.resolvent_moments(F, d, zs)).max() <= 1e-12


def test_reference_extrema_small():
    left = np.array([[1.0, 0.0], [0.0, 2.0]])
    right = np.array([[3.0, -1.0], [-2.0, 1.0], [0.5, 0.5]])
    lo, arg_lo, hi, arg_hi = _kernels_py.separable_extrema(left, right)
    prod = left @ right.T
    assert lo == prod.min() and hi == prod.max()
    assert prod[arg_lo] == lo and prod[arg_hi] == hi


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(1, 200), m=st.integers(1, 200),
       chunk=st.sampled_from([1, 7, 1 << 10, 1 << 22]))
def test_extrema_chunking_invariant(seed, n, m, chunk):
    rng = np.random.default_rng(seed)
    left, right = rng.standard_normal((n, 3)), rng.standard_normal((m, 3))
    prod = left @ right.T
    lo, arg_lo, hi, arg_hi = _kernels_py.separable_extrema(left, right, chunk=chunk)
    assert lo == pytest.approx(prod.min(), abs=1e-13)
    assert hi == pytest.approx(prod.max(), abs=1e-13)
    assert prod[arg_lo] == pytest.approx(lo, abs=1e-13)
    assert prod[arg_hi] == pytest.approx(hi, abs=1e-13)


@needs_ext
@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(1, 150), m=st.integers(1, 150))
def test_extrema_backends_agree(seed, n, m):
    rng = np.random.default_rng(seed)
    left, right = rng.standard_normal((n, 4)), rng.standard_normal((m, 4))
    a = _ckernels.separable_extrema(left, right)
    b = _kernels_py.separable_extrema(left, right)
    assert a[0] == pytest.approx(b[0], abs=1e-12) and a[2] == pytest.approx(b[2], abs=1e-12)
    prod = left @ right.T
    assert prod[a[1]] == pytest.approx(a[0], abs=1e-12)
    assert prod[a[3]] == pytest.approx(a[2], abs=1e-12)


def test_pure_python_fallback_end_to_end():
    """The fallback is selected by the environment and reproduces the fiber roots."""
    code = ("import fockspec, numpy as np\n"
            "from fockspec import friedrichs as fr\n"
            "from fockspec.model import cubic_cosine_model\n"
            "from fockspec.torus import make_grid\n"
            "r = fr.fiber_eigenvalues(cubic_cosine_model(), np.zeros(3), make_grid(3, 8))\n"
            "print(fockspec.BACKEND); print(repr(r))\n")
    outs = {}
    for flag in ("", "1"):
        env = {**os.environ, "FOCKSPEC_PURE_PYTHON": flag}
        if not flag:
            env.pop("FOCKSPEC_PURE_PYTHON")
        proc = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                              env=env, timeout=300)
        assert proc.returncode == 0, proc.stderr
        backend, roots = proc.stdout.strip().splitlines()
        outs[flag] = (backend, ast.literal_eval(roots))
    assert outs["1"][0] == "python"
    a, b = (np.array(outs[k][1]) for k in ("", "1"))
    assert len(a) == len(b) == 6
    assert np.abs(a - b).max() <= 1e-9
