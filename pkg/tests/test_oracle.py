import time

import numpy as np
import pytest

from fockspec import friedrichs as fr
from fockspec.model import SeparableKernel, decoupled_model
from fockspec.oracle import (DIM_CAP, DimensionCapError, apply_H, compare_channel, compare_faddeev,
                             discretize_H, discretize_h, full_blocks, pair_sorted,
                             symmetric_pair_basis)
from fockspec.spectrum import essential_spectrum
from fockspec.torus import TrigPoly, make_grid


def sup(f):
    return float(np.abs(f.cos).sum() + np.abs(f.sin).sum())


def norm_bound(spec):
    """``|H| <= max sup|diag| + |v0|_2 + |v1|_2 + 2 |v|``, sup norms via coefficient sums."""
    vol = (2 * np.pi) ** (spec.nu / 2)
    w2 = sum(sup(l) * sup(r) for l, r in spec.w2.terms)
    lam = spec.v2.operator_eigenvalues()
    return max(abs(spec.w0), sup(spec.w1), w2) + vol * (sup(spec.v0) + sup(spec.v1)) \
        + 2 * float(lam.max(initial=0.0))


# -- discretize_h -------------------------------------------------------------------------

def test_h_free_is_diagonal(free1):
    g = make_grid(1, 8)
    p = np.array([0.4])
    h = discretize_h(free1, p, g).matrix
    want = np.diag(np.concatenate([np.atleast_1d(free1.w1(p)), free1.w2.matrix(p[None, :], g.points)[0]]))
    assert np.array_equal(h, want)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_h_symmetric_real(random_chains, seed):
    D = discretize_h(random_chains[seed], [0.9], make_grid(1, 24))
    assert D.symmetry_defect() == 0.0
    assert np.isrealobj(D.eigenvalues())


def test_h_cubic_matches_fiber_roots(cubic):
    g = make_grid(3, 8)
    ev = discretize_h(cubic, np.zeros(3), g).eigenvalues()
    outside = ev[(ev < -1e-6) | (ev > 6 + 1e-6)]
    roots = fr.fiber_eigenvalues(cubic, np.zeros(3), g)
    assert len(outside) == len(roots) == 6
    assert np.abs(np.sort(outside) - np.array(roots)).max() <= 1e-6


def test_compare_channel_cubic_grids(cubic):
    coarse = compare_channel(cubic, np.zeros(3), make_grid(3, 8))
    fine = compare_channel(cubic, np.zeros(3), make_grid(3, 12))
    assert not coarse.count_mismatch and coarse.max_distance <= 1e-5
    assert not fine.count_mismatch and fine.max_distance <= 1e-6


def test_compare_channel_decoupled(free1):
    p = np.array([0.3])
    rep = compare_channel(free1, p, make_grid(1, 16))
    assert rep.reference == pytest.approx([float(free1.w1(p))], abs=1e-14)
    assert rep.max_distance <= 1e-10 and not rep.count_mismatch


def test_pairing_flags_count_mismatch():
    rep = pair_sorted([0.0, 1.0, 2.0], [1.0 + 1e-9, 0.0])
    assert rep.count_mismatch and not rep.ok
    assert rep.unmatched_reference == [2.0] and rep.unmatched_candidate == []
    assert rep.max_distance == pytest.approx(1e-9)


# -- discretize_H ---------------------------------------------------------------------------

def test_H_decoupled_spectrum(free1):
    g = make_grid(1, 6)
    D = discretize_H(free1, g)
    X = g.points
    W2 = free1.w2.matrix(X)
    i, j = np.triu_indices(g.size)
    want = np.sort(np.concatenate([[free1.w0], free1.w1(X), W2[i, j]]))
    assert np.allclose(D.eigenvalues(), want, atol=1e-13)
    M = D.matrix
    assert np.all(M[0, 1:] == 0.0) and np.all(M[1:1 + g.size, 1 + g.size:] == 0.0)


def test_H_chain_dimension_and_speed(toy):
    g = make_grid(1, 16)
    start = time.perf_counter()
    D = discretize_H(toy, g)
    elapsed = time.perf_counter() - start
    assert D.basis.shape[0] == 1 + 16 + 256 == 273
    assert D.dim == 1 + 16 + 16 * 17 // 2
    assert elapsed < 1.0


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_H_symmetric_and_bounded(random_chains, seed):
    spec = random_chains[seed]
    D = discretize_H(spec, make_grid(1, 12))
    assert D.symmetry_defect() <= 1e-12
    ev = D.eigenvalues()
    B = norm_bound(spec)
    assert ev.min() >= -B and ev.max() <= B
    lam, U = D.eigh()
    M = D.matrix
    assert np.abs(M @ U - U * lam).max() <= 1e-10 * np.linalg.norm(M, 2)
    assert np.abs(U.T @ U - np.eye(D.dim)).max() <= 1e-12
    assert np.all(np.diff(lam) >= 0.0)


def test_H2_block_commutes_with_swap(toy):
    g = make_grid(1, 8)
    D = discretize_H(toy, g)
    N = g.size
    full = D.basis @ D.matrix @ D.basis.T
    swap = np.eye(N * N)[[q * N + p for p in range(N) for q in range(N)]]
    S = np.eye(full.shape[0])
    S[1 + N:, 1 + N:] = swap
    assert np.abs(S @ full - full @ S).max() <= 1e-12


def test_pair_basis_isometry():
    P = symmetric_pair_basis(5)
    assert np.allclose(P.T @ P, np.eye(P.shape[1]), atol=1e-15)


def test_matrix_matches_apply_H(toy, rng):
    g = make_grid(1, 10)
    D = discretize_H(toy, g)
    N = g.size
    f0 = rng.normal()
    f1 = rng.normal(size=N)
    f2 = rng.normal(size=(N, N))
    f2 = 0.5 * (f2 + f2.T)
    w, sw = g.weight, np.sqrt(g.weight)
    full = np.concatenate([[f0], sw * f1, w * f2.ravel()])
    coeffs = D.basis.T @ full
    out = D.to_nodes(D.matrix @ coeffs)
    g0, g1, g2 = apply_H(toy, g, f0, f1, f2)
    assert abs(out[0] - g0) < 1e-12
    assert np.abs(out[1:1 + N] - g1).max() < 1e-12
    assert np.abs(out[1 + N:].reshape(N, N) - g2).max() < 1e-12


@pytest.mark.parametrize("spec_name", ["toy", "cubic"])
def test_channel_part_reproduces_fiber(spec_name, request):
    """Fixing p in the channel part of H gives the matrix of h(p) entry for entry."""
    spec = request.getfixturevalue(spec_name)
    g = make_grid(spec.nu, 6 if spec.nu == 1 else 2)
    b = full_blocks(spec, g, cap=10**5)
    N = g.size
    channel22 = b["W2"] - b["V2"]               # the fiber acts on the second variable
    for k in range(N):
        rows = slice(k * N, (k + 1) * N)
        h = np.zeros((N + 1, N + 1))
        h[0, 0] = b["H11"][k, k]
        h[0, 1:] = b["H12"][k, rows] / np.sqrt(2.0)
        h[1:, 0] = h[0, 1:]
        h[1:, 1:] = channel22[rows, rows]
        want = discretize_h(spec, g.points[k], g).matrix
        assert np.abs(h - want).max() <= 1e-13 * max(1.0, np.abs(want).max())
    # and the channel part couples different fibers not at all
    off = channel22.copy()
    for k in range(N):
        off[k * N:(k + 1) * N, k * N:(k + 1) * N] = 0.0
    assert np.all(off == 0.0)


def test_dimension_cap(cubic):
    with pytest.raises(DimensionCapError):
        discretize_H(cubic, make_grid(3, 6))
    assert DIM_CAP == 5000


# -- convergence ---------------------------------------------------------------------------

def outside_bands(ev, bands, tol=1e-6):
    return np.array([e for e in ev if not bands.contains(e, tol=tol)])


def test_sub_band_eigenvalues_converge(toy):
    ref_grid = make_grid(1, 32)
    bands = essential_spectrum(toy, ref_grid, grid=ref_grid)
    a = outside_bands(discretize_H(toy, make_grid(1, 16)).eigenvalues(), bands, 1e-3)
    b = outside_bands(discretize_H(toy, ref_grid).eigenvalues(), bands, 1e-3)
    assert len(a) == len(b) >= 1
    assert np.abs(a - b).max() <= 1e-6


def test_band_pollution_densifies(toy):
    bands = essential_spectrum(toy, make_grid(1, 16))
    counts = []
    for n in (8, 12, 16):
        ev = discretize_H(toy, make_grid(1, n)).eigenvalues()
        counts.append(sum(bands.contains(e) for e in ev))
    assert counts[0] < counts[1] < counts[2]


def test_compare_faddeev_decoupled():
    nu = 1
    c = TrigPoly.cos_axis(nu, 0)
    f = TrigPoly.constant(nu, 1.0) - c
    from fockspec.model import additive_kernel

    spec = decoupled_model(nu, -1.0, f + 0.5, additive_kernel(f))
    g = make_grid(1, 8)
    rep = compare_faddeev(spec, g, steps=60)
    assert rep.reference == pytest.approx([-1.0])
    assert rep.candidate == pytest.approx([-1.0], abs=1e-10)
    assert all(rep_bands_excluded(rep))


def rep_bands_excluded(rep):
    yield len(rep.excluded_reference) > 0
    yield all(abs(x + 1.0) > 1e-6 for x in rep.excluded_reference)


def test_decoupled_kernel_zero_v():
    assert SeparableKernel.zero(1).operator_eigenvalues().size == 0
