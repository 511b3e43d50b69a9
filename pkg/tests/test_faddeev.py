import numpy as np
import pytest

from fockspec.faddeev import (LAMBDA_TOL, SingularSystemError, assemble_A, assemble_K,
                              find_H_eigenvalues, mu, reconstruct_H_eigenvector, scan_mu,
                              t_eigenvalues)
from fockspec.model import ModelSpec, SeparableKernel, additive_kernel, decoupled_model
from fockspec.oracle import discretize_H, weighted_norm
from fockspec.spectrum import default_window, essential_spectrum, two_particle_branch
from fockspec.torus import TrigPoly, make_grid


def below_band_decoupled():
    """No interactions, ``w0 = -1`` below every band."""
    f = TrigPoly.constant(1, 1.0) - TrigPoly.cos_axis(1, 0)
    return decoupled_model(1, -1.0, f + 0.5, additive_kernel(f))


@pytest.fixture(scope="module")
def toy8(toy):
    """Toy model at n = 8 with its bands and the oracle eigenvalues outside them."""
    g = make_grid(1, 8)
    bands = essential_spectrum(toy, g, grid=g)
    ev = discretize_H(toy, g).eigenvalues()
    outside = [float(e) for e in ev if not bands.contains(e, tol=1e-6)]
    assert outside, "the toy model must have isolated eigenvalues"
    return g, bands, outside


# -- block structure ----------------------------------------------------------------------

def test_A_structural_zeros(toy):
    g = make_grid(1, 6)
    A = assemble_A(toy, g, -2.0)
    assert set(A.zero_blocks()) == {(0, 1), (0, 2), (1, 0), (2, 0)}
    K = assemble_K(toy, g, -2.0)
    assert set(K.zero_blocks()) == {(0, 2), (2, 0)}
    assert A.block(0, 0)[0, 0] == 1.0
    assert np.all(np.diag(A.block(1, 1)) != 0.0)


def test_free_case_blocks(free1):
    g = make_grid(1, 6)
    z = -2.0
    A = assemble_A(free1, g, z).matrix
    want = np.eye(A.shape[0])
    want[1:7, 1:7] = np.diag(free1.w1(g.points) - z)
    assert np.array_equal(A, want)
    K = assemble_K(free1, g, z)
    assert K.matrix[0, 0] == free1.w0 - z + 1.0
    K.matrix[0, 0] = 0.0
    assert np.all(K.matrix == 0.0)


def test_complex_z_gives_nonsingular_A(toy):
    g = make_grid(1, 8)
    for z in (1.5 + 0.5j, 1.5 + 1.0j, -3.0 + 1.0j):
        A = assemble_A(toy, g, z).matrix
        assert np.iscomplexobj(A)
        assert np.linalg.cond(A) < 1e8


def test_three_particle_band_rejected(toy):
    with pytest.raises(ValueError):
        assemble_A(toy, make_grid(1, 6), 1.0)


def test_frobenius_norms_under_refinement(toy):
    z = -2.0
    coarse, fine = ({**assemble_A(toy, make_grid(1, n), z).frobenius_norms(make_grid(1, n)),
                     **assemble_K(toy, make_grid(1, n), z).frobenius_norms(make_grid(1, n))}
                    for n in (8, 16))
    for name in ("K01", "K10", "K11", "K12", "K21", "K22"):
        assert coarse[name] > 0.0
        assert abs(fine[name] / coarse[name] - 1.0) < 1e-3, name
    # a multiplication block is not Hilbert-Schmidt: it grows like sqrt(N)
    assert fine["A11"] / coarse["A11"] == pytest.approx(np.sqrt(2.0), rel=0.05)


# -- lambda = 1 characterization ------------------------------------------------------------

def test_decoupled_eigenvalue_is_w0():
    spec = below_band_decoupled()
    g = make_grid(1, 8)
    assert find_H_eigenvalues(spec, g, steps=60) == [pytest.approx(-1.0, abs=1e-12)]
    lam = t_eigenvalues(spec, g, -1.0, 1)
    assert abs(lam[0] - 1.0) <= 1e-14


def test_lambda_one_at_oracle_eigenvalues(toy, toy8):
    g, _, outside = toy8
    for e in outside:
        lam = t_eigenvalues(toy, g, e, 1)
        assert abs(lam[0] - 1.0) <= 1e-8


def test_no_lambda_one_between_eigenvalues(toy, toy8):
    g, bands, outside = toy8
    lo, hi = default_window(toy, bands.three_particle)
    tested = 0
    for a, b in bands.complement((lo, hi)):
        for z in np.linspace(a, b, 9)[1:-1]:
            if min(abs(z - e) for e in outside) < 0.05:
                continue
            lam = t_eigenvalues(toy, g, z, 1)
            assert abs(lam[0] - 1.0) > 1e-3, z
            tested += 1
    assert tested >= 5


def test_scan_recovers_oracle(toy, toy8):
    g, bands, outside = toy8
    found = find_H_eigenvalues(toy, g, bands=bands, steps=200)
    assert len(found) == len(outside)
    assert np.abs(np.array(found) - np.array(outside)).max() <= 1e-8


def test_window_below_operator_bound_is_empty(toy, toy8):
    g, bands, _ = toy8
    lo, _ = default_window(toy, bands.three_particle)
    scan = scan_mu(toy, g, window=(lo - 10.0, lo), bands=bands, steps=60)
    assert scan.roots == []
    assert np.all(np.abs(scan.mu) > 1e-3)


def test_mu_is_real_off_the_bands(toy, toy8):
    g, _, outside = toy8
    assert abs(mu(toy, g, outside[0] - 0.3).imag) <= 1e-12


def test_reconstructed_eigenvector(toy, toy8):
    g, _, outside = toy8
    vec = reconstruct_H_eigenvector(toy, g, outside[0])
    assert vec.residual <= 1e-5
    assert np.array_equal(vec.f2, vec.f2.T)
    assert vec.symmetry_defect <= 1e-8
    assert abs(vec.lam - 1.0) <= LAMBDA_TOL


def test_printed_convention_misses_eigenvalues(toy, toy8):
    g, _, outside = toy8
    worst = max(abs(t_eigenvalues(toy, g, e, 1, convention="printed")[0] - 1.0) for e in outside)
    assert worst > 1e-4


def test_singular_near_channel_spectrum(toy):
    g = make_grid(1, 8)
    s = next(s for s in two_particle_branch(toy, g) if s.values)
    with pytest.raises(SingularSystemError):
        t_eigenvalues(toy, g, s.values[0])


def test_unknown_convention(toy):
    with pytest.raises(ValueError):
        assemble_K(toy, make_grid(1, 4), -2.0, convention="other")


def test_K22_vanishes_without_v2(toy):
    spec = ModelSpec(1, toy.w0, toy.w1, toy.v0, toy.v1, toy.w2, SeparableKernel.zero(1))
    K = assemble_K(spec, make_grid(1, 6), -2.0)
    assert np.all(K.block(2, 2) == 0.0) and np.all(K.block(1, 2) == 0.0)
    assert np.all(K.block(2, 1) == 0.0)


def test_decoupled_reconstruction_is_vacuum():
    spec = below_band_decoupled()
    vec = reconstruct_H_eigenvector(spec, make_grid(1, 8), -1.0)
    assert abs(abs(vec.f0) - 1.0) <= 1e-14
    assert np.all(vec.f1 == 0.0) and np.all(vec.f2 == 0.0)
    assert vec.residual <= 1e-14


def test_lifted_oracle_eigenvector_solves_system(toy, toy8):
    """An eigenvector of the discretized ``H``, lifted to ``(f0, f1, V~2 f2)``, solves ``A = K``."""
    g, _, outside = toy8
    D = discretize_H(toy, g)
    lam, U = D.eigh()
    N = g.size
    for e in outside:
        k = int(np.argmin(np.abs(lam - e)))
        nodes = D.to_nodes(U[:, k])
        f0, f1, f2 = nodes[0], nodes[1:1 + N], nodes[1 + N:].reshape(N, N)
        assert weighted_norm(g, f0, f1, f2) == pytest.approx(1.0, rel=1e-12)
        Vw = g.weight * toy.sqrt_kernel.matrix(g.points)
        phi = np.concatenate([[f0], f1, (f2 @ Vw.T).ravel()])
        A = assemble_A(toy, g, lam[k]).matrix
        K = assemble_K(toy, g, lam[k]).matrix
        assert np.abs(A @ phi - K @ phi).max() <= 1e-8 * np.abs(phi).max()
