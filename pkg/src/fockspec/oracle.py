"""Brute-force ground truth: direct Nystrom discretizations as dense matrices.

Both discretizations are assembled in symmetric-weight coordinates.
``C`` carries weight ``1``, ``L2(T^nu)`` carries ``sqrt(w)`` per node and
``L2((T^nu)^2)`` carries ``w`` per node pair, so self-adjoint operators become
symmetric matrices. ``H`` is further restricted to the symmetric two-particle
subspace in the reduced basis of pairs ``i <= j``. Off-diagonal pairs carry
``1/sqrt2`` normalization.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .friedrichs import CLIP, FiberSystem, band_edges, fiber_roots
from .model import ModelSpec, SeparableKernel
from .torus import TorusGrid

DIM_CAP = 5000


class DimensionCapError(ValueError):
    """The requested discretization exceeds the configured dimension cap."""


@dataclass
class DiscretizedOperator:
    """Dense symmetric matrix with its block layout.

    ``blocks`` names the diagonal blocks and their sizes. ``to_nodes`` maps
    coefficient vectors back to node values ``(f0, f1, f2)``.
    """

    matrix: np.ndarray
    blocks: list
    grid: TorusGrid
    scaling: np.ndarray
    basis: np.ndarray | None = None
    _eig: tuple | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def symmetry_defect(self) -> float:
        return float(np.abs(self.matrix - self.matrix.T).max())

    def eigh(self):
        if self._eig is None:
            self._eig = np.linalg.eigh(0.5 * (self.matrix + self.matrix.T))
        return self._eig

    def eigenvalues(self) -> np.ndarray:
        return self.eigh()[0]

    def to_nodes(self, vec) -> np.ndarray:
        """Node values of a coefficient vector (undoing basis and weights)."""
        full = vec if self.basis is None else self.basis @ vec
        return full / self.scaling


def sqrt_matrix_oracle(v2: SeparableKernel, grid: TorusGrid, rel_tol: float = 1e-10) -> np.ndarray:
    """Kernel samples of ``v^(1/2)`` from the node operator ``w * V``.

    The symmetric eigendecomposition clamps eigenvalues below ``rel_tol``
    times the largest to zero. Without the clamp, rounding noise in the null
    space enters the square root at the ``1e-6`` level.
    """
    V = v2.matrix(grid.points)
    w = grid.weight
    lam, U = np.linalg.eigh(w * V)
    top = max(float(np.abs(lam).max(initial=0.0)), 1e-300)
    lam = np.where(lam > rel_tol * top, lam, 0.0)
    return (U * np.sqrt(lam)) @ U.T / w


def discretize_h(spec: ModelSpec, p, grid: TorusGrid) -> DiscretizedOperator:
    """``(1 + n^nu)``-dimensional symmetric matrix of the fiber ``h(p)``."""
    sysm = FiberSystem(spec, p, grid)
    w = grid.weight
    N = grid.size
    h = np.zeros((N + 1, N + 1))
    h[0, 0] = sysm.w1p
    h[0, 1:] = np.sqrt(w) * sysm.v1 / np.sqrt(2.0)
    h[1:, 0] = h[0, 1:]
    h[1:, 1:] = np.diag(sysm.d) - w * spec.v2.matrix(grid.points)
    scaling = np.concatenate([[1.0], np.full(N, np.sqrt(w))])
    return DiscretizedOperator(h, [("H0", 1), ("H1", N)], grid, scaling)


def symmetric_pair_basis(N: int) -> np.ndarray:
    """Isometry from the reduced pair basis onto symmetric ``N x N`` arrays."""
    i, j = np.triu_indices(N)
    P = np.zeros((N * N, len(i)))
    cols = np.arange(len(i))
    diag = i == j
    P[i[diag] * N + j[diag], cols[diag]] = 1.0
    off = ~diag
    P[i[off] * N + j[off], cols[off]] = 1.0 / np.sqrt(2.0)
    P[j[off] * N + i[off], cols[off]] = 1.0 / np.sqrt(2.0)
    return P


def full_blocks(spec: ModelSpec, grid: TorusGrid, cap: int = DIM_CAP) -> dict:
    """Unreduced blocks of ``H`` in symmetric-weight coordinates.

    Keys: ``"H00"``, ``"H01"``, ``"H11"``, ``"H12"``, ``"H21"``, ``"W2"`` (the
    multiplication part of ``H22``), and ``"V1"`` and ``"V2"`` (the two
    partial integral operators, so ``H22 = W2 - V1 - V2``). Pair indices are
    row-major, ``p * N + q``.
    """
    N = grid.size
    full_dim = 1 + N + N * N
    if full_dim > cap:
        raise DimensionCapError(
            f"full discretization has dimension {full_dim} > cap {cap} "
            f"(nu={grid.nu}, n={grid.n})"
        )
    w = grid.weight
    X = grid.points
    v0 = spec.v0(X)
    v1 = spec.v1(X)
    wV = w * spec.v2.matrix(X)
    sw = np.sqrt(w)
    # H12 f2 (p) = int v1(s) f2(p, s) ds and H21 f1 = (v1 x f1 + f1 x v1) / 2;
    # they are adjoint on the symmetric subspace the basis projects onto
    rows = np.repeat(np.arange(N), N)
    cols = np.tile(np.arange(N), N)
    H12 = np.zeros((N, N * N))
    H12[rows, rows * N + cols] = sw * v1[cols]
    H21 = np.zeros((N * N, N))
    H21[rows * N + cols, cols] += 0.5 * sw * v1[rows]
    H21[rows * N + cols, rows] += 0.5 * sw * v1[cols]
    I = np.eye(N)
    return {
        "H00": np.array([[spec.w0]]),
        "H01": (sw * v0)[None, :],
        "H11": np.diag(spec.w1(X)),
        "H12": H12,
        "H21": H21,
        "W2": np.diag(spec.w2.matrix(X).ravel()),
        "V1": np.kron(wV, I),
        "V2": np.kron(I, wV),
    }


def discretize_H(spec: ModelSpec, grid: TorusGrid, cap: int = DIM_CAP) -> DiscretizedOperator:
    """Symmetric matrix of ``H`` on ``C + L2 + L2_sym`` (reduced pair basis).

    Node values are ordered ``f0, f1(x_i), f2(x_p, x_q)`` with ``f2`` stored
    row-major (``p * N + q``). ``cap`` bounds ``1 + n^nu + n^(2 nu)``.
    """
    b = full_blocks(spec, grid, cap)
    N = grid.size
    full_dim = 1 + N + N * N
    o1, o2 = 1, 1 + N
    Hs = np.zeros((full_dim, full_dim))
    Hs[0, 0] = b["H00"][0, 0]
    Hs[0, o1:o2] = b["H01"][0]
    Hs[o1:o2, 0] = b["H01"][0]
    Hs[o1:o2, o1:o2] = b["H11"]
    Hs[o1:o2, o2:] = b["H12"]
    Hs[o2:, o1:o2] = b["H21"]
    Hs[o2:, o2:] = b["W2"] - b["V1"] - b["V2"]
    P = symmetric_pair_basis(N)
    Q = np.zeros((full_dim, 1 + N + P.shape[1]))
    Q[:o2, :o2] = np.eye(o2)
    Q[o2:, o2:] = P
    Hr = Q.T @ Hs @ Q
    w = grid.weight
    scaling = np.concatenate([[1.0], np.full(N, np.sqrt(w)), np.full(N * N, w)])
    return DiscretizedOperator(Hr, [("H0", 1), ("H1", N), ("H2sym", P.shape[1])], grid,
                               scaling, basis=Q)


def apply_H(spec: ModelSpec, grid: TorusGrid, f0, f1, f2):
    """Discretized ``H`` applied to node values; returns ``(g0, g1, g2)``."""
    w = grid.weight
    X = grid.points
    v0, v1 = spec.v0(X), spec.v1(X)
    W2 = spec.w2.matrix(X)
    wV = w * spec.v2.matrix(X)
    g0 = spec.w0 * f0 + w * np.dot(v0, f1)
    g1 = v0 * f0 + spec.w1(X) * f1 + w * f2 @ v1
    g2 = 0.5 * (np.outer(v1, f1) + np.outer(f1, v1)) + W2 * f2 - wV @ f2 - f2 @ wV.T
    return g0, g1, g2


def weighted_norm(grid: TorusGrid, f0, f1, f2=None) -> float:
    w = grid.weight
    total = abs(f0) ** 2 + w * np.sum(np.abs(f1) ** 2)
    if f2 is not None:
        total += w * w * np.sum(np.abs(f2) ** 2)
    return float(np.sqrt(total))


# -- pairing reports -----------------------------------------------------------

@dataclass
class PairingReport:
    reference: list
    candidate: list
    pairs: list
    max_distance: float
    count_mismatch: bool
    unmatched_reference: list
    unmatched_candidate: list
    excluded_reference: list = field(default_factory=list)
    excluded_candidate: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.count_mismatch

    def as_records(self):
        return [{"reference": a, "candidate": b, "distance": abs(a - b)} for a, b in self.pairs]


def pair_sorted(reference, candidate) -> PairingReport:
    """Bijective pairing of two real multisets.

    When the counts agree, the sorted order is optimal. Otherwise pairs are
    matched greedily by distance and the rest are listed as unmatched.
    """
    a = sorted(float(x) for x in reference)
    b = sorted(float(x) for x in candidate)
    if len(a) == len(b):
        pairs = list(zip(a, b))
        um_a, um_b = [], []
    else:
        cand = [(abs(x - y), i, j) for i, x in enumerate(a) for j, y in enumerate(b)]
        cand.sort()
        used_a, used_b, pairs = set(), set(), []
        for _, i, j in cand:
            if i not in used_a and j not in used_b:
                used_a.add(i)
                used_b.add(j)
                pairs.append((a[i], b[j]))
        pairs.sort()
        um_a = [x for i, x in enumerate(a) if i not in used_a]
        um_b = [y for j, y in enumerate(b) if j not in used_b]
    dist = max((abs(x - y) for x, y in pairs), default=0.0)
    return PairingReport(a, b, pairs, dist, len(a) != len(b), um_a, um_b)


def compare_channel(spec: ModelSpec, p, grid: TorusGrid, window=None, steps: int = 400
                    ) -> PairingReport:
    """Oracle eigenvalues of ``h(p)`` outside the band against fiber roots."""
    edges = band_edges(spec, p)
    sysm = FiberSystem(spec, p, grid, edges=edges)
    ev = discretize_h(spec, p, grid).eigenvalues()
    outside = (ev < edges.m_p - CLIP) | (ev > edges.M_p + CLIP)
    ref = ev[outside]
    if window is not None:
        lo, hi = window
        ref = ref[(ref >= lo) & (ref <= hi)]
        pieces = [(a, b) for a, b in [(lo, min(hi, edges.m_p - CLIP)),
                                      (max(lo, edges.M_p + CLIP), hi)] if a < b]
        roots = []
        for piece in pieces:
            roots += fiber_roots(spec, p, grid, piece, steps=steps, system=sysm).eigenvalues
    else:
        roots = fiber_roots(spec, p, grid, None, steps=steps, system=sysm).eigenvalues
    return pair_sorted(ref, roots)


def compare_faddeev(spec: ModelSpec, grid: TorusGrid, window=None, bands=None,
                    cap: int = DIM_CAP, **kwargs) -> PairingReport:
    """Faddeev roots against oracle eigenvalues of ``H`` outside ``sigma(H^)``.

    The reference set for the channel spectrum is the merged band structure
    on a sweep equal to the quadrature grid.
    """
    from .faddeev import find_H_eigenvalues
    from .spectrum import default_window, essential_spectrum

    if bands is None:
        bands = essential_spectrum(spec, grid, grid=grid)
    if window is None:
        window = default_window(spec, bands.three_particle)
    ev = discretize_H(spec, grid, cap=cap).eigenvalues()
    lo, hi = window
    ev = ev[(ev >= lo) & (ev <= hi)]
    inside = np.array([bands.contains(e, tol=CLIP) for e in ev], dtype=bool)
    roots = find_H_eigenvalues(spec, grid, window, bands=bands, **kwargs)
    roots_in = [r for r in roots if bands.contains(r, tol=CLIP)]
    roots_out = [r for r in roots if not bands.contains(r, tol=CLIP)]
    report = pair_sorted(ev[~inside], roots_out)
    report.excluded_reference = [float(x) for x in ev[inside]]
    report.excluded_candidate = roots_in
    return report
