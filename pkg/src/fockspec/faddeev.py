"""Faddeev-type system ``A(z) Phi = K(z) Phi`` on ``C + L2(T^nu) + L2((T^nu)^2)``.

The unknowns are node values ``Phi = (f0, f1, f2~)``, where
``f2~ = V~2 f2`` and ``f2~`` is flattened row-major (``p * N + q``).
``z`` outside ``sigma(H^)`` is an eigenvalue of the discretized ``H`` exactly
when ``T(z) = A(z)^(-1) K(z)`` has the eigenvalue ``1``.

Two conventions are available for the blocks ``K12`` and ``K22``.
``"consistent"`` is the default and keeps the argument order that follows
from ``(V1 f2)(p, q) = (V~2 f2~)(q, p)`` for symmetric ``f2``. It gives
``K12 g(p) = -int v1(s) R(p,s) int v~(p,t) g(s,t) dt ds`` and
``K22 = V~2 R T V~2``, where ``T`` swaps the two arguments.
``"printed"`` uses ``+int v1(s) R(p,s) int v~(p,t) g(t,s)`` and
``V~2 R V~1``. The oracle tests show that only ``"consistent"``
reproduces the spectrum of ``H``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .friedrichs import CLIP
from .model import ModelSpec
from .oracle import apply_H, weighted_norm
from .torus import TorusGrid

LAMBDA_TOL = 1e-6
MU_TOL = 1e-8


class SingularSystemError(RuntimeError):
    """``A(z)`` is numerically singular (``z`` too close to ``sigma(H^)``)."""


@dataclass
class BlockMatrix:
    """Dense matrix with the ``(1, N, N^2)`` block layout and block labels."""

    matrix: np.ndarray
    sizes: tuple
    labels: dict = field(default_factory=dict)

    @property
    def offsets(self):
        return np.concatenate([[0], np.cumsum(self.sizes)])

    def block(self, i: int, j: int) -> np.ndarray:
        o = self.offsets
        return self.matrix[o[i]:o[i + 1], o[j]:o[j + 1]]

    def zero_blocks(self, tol: float = 0.0):
        return [(i, j) for i in range(3) for j in range(3)
                if np.abs(self.block(i, j)).max(initial=0.0) <= tol]

    def frobenius_norms(self, grid: TorusGrid) -> dict:
        """Frobenius norms of the blocks in symmetric-weight coordinates.

        An integral-operator block then approximates its Hilbert-Schmidt norm.
        """
        sw = np.concatenate([[1.0], np.full(self.sizes[1], np.sqrt(grid.weight)),
                             np.full(self.sizes[2], grid.weight)])
        scaled = self.matrix * sw[:, None] / sw[None, :]
        o = self.offsets
        out = {}
        for (i, j), name in self.labels.items():
            out[name] = float(np.linalg.norm(scaled[o[i]:o[i + 1], o[j]:o[j + 1]]))
        return out


def _node_data(spec: ModelSpec, grid: TorusGrid, z):
    X = grid.points
    w = grid.weight
    W2 = spec.w2.matrix(X)
    three_lo, three_hi = float(W2.min()), float(W2.max())
    if complex(z).imag == 0.0 and three_lo <= complex(z).real <= three_hi:
        raise ValueError(f"z = {z} lies in the three-particle band [{three_lo:.12g}, {three_hi:.12g}]")
    R = 1.0 / (W2 - z)
    Vw = w * spec.sqrt_kernel.matrix(X)
    return X, w, R, Vw


def _check_three_particle(spec: ModelSpec, z):
    from .spectrum import three_particle_branch

    m, M = three_particle_branch(spec)
    if complex(z).imag == 0.0 and m <= complex(z).real <= M:
        raise ValueError(f"z = {z} lies in the three-particle band [{m:.12g}, {M:.12g}]")


def assemble_A(spec: ModelSpec, grid: TorusGrid, z, check: bool = True) -> BlockMatrix:
    """Nystrom matrix of ``A(z)``.

    Blocks: ``A00 = 1``; ``A11`` is multiplication by
    ``w1(p) - z - 1/2 int v1^2 R``; ``A12`` and ``A21`` couple through
    ``v~``; and ``A22 = I - V~2 R V~2``.
    """
    if check:
        _check_three_particle(spec, z)
    X, w, R, Vw = _node_data(spec, grid, z)
    N = grid.size
    v1 = spec.v1(X)
    w1 = spec.w1(X)
    D = 1 + N + N * N
    A = np.zeros((D, D), dtype=np.result_type(R, float))
    o1, o2 = 1, 1 + N
    A[0, 0] = 1.0
    A[np.arange(o1, o2), np.arange(o1, o2)] = w1 - z - 0.5 * w * (R @ (v1**2))
    U = w * v1[None, :] * R                      # U[p, s] = w v1(s) R(p, s)
    A12 = U @ Vw.T                               # A12[p, t]
    A21 = 0.5 * (v1[None, :] * R) @ Vw           # A21[p, q] = 1/2 sum_s v1 R Vw[s, q]
    rows = np.repeat(np.arange(N), N)
    cols = np.tile(np.arange(N), N)
    A[o1 + rows, o2 + rows * N + cols] = A12.ravel()
    A[o2 + rows * N + cols, o1 + rows] = A21.ravel()
    blocks = np.einsum("ts,ps,sq->ptq", Vw, R, Vw)
    A22 = np.eye(N * N, dtype=A.dtype)
    for p in range(N):
        A22[p * N:(p + 1) * N, p * N:(p + 1) * N] -= blocks[p]
    A[o2:, o2:] = A22
    labels = {(0, 0): "A00", (1, 1): "A11", (1, 2): "A12", (2, 1): "A21", (2, 2): "A22"}
    return BlockMatrix(A, (1, N, N * N), labels)


def assemble_K(spec: ModelSpec, grid: TorusGrid, z, convention: str = "consistent",
               check: bool = True) -> BlockMatrix:
    """Nystrom matrix of ``K(z)``.

    ``K00 = w0 - z + 1``; ``K01 = H01``; ``K10 = -H10``;
    ``K11(p, s) = 1/2 v1(p) v1(s) R(p, s)``;
    ``K21 = -1/2 v1(p) v~(s, q) R(p, s)``. ``K12`` and ``K22`` follow
    ``convention`` (see the module docstring).
    """
    if convention not in ("consistent", "printed"):
        raise ValueError(f"unknown convention {convention!r}")
    if check:
        _check_three_particle(spec, z)
    X, w, R, Vw = _node_data(spec, grid, z)
    N = grid.size
    v0, v1 = spec.v0(X), spec.v1(X)
    D = 1 + N + N * N
    K = np.zeros((D, D), dtype=np.result_type(R, float))
    o1, o2 = 1, 1 + N
    K[0, 0] = spec.w0 - z + 1.0
    K[0, o1:o2] = w * v0
    K[o1:o2, 0] = -v0
    K[o1:o2, o1:o2] = 0.5 * v1[:, None] * w * v1[None, :] * R
    core = w * v1[None, :] * R                   # core[p, s]
    if convention == "consistent":
        # K12[p, s*N + t] = -w v1(s) R(p, s) Vw[p, t]
        K12 = -np.einsum("ps,pt->pst", core, Vw).reshape(N, N * N)
    else:
        # K12[p, t*N + s] = +w v1(s) R(p, s) Vw[p, t]
        K12 = np.einsum("ps,pt->pts", core, Vw).reshape(N, N * N)
    K[o1:o2, o2:] = K12
    # K21[(p, q), s] = -1/2 v1(p) Vw[s, q] R(p, s)
    K[o2:, o1:o2] = (-0.5 * v1[:, None, None] * Vw.T[None, :, :] * R[:, None, :]).reshape(N * N, N)
    if convention == "consistent":
        # K22[(p, q), (s, t)] = Vw[q, s] R[p, s] Vw[p, t]
        K22 = np.einsum("qs,ps,pt->pqst", Vw, R, Vw)
    else:
        # K22[(p, q), (s, t)] = Vw[q, t] R[p, t] Vw[p, s]
        K22 = np.einsum("qt,pt,ps->pqst", Vw, R, Vw)
    K[o2:, o2:] = K22.reshape(N * N, N * N)
    labels = {(0, 0): "K00", (0, 1): "K01", (1, 0): "K10", (1, 1): "K11",
              (1, 2): "K12", (2, 1): "K21", (2, 2): "K22"}
    return BlockMatrix(K, (1, N, N * N), labels)


def _T(spec, grid, z, convention, check=True):
    A = assemble_A(spec, grid, z, check=check).matrix
    K = assemble_K(spec, grid, z, convention, check=check).matrix
    try:
        return np.linalg.solve(A, K)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"A(z) is singular at z = {z}") from exc


def t_eigenvalues(spec: ModelSpec, grid: TorusGrid, z, count: int = 3,
                  convention: str = "consistent", margin_tol: float = 1e-8,
                  check: bool = True) -> np.ndarray:
    """The ``count`` eigenvalues of ``T(z)`` nearest ``1``, nearest first.

    With ``check=True``, ``z`` must keep the invertibility margin of
    ``A(z)`` above ``margin_tol``.
    """
    if check and complex(z).imag == 0.0:
        from .spectrum import a_invertibility_margin

        margin = a_invertibility_margin(spec, float(np.real(z)), grid)
        if margin.value <= margin_tol:
            raise SingularSystemError(
                f"z = {z} is within the invertibility margin of sigma(H^) "
                f"(margin {margin.value:.3e})"
            )
    lam = np.linalg.eigvals(_T(spec, grid, z, convention, check=check))
    order = np.argsort(np.abs(lam - 1.0))
    return lam[order[:count]]


def mu(spec, grid, z, convention="consistent") -> complex:
    """Distance function ``mu(z)``: the eigenvalue of ``T(z)`` nearest 1, minus 1."""
    return complex(t_eigenvalues(spec, grid, z, 1, convention, check=False)[0] - 1.0)


@dataclass
class FaddeevScan:
    z: np.ndarray
    mu: np.ndarray
    roots: list
    multiplicities: list
    rejected: list


def scan_mu(spec: ModelSpec, grid: TorusGrid, window=None, bands=None, steps: int = 400,
            convention: str = "consistent", tol: float = MU_TOL) -> FaddeevScan:
    """Solve ``mu(z) = 0`` on ``window`` minus the merged bands of ``sigma(H^)``.

    Candidates are sign changes of ``Re mu`` (refined with Brent's method)
    and local minima of ``|mu|`` (refined by bounded Brent minimization). A candidate
    is accepted when ``|mu| <= tol``. The multiplicity is the number of
    eigenvalues of ``T`` within ``LAMBDA_TOL`` of 1.
    """
    from .spectrum import default_window, essential_spectrum

    if bands is None:
        bands = essential_spectrum(spec, grid, grid=grid)
    if window is None:
        window = default_window(spec, bands.three_particle)
    pieces = bands.complement(window)
    total = sum(b - a for a, b in pieces) or 1.0
    zs_all, mus_all, cands = [], [], []

    def f(t):
        return mu(spec, grid, t, convention)

    for a, b in pieces:
        k = max(16, int(round(steps * (b - a) / total)))
        zs = np.linspace(a, b, k + 1)
        ms = np.array([f(t) for t in zs])
        zs_all.append(zs)
        mus_all.append(ms)
        re = ms.real
        for i in range(k):
            if re[i] == 0.0:
                cands.append(zs[i])
            elif np.sign(re[i]) != np.sign(re[i + 1]):
                try:
                    cands.append(brentq(lambda t: f(t).real, zs[i], zs[i + 1], xtol=1e-13,
                                        maxiter=200))
                except ValueError:
                    pass
        am = np.abs(ms)
        for i in range(1, k):
            if am[i] <= am[i - 1] and am[i] <= am[i + 1] and am[i] < max(am[i - 1], am[i + 1]):
                # bounded search: a plateau of |mu| is not a strict bracket
                res = minimize_scalar(lambda t: abs(f(t)), bounds=(zs[i - 1], zs[i + 1]),
                                      method="bounded", options={"xatol": 1e-12})
                if zs[i - 1] <= res.x <= zs[i + 1]:
                    cands.append(float(res.x))
        if re[-1] == 0.0:
            cands.append(zs[-1])
    accepted, rejected = [], []
    for c in sorted(cands):
        val = abs(f(c))
        if val > tol:
            rejected.append((float(c), float(val)))
        elif accepted and abs(c - accepted[-1][0]) <= 1e-7:
            if val < accepted[-1][1]:          # keep the sharper of two nearby candidates
                accepted[-1] = (float(c), val)
        else:
            accepted.append((float(c), val))
    roots, mults = [], []
    for c, _ in accepted:
        lam = np.linalg.eigvals(_T(spec, grid, c, convention, check=False))
        roots.append(c)
        mults.append(max(1, int(np.sum(np.abs(lam - 1.0) <= LAMBDA_TOL))))
    return FaddeevScan(np.concatenate(zs_all) if zs_all else np.zeros(0),
                       np.concatenate(mus_all) if mus_all else np.zeros(0, complex),
                       roots, mults, rejected)


def find_H_eigenvalues(spec: ModelSpec, grid: TorusGrid, window=None, bands=None,
                       steps: int = 400, convention: str = "consistent") -> list:
    """Eigenvalues of the discretized ``H`` outside ``sigma(H^)`` via ``lambda = 1``.

    Roots are repeated by multiplicity.
    """
    scan = scan_mu(spec, grid, window, bands, steps, convention)
    return [r for r, m in zip(scan.roots, scan.multiplicities) for _ in range(m)]


@dataclass
class HEigenvector:
    z: float
    f0: complex | float
    f1: np.ndarray
    f2: np.ndarray
    lam: complex
    residual: float
    symmetry_defect: float


def reconstruct_H_eigenvector(spec: ModelSpec, grid: TorusGrid, z, convention: str = "consistent",
                              gap_tol: float = 1e-8) -> HEigenvector:
    """Eigenvector of the discretized ``H`` from the ``lambda = 1`` eigenvector of ``T``.

    ``Phi = (f0, f1, f2~)`` is mapped back with
    ``f2 = R (T V~2 f2~ + V~2 f2~ - H21 f1)``, where ``T`` is the swap of
    arguments, and ``f2`` is then symmetrized. If two eigenvalues of ``T``
    lie within ``gap_tol`` of each other near 1, the extraction is
    ill-conditioned and :class:`SingularSystemError` is raised.
    """
    X, w, R, Vw = _node_data(spec, grid, z)
    N = grid.size
    Tm = _T(spec, grid, z, convention, check=False)
    lam, vecs = np.linalg.eig(Tm)
    order = np.argsort(np.abs(lam - 1.0))
    if len(lam) > 1 and abs(lam[order[1]] - lam[order[0]]) < gap_tol:
        raise SingularSystemError(
            f"eigenvalue 1 of T({z}) is nearly degenerate "
            f"(gap {abs(lam[order[1]] - lam[order[0]]):.3e})"
        )
    phi = vecs[:, order[0]]
    k = np.argmax(np.abs(phi))
    phi = phi * (abs(phi[k]) / phi[k])
    if complex(z).imag == 0.0:
        phi = phi.real
    f0 = phi[0]
    f1 = phi[1:1 + N]
    ft2 = phi[1 + N:].reshape(N, N)
    v1 = spec.v1(X)
    g = ft2 @ Vw.T                               # (V~2 f2~)(p, q)
    H21 = 0.5 * (np.outer(v1, f1) + np.outer(f1, v1))
    f2 = R * (g.T + g - H21)
    f2s = 0.5 * (f2 + f2.T)
    sym = float(np.abs(f2 - f2s).max() / max(np.abs(f2).max(), 1e-300))
    norm = weighted_norm(grid, f0, f1, f2s)
    f0, f1, f2s = f0 / norm, f1 / norm, f2s / norm
    g0, g1, g2 = apply_H(spec, grid, f0, f1, f2s)
    res = weighted_norm(grid, g0 - z * f0, g1 - z * f1, g2 - z * f2s)
    return HEigenvector(float(np.real(z)) if complex(z).imag == 0 else z,
                        f0, f1, f2s, complex(lam[order[0]]), res, sym)
