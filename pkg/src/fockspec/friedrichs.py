"""Fibers ``h(p)`` of the channel operator (generalized Friedrichs models).

Every fiber lives on ``C + L2(T^nu)``. Its determinant ``det[E + A0(p; z)]`` is
evaluated either by dense Nystrom assembly or through an exact low-rank
compression. Write ``B = sqrt(w) * psi`` for the square-root factors sampled on
the grid and let ``B = Q S V^T`` be its thin SVD. The node-level operator
``w * v~`` is then ``Q diag(s^2) Q^T``. Every nontrivial block of the Nystrom
matrix factors through ``range(Q) + span{v1}``, so the ``(1 + n^nu)``-dimensional
determinant, singular values and inertia follow from a
``(1 + rank)``-dimensional symmetric matrix
``Bc(z) = [[D0, (G m)^T / sqrt2], [G m / sqrt2, I - G Mq G]]``.
Here ``G = diag(s^2)`` and ``Mq, m`` are resolvent moments of ``Q`` and
``sqrt(w) v1``.

For real ``z`` below the band, the number of negative eigenvalues of ``Bc(z)``
equals the number of eigenvalues of the discretized ``h(p)`` below ``z``.
Above the band the two counts differ by the constant ``n^nu``. Root finding
uses this monotone count as a multiplicity-aware safeguard next to the
sign-change and ``|det|``-minimum detectors.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from ._kernels import resolvent_moments
from ._search import golden_coordinate_min
from .model import ModelSpec
from .torus import TWO_PI, TorusGrid, make_grid, wrap

CLIP = 1e-6
ROOT_TOL = 1e-10
MIN_ABS_DET = 1e-9


class BandOverlapError(ValueError):
    """``z`` (or a search window) meets the fiber band ``[m(p), M(p)]``."""


class NotSeparableFamily(ValueError):
    """The closed-form Delta functions do not apply to this model."""


class SpuriousRootError(RuntimeError):
    """No numerical null space at the requested root."""


@dataclass(frozen=True)
class BandEdges:
    p: np.ndarray
    m_p: float
    M_p: float

    @property
    def interval(self):
        return (self.m_p, self.M_p)

    def contains(self, z, margin: float = 0.0) -> bool:
        z = complex(z)
        return z.imag == 0.0 and self.m_p - margin <= z.real <= self.M_p + margin


@dataclass
class FiberDeterminant:
    p: np.ndarray
    z: complex | float
    value: complex | float
    delta_values: np.ndarray | None = None
    method: str = "compressed"

    @property
    def delta_product(self):
        return None if self.delta_values is None else np.prod(self.delta_values)

    @property
    def product_defect(self):
        """Relative difference between ``value`` and the Delta product."""
        if self.delta_values is None:
            return None
        prod = self.delta_product
        return abs(self.value - prod) / max(abs(self.value), abs(prod), 1e-300)


def _as_point(spec: ModelSpec, p) -> np.ndarray:
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if p.shape != (spec.nu,):
        raise ValueError(f"point must have {spec.nu} components, got shape {p.shape}")
    return wrap(p)


def _w2_rows(spec: ModelSpec, p) -> tuple[np.ndarray, callable]:
    """``w2(p, .)`` as a function of node arrays, with ``p`` fixed."""
    left = spec.w2.left_matrix(p)

    def f(Q):
        return spec.w2.right_matrix(Q) @ left

    return left, f


def band_edges_batch(spec: ModelSpec, P, n: int = 32, candidates: int = 4,
                     chunk: int = 256) -> list:
    """Band edges for each row of ``P``.

    Dense sampling on an ``n``-point-per-axis grid (``n >= 32``) picks the
    best ``candidates`` nodes per fiber. A batched cyclic golden-section
    search then refines all fibers at once.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    if P.shape[1] != spec.nu:
        raise ValueError(f"points must have {spec.nu} components, got shape {P.shape}")
    P = wrap(P)
    n = max(int(n), 32)
    grid = make_grid(spec.nu, n)
    right = spec.w2.right_matrix(grid.points)
    h = TWO_PI / n
    out = []
    for start in range(0, len(P), chunk):
        Pc = P[start:start + chunk]
        left = spec.w2.left_matrix(Pc)
        vals = right @ left.T
        order = np.argsort(vals, axis=0)
        c = min(candidates, grid.size)
        lo_idx = order[:c].T.ravel()
        hi_idx = order[::-1][:c].T.ravel()
        rows = np.repeat(left, c, axis=0)

        def f(X, idx, rows=rows):
            return np.sum(spec.w2.right_matrix(X) * rows[idx], axis=1)

        def g(X, idx, rows=rows):
            return -np.sum(spec.w2.right_matrix(X) * rows[idx], axis=1)

        _, flo = golden_coordinate_min(f, grid.points[lo_idx], h)
        _, fhi = golden_coordinate_min(g, grid.points[hi_idx], h)
        flo = flo.reshape(len(Pc), c).min(axis=1)
        fhi = (-fhi).reshape(len(Pc), c).max(axis=1)
        m_p = np.minimum(flo, vals.min(axis=0))
        M_p = np.maximum(fhi, vals.max(axis=0))
        out += [BandEdges(p=p, m_p=float(a), M_p=float(b)) for p, a, b in zip(Pc, m_p, M_p)]
    return out


def band_edges(spec: ModelSpec, p, n: int = 32, candidates: int = 4) -> BandEdges:
    """``m(p) = min_q w2(p, q)`` and ``M(p) = max_q w2(p, q)``.

    Dense sampling on an ``n``-point-per-axis grid (``n >= 32``) is followed
    by golden-section refinement of the best few nodes, coordinate by
    coordinate.
    """
    return band_edges_batch(spec, [_as_point(spec, p)], n, candidates)[0]


def curvature_bound(spec: ModelSpec, p) -> float:
    """Bound on the Hessian norm of ``q -> w2(p, q)`` from its coefficients."""
    left = np.abs(spec.w2.left_matrix(p))
    per_term = [
        float(np.sum((np.abs(r.cos) + np.abs(r.sin)) * np.sum(r.ks.astype(float) ** 2, axis=1)))
        for _, r in spec.w2.terms
    ]
    return float(np.dot(left, per_term)) if per_term else 0.0


def operator_bound(spec: ModelSpec) -> float:
    """Crude bound ``R = 2 (max|w1| + |v1|_inf (2pi)^(nu/2) + r max_k int phi_k^2)``.

    Sup norms use the coefficient-sum bound, so ``R`` is a safe overestimate.
    """
    def sup(f):
        return float(np.abs(f.cos).sum() + np.abs(f.sin).sum())

    phi = spec.v2.symmetric_factors()
    top = max((f.inner(f) for f in phi), default=0.0)
    return 2.0 * (sup(spec.w1) + sup(spec.v1) * TWO_PI ** (spec.nu / 2) + len(phi) * top)


class FiberSystem:
    """Node data of ``h(p)`` on a quadrature grid and the compressed matrix."""

    def __init__(self, spec: ModelSpec, p, grid: TorusGrid, edges: BandEdges | None = None):
        self.spec = spec
        self.p = _as_point(spec, p)
        self.grid = grid
        w = grid.weight
        X = grid.points
        self.w1p = float(spec.w1(self.p))
        self.d = spec.w2.right_matrix(X) @ spec.w2.left_matrix(self.p)
        self.v1 = spec.v1(X)
        self.psi = spec.sqrt_kernel.factor_matrix(X)
        if self.psi.shape[1]:
            U, s, _ = np.linalg.svd(np.sqrt(w) * self.psi, full_matrices=False)
            keep = s > 1e-13 * max(1.0, float(s.max()))
            self.Q, self.gamma = U[:, keep], s[keep] ** 2
        else:
            self.Q, self.gamma = np.zeros((grid.size, 0)), np.zeros(0)
        self.F = np.column_stack([self.Q, np.sqrt(w) * self.v1])
        self._edges = edges
        self._memo = None

    @property
    def rank(self) -> int:
        return self.Q.shape[1]

    @property
    def edges(self) -> BandEdges:
        if self._edges is None:
            self._edges = band_edges(self.spec, self.p)
        return self._edges

    def in_band(self, z) -> bool:
        """Whether real ``z`` lies in ``[m(p), M(p)]``.

        Node extremes give an inner bound on the band. A Taylor bound at the
        true extremum, where the gradient vanishes, gives an outer one:
        ``m(p) >= min_nodes - C2 nu (h/2)^2 / 2``. The refined band edges are
        computed only when ``z`` falls between the two bounds.
        """
        z = complex(z)
        if z.imag != 0.0:
            return False
        z = z.real
        lo, hi = float(self.d.min()), float(self.d.max())
        if lo <= z <= hi:
            return True
        if self._edges is None:
            h = TWO_PI / self.grid.n
            delta = 0.5 * curvature_bound(self.spec, self.p) * self.spec.nu * (0.5 * h) ** 2
            if z < lo - delta or z > hi + delta:
                return False
        return self.edges.contains(z)

    def check_outside(self, z) -> None:
        for zz in np.atleast_1d(z):
            if self.in_band(zz):
                raise BandOverlapError(
                    f"z = {zz} lies in the band [{self.edges.m_p:.12g}, {self.edges.M_p:.12g}] "
                    f"of the fiber at p = {self.p.tolist()}"
                )

    def moments(self, zs) -> np.ndarray:
        return resolvent_moments(self.F, self.d, np.atleast_1d(zs))

    def _blocks(self, zs):
        zs = np.atleast_1d(zs)
        mom = self.moments(zs)
        k = self.rank
        D0 = self.w1p - zs - 0.5 * mom[:, k, k]
        G = self.gamma
        mv = G[None, :] * mom[:, :k, k]
        inner = np.eye(k)[None] - G[None, :, None] * mom[:, :k, :k] * G[None, None, :]
        return D0, mv, inner

    def balanced(self, zs) -> np.ndarray:
        """Symmetric compressed matrices ``Bc(z)``, shape ``(Z, 1+k, 1+k)``.

        The last multi-point batch is memoized: a root scan evaluates the
        determinant and the eigenvalue count on the same mesh.
        """
        zs = np.atleast_1d(zs)
        if len(zs) > 1 and self._memo is not None and self._memo[0].shape == zs.shape \
                and self._memo[0].dtype == zs.dtype and np.array_equal(self._memo[0], zs):
            return self._memo[1]
        out = self._balanced(zs)
        if len(zs) > 1:
            out.setflags(write=False)
            self._memo = (zs.copy(), out)
        return out

    def _balanced(self, zs) -> np.ndarray:
        D0, mv, inner = self._blocks(zs)
        k = self.rank
        out = np.empty((len(D0), k + 1, k + 1), dtype=np.result_type(D0, inner))
        out[:, 0, 0] = D0
        out[:, 0, 1:] = mv / np.sqrt(2.0)
        out[:, 1:, 0] = mv / np.sqrt(2.0)
        out[:, 1:, 1:] = inner
        return out

    def printed(self, zs) -> np.ndarray:
        """Compressed matrices with the unbalanced printed coupling (1 and 1/2)."""
        D0, mv, inner = self._blocks(zs)
        k = self.rank
        out = np.empty((len(D0), k + 1, k + 1), dtype=np.result_type(D0, inner))
        out[:, 0, 0] = D0
        out[:, 0, 1:] = mv
        out[:, 1:, 0] = 0.5 * mv
        out[:, 1:, 1:] = inner
        return out

    def det(self, zs) -> np.ndarray:
        vals = np.linalg.det(self.balanced(zs))
        return vals.real if np.isrealobj(np.atleast_1d(zs)) else vals

    def negative_count(self, zs) -> np.ndarray:
        """Number of negative eigenvalues of ``Bc(z)`` for real ``z``."""
        ev = np.linalg.eigvalsh(self.balanced(np.asarray(zs, dtype=float)))
        return (ev < 0).sum(axis=1)

    def sigma_min(self, zs) -> np.ndarray:
        """Smallest singular value of the full Nystrom matrix ``E + A0(p; z)``."""
        sv = np.linalg.svd(self.balanced(zs), compute_uv=False)
        return np.minimum(1.0, sv[:, -1])

    def apply_h(self, f0, f1):
        """Discretized ``h(p)`` applied to node values ``(f0, f1)``."""
        w = self.grid.weight
        phi = self.spec.v2.right_matrix(self.grid.points) if self.spec.v2.terms else None
        g0 = self.w1p * f0 + w * np.dot(self.v1, f1) / np.sqrt(2.0)
        g1 = self.v1 * f0 / np.sqrt(2.0) + self.d * f1
        if phi is not None:
            left = self.spec.v2.left_matrix(self.grid.points)
            g1 = g1 - w * left @ (phi.T @ f1)
        return g0, g1


def assemble_A0(spec: ModelSpec, p, z, grid: TorusGrid, balanced: bool = True,
                system: FiberSystem | None = None) -> np.ndarray:
    """Dense Nystrom matrix of ``A0(p; z)`` in symmetric-weight coordinates.

    Coordinates are ``(g0, sqrt(w) g1(x_j))``. With ``balanced=True`` both
    couplings carry ``1/sqrt(2)`` so the matrix is symmetric for real ``z``.
    With ``balanced=False`` the printed factors ``1`` and ``1/2`` are used. The
    two forms are diagonally similar after adding the identity, so their
    determinants agree.
    """
    sysm = system if system is not None else FiberSystem(spec, p, grid)
    sysm.check_outside(z)
    w = grid.weight
    R = 1.0 / (sysm.d - z)
    Vt = sysm.psi @ sysm.psi.T
    N = grid.size
    u = w ** 1.5 * (Vt @ (sysm.v1 * R))
    A = np.empty((N + 1, N + 1), dtype=np.result_type(R, float))
    A[0, 0] = sysm.w1p - z - 0.5 * w * np.sum(sysm.v1**2 * R) - 1.0
    if balanced:
        A[0, 1:] = u / np.sqrt(2.0)
        A[1:, 0] = u / np.sqrt(2.0)
    else:
        A[0, 1:] = u
        A[1:, 0] = 0.5 * u
    A[1:, 1:] = -(w**2) * (Vt * R[None, :]) @ Vt
    return A


def det_E_plus_A0(spec: ModelSpec, p, z, grid: TorusGrid, method: str = "compressed",
                  with_deltas: bool | None = None,
                  system: FiberSystem | None = None) -> FiberDeterminant:
    """Fredholm determinant ``det[E + A0(p; z)]`` of the Nystrom matrix.

    ``method="dense"`` factors the full ``(1 + n^nu)`` matrix;
    ``"compressed"`` uses the exact low-rank reduction. For models in the
    cosine-difference family the Delta values are attached as well.
    """
    sysm = system if system is not None else FiberSystem(spec, p, grid)
    sysm.check_outside(z)
    if method == "dense":
        M = assemble_A0(spec, p, z, grid, system=sysm)
        M[np.diag_indices_from(M)] += 1.0
        sign, logdet = np.linalg.slogdet(M)
        value = sign * np.exp(logdet)
    elif method == "compressed":
        value = sysm.det(np.array([z]))[0]
    else:
        raise ValueError(f"unknown method {method!r}")
    if complex(z).imag == 0.0:
        value = float(np.real(value))
    deltas = None
    if with_deltas is None:
        with_deltas = cosine_coupling(spec) is not None
    if with_deltas:
        deltas = separable_deltas(spec, sysm.p, z, grid, system=sysm)
    return FiberDeterminant(sysm.p, z, value, deltas, method)


# -- closed-form path for the cosine-difference family ------------------------

def cosine_coupling(spec: ModelSpec, samples: int = 32, seed: int = 7) -> float | None:
    """``kappa`` with ``v2 = kappa * sum_i cos(p_i - q_i)``, else ``None``.

    Also requires ``v1`` even in each coordinate, which the closed form needs.
    Evenness of ``w2`` is checked per fiber.
    """
    nu = spec.nu
    rng = np.random.default_rng(seed)
    P = rng.uniform(-np.pi, np.pi, (samples, nu))
    Q = rng.uniform(-np.pi, np.pi, (samples, nu))
    ref = np.cos(P[:, None, :] - Q[None, :, :]).sum(-1)
    K = spec.v2.matrix(P, Q)
    kappa = float(np.sum(K * ref) / np.sum(ref * ref))
    if kappa <= 0 or np.abs(K - kappa * ref).max() > 1e-10 * max(1.0, kappa):
        return None
    v = spec.v1(P)
    for i in range(nu):
        Pf = P.copy()
        Pf[:, i] *= -1
        if np.abs(spec.v1(Pf) - v).max() > 1e-12 * max(1.0, np.abs(v).max()):
            return None
    return kappa


def _check_w2_even(spec: ModelSpec, p, samples: int = 32, seed: int = 11) -> bool:
    rng = np.random.default_rng(seed)
    Q = rng.uniform(-np.pi, np.pi, (samples, spec.nu))
    _, f = _w2_rows(spec, p)
    base = f(Q)
    for i in range(spec.nu):
        Qf = Q.copy()
        Qf[:, i] *= -1
        if np.abs(f(Qf) - base).max() > 1e-12 * max(1.0, np.abs(base).max()):
            return False
    return True


@dataclass
class DeltaMoments:
    """Resolvent moments ``a_ij, b_i, c_i`` and ``D0`` for a batch of ``z``."""

    z: np.ndarray
    kappa: float
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    D0: np.ndarray

    def matrix(self, convention: str = "consistent") -> np.ndarray:
        """The ``(nu+1)``-square determinant matrix of the last Delta.

        ``"consistent"`` uses the diagonal ``1 + kappa a_ii`` that follows from
        eliminating ``f1``. ``"printed"`` uses ``1 - a_ii`` with unit coupling.
        """
        Z, nu = self.b.shape
        M = np.zeros((Z, nu + 1, nu + 1), dtype=self.a.dtype)
        M[:, 0, 0] = self.D0
        if convention == "consistent":
            s = np.sqrt(self.kappa)
            M[:, 0, 1:] = s * self.c
            M[:, 1:, 0] = s * self.c
            M[:, 1:, 1:] = np.eye(nu)[None] + self.kappa * self.a
        elif convention == "printed":
            M[:, 0, 1:] = self.c
            M[:, 1:, 0] = self.c
            M[:, 1:, 1:] = self.a
            idx = np.arange(nu)
            M[:, 1 + idx, 1 + idx] = 1.0 - self.a[:, idx, idx]
        else:
            raise ValueError(f"unknown convention {convention!r}")
        return M

    def deltas(self, convention: str = "consistent") -> np.ndarray:
        """Array ``(Z, nu+1)`` of ``Delta_1 .. Delta_nu, Delta_{nu+1}``."""
        k = self.kappa if convention == "consistent" else 1.0
        last = np.linalg.det(self.matrix(convention))
        return np.column_stack([1.0 - k * self.b, last])

    def negative_count(self) -> np.ndarray:
        """Eigenvalues of the discretized fiber below ``z`` (``z < m(p)``)."""
        ev = np.linalg.eigvalsh(self.matrix("consistent").real)
        return (ev < 0).sum(axis=1) + (1.0 - self.kappa * self.b.real < 0).sum(axis=1)


def delta_moments(spec: ModelSpec, p, zs, grid: TorusGrid, system: FiberSystem | None = None
                  ) -> DeltaMoments:
    p = _as_point(spec, p)
    kappa = cosine_coupling(spec)
    if kappa is None:
        raise NotSeparableFamily(
            "closed-form Delta functions need v2 = kappa * sum cos(p_i - q_i) "
            "and v1 even in every coordinate"
        )
    if not _check_w2_even(spec, p):
        raise NotSeparableFamily("w2(p, .) is not even in every coordinate")
    sysm = system if system is not None else FiberSystem(spec, p, grid)
    zs = np.atleast_1d(zs)
    sysm.check_outside(zs)
    w = grid.weight
    X = grid.points
    C, S = np.cos(X), np.sin(X)
    F = np.column_stack([C, sysm.v1])
    mom = resolvent_moments(F, sysm.d, zs, weight=w)
    nu = spec.nu
    R = 1.0 / (sysm.d[None, :] - zs[:, None])
    b = w * R @ (S**2)
    return DeltaMoments(
        z=zs,
        kappa=kappa,
        a=-mom[:, :nu, :nu],
        b=b,
        c=mom[:, :nu, nu] / np.sqrt(2.0),
        D0=sysm.w1p - zs - 0.5 * mom[:, nu, nu],
    )


def separable_deltas(spec: ModelSpec, p, z, grid: TorusGrid, convention: str = "consistent",
                     system: FiberSystem | None = None) -> np.ndarray:
    """``[Delta_1, ..., Delta_nu, Delta_{nu+1}]`` at a single ``z``.

    ``Delta_i = 1 - kappa b_i``. The last entry is the bordered determinant of
    ``D0``, ``c`` and the cosine block ``a``.
    """
    return delta_moments(spec, p, [z], grid, system=system).deltas(convention)[0]


# -- root finding --------------------------------------------------------------

@dataclass
class FiberRoots:
    p: np.ndarray
    window: tuple
    roots: list = field(default_factory=list)
    multiplicities: list = field(default_factory=list)
    detectors: list = field(default_factory=list)
    near_edge: list = field(default_factory=list)
    unmatched_minima: list = field(default_factory=list)

    @property
    def eigenvalues(self) -> list:
        return [r for r, m in zip(self.roots, self.multiplicities) for _ in range(m)]


def _isolate(count, func, a, b, ca, cb, tol, out):
    """Count-bisection: split ``[a, b]`` until each piece holds one cluster.

    A piece with a single root and a determinant sign change is finished by
    Brent's method; clusters are bisected down to width ``tol``.
    """
    stack = [(a, b, ca, cb)]
    while stack:
        a, b, ca, cb = stack.pop()
        c = cb - ca
        if c <= 0:
            continue
        if c == 1:
            fa, fb = func(a), func(b)
            if fa != 0 and fb != 0 and np.sign(fa) != np.sign(fb):
                out.append((brentq(func, a, b, xtol=0.1 * tol, rtol=1e-15, maxiter=200), 1))
                continue
        if b - a <= tol:
            out.append((0.5 * (a + b), c))
            continue
        mid = 0.5 * (a + b)
        cm = int(count(mid))
        stack.append((mid, b, cm, cb))
        stack.append((a, mid, ca, cm))


def find_roots(det_func, count_func, lo, hi, steps=400, tol=ROOT_TOL, near=None):
    """Roots of ``det_func`` on ``[lo, hi]`` with multiplicities.

    Combines a uniform scan (sign changes, ``|det|`` minima below
    ``MIN_ABS_DET`` refined by bounded Brent minimization) with count-bisection on the
    monotone counting function ``count_func``. Returns
    ``(roots, multiplicities, detectors, unmatched_minima)``.
    """
    zs = np.linspace(lo, hi, steps + 1)
    dets = det_func(zs)
    counts = count_func(zs)
    minima = []
    absd = np.abs(dets)
    for i in range(1, steps):
        # refine a local minimum only if it can hide a root: the count moves
        # in an adjacent cell, or the sampled value is already small
        if absd[i] <= absd[i - 1] and absd[i] <= absd[i + 1] \
                and np.sign(dets[i - 1]) == np.sign(dets[i + 1]) \
                and (counts[i + 1] != counts[i - 1] or absd[i] < 1e3 * MIN_ABS_DET):
            res = minimize_scalar(lambda t: abs(det_func(np.array([t]))[0]),
                                  bounds=(zs[i - 1], zs[i + 1]), method="bounded",
                                  options={"xatol": 1e-12})
            if res.fun < MIN_ABS_DET and zs[i - 1] <= res.x <= zs[i + 1]:
                minima.append(float(res.x))

    def f(t):
        return float(det_func(np.array([t]))[0])

    def c(t):
        return int(count_func(np.array([t]))[0])

    found = []
    for i in range(steps):
        if counts[i + 1] != counts[i]:
            _isolate(c, f, zs[i], zs[i + 1], int(counts[i]), int(counts[i + 1]), tol, found)
    found.sort()
    roots, mults, dets_used = [], [], []
    for r, m in found:
        tags = ["count"]
        if m % 2 == 1:
            tags.append("sign-change")
        if any(abs(r - x) <= 1e-6 for x in minima):
            tags.append("min-abs")
        roots.append(float(r))
        mults.append(int(m))
        dets_used.append(tuple(tags))
    unmatched = [x for x in minima if all(abs(x - r) > 1e-6 for r in roots)]
    return roots, mults, dets_used, unmatched


def _default_pieces(edges: BandEdges, bound: float):
    return [(edges.m_p - bound, edges.m_p - CLIP), (edges.M_p + CLIP, edges.M_p + bound)]


def fiber_roots(spec: ModelSpec, p, grid: TorusGrid, window=None, steps: int = 400,
                tol: float = ROOT_TOL, system: FiberSystem | None = None) -> FiberRoots:
    """Discrete eigenvalues of ``h(p)`` in ``window`` with multiplicities.

    ``window`` must be disjoint from ``[m(p), M(p)]``. If it is ``None``,
    both sides of the band out to the operator bound are searched.
    """
    sysm = system if system is not None else FiberSystem(spec, p, grid)
    edges = sysm.edges
    if window is None:
        pieces = _default_pieces(edges, operator_bound(spec) + (edges.M_p - edges.m_p))
    else:
        lo, hi = float(window[0]), float(window[1])
        if not lo < hi:
            raise ValueError(f"window must be ordered, got ({lo}, {hi})")
        if hi >= edges.m_p and lo <= edges.M_p:
            raise BandOverlapError(
                f"window ({lo}, {hi}) meets the band [{edges.m_p:.12g}, {edges.M_p:.12g}]"
            )
        pieces = [(lo, hi)]
    out = FiberRoots(sysm.p, tuple(window) if window is not None else (pieces[0][0], pieces[1][1]))
    for lo, hi in pieces:
        roots, mults, tags, unmatched = find_roots(sysm.det, sysm.negative_count, lo, hi,
                                                   steps=steps, tol=tol)
        out.roots += roots
        out.multiplicities += mults
        out.detectors += tags
        out.unmatched_minima += unmatched
    out.near_edge = [
        min(abs(r - edges.m_p), abs(r - edges.M_p)) < 10 * CLIP for r in out.roots
    ]
    return out


def fiber_eigenvalues(spec: ModelSpec, p, grid: TorusGrid, window=None, steps: int = 400,
                      tol: float = ROOT_TOL, system: FiberSystem | None = None) -> list:
    """Sorted discrete eigenvalues of ``h(p)`` in ``window``, repeated by multiplicity."""
    return fiber_roots(spec, p, grid, window, steps, tol, system).eigenvalues


def delta_roots(spec: ModelSpec, p, grid: TorusGrid, window, steps: int = 400,
                tol: float = ROOT_TOL, system: FiberSystem | None = None):
    """Roots of the Delta product below the band (closed-form route)."""
    sysm = system if system is not None else FiberSystem(spec, p, grid)
    lo, hi = window
    if hi >= sysm.edges.m_p:
        raise BandOverlapError("the closed-form root search runs below the band only")

    def det(zs):
        return np.prod(delta_moments(spec, p, zs, grid, system=sysm).deltas(), axis=1).real

    def count(zs):
        return delta_moments(spec, p, zs, grid, system=sysm).negative_count()

    return find_roots(det, count, lo, hi, steps=steps, tol=tol)


@dataclass
class FiberEigenvector:
    z: float
    f0: complex | float
    f1: np.ndarray
    sigma_min: float
    residual: float


def reconstruct_fiber_eigenvector(spec: ModelSpec, p, z, grid: TorusGrid,
                                  system: FiberSystem | None = None) -> FiberEigenvector:
    """Eigenvector ``(f0, f1)`` of the discretized ``h(p)`` at the root ``z``.

    The null vector ``(f0, c)`` of ``Bc(z)`` gives the moment function
    ``f1~ = Q c / sqrt(w)``. Then
    ``f1 = (w v~ f1~ - v1 f0 / sqrt2) / (w2(p, .) - z)``.
    The result has unit discrete norm ``|f0|^2 + w sum |f1|^2``.
    """
    sysm = system if system is not None else FiberSystem(spec, p, grid)
    sysm.check_outside(z)
    Bc = sysm.balanced(np.array([z]))[0]
    U, s, Vh = np.linalg.svd(Bc)
    if s[-1] > 1e-6:
        raise SpuriousRootError(f"smallest singular value {s[-1]:.3e} at z = {z}: not a root")
    vec = Vh[-1].conj()
    w = grid.weight
    f0 = vec[0]
    c = vec[1:]
    R = 1.0 / (sysm.d - z)
    f1 = R * (sysm.Q @ (sysm.gamma * c) / np.sqrt(w) - sysm.v1 * f0 / np.sqrt(2.0))
    norm = np.sqrt(abs(f0) ** 2 + w * np.sum(np.abs(f1) ** 2))
    f0, f1 = f0 / norm, f1 / norm
    k = np.argmax(np.abs(np.concatenate([[f0], f1])))
    phase = np.concatenate([[f0], f1])[k]
    phase = phase / abs(phase)
    f0, f1 = f0 / phase, f1 / phase
    if np.isrealobj(z) or complex(z).imag == 0:
        f0, f1 = float(np.real(f0)), np.real(f1)
    g0, g1 = sysm.apply_h(f0, f1)
    res = np.sqrt(abs(g0 - z * f0) ** 2 + w * np.sum(np.abs(g1 - z * f1) ** 2))
    return FiberEigenvector(z, f0, f1, float(s[-1]), float(res))
