"""Parameter set of the Hamiltonian, hypothesis checks, and the positive
square root of the interaction operators."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .torus import TWO_PI, TorusGrid, TrigPoly, linear_combination

POSITIVITY_TOL = 1e-12


class ModelError(ValueError):
    """The model violates a standing hypothesis (symmetry, positivity)."""


def _monomial_basis(polys, nu):
    """Orthonormal cos/sin monomials spanning ``polys`` and coefficient rows."""
    keys = sorted({tuple(k) for f in polys for k, _, _ in f.terms()})
    index = {}
    norms = []
    for k in keys:
        if any(k):
            index[(k, "c")] = len(norms)
            norms.append(np.sqrt(TWO_PI**nu / 2.0))
            index[(k, "s")] = len(norms)
            norms.append(np.sqrt(TWO_PI**nu / 2.0))
        else:
            index[(k, "c")] = len(norms)
            norms.append(np.sqrt(TWO_PI**nu))
    norms = np.array(norms)
    coef = np.zeros((len(polys), len(norms)))
    for i, f in enumerate(polys):
        for k, a, b in f.terms():
            coef[i, index[(k, "c")]] += a
            if any(k):
                coef[i, index[(k, "s")]] += b
    basis = []
    for (k, kind), j in sorted(index.items(), key=lambda t: t[1]):
        c = 1.0 / norms[j]
        basis.append(TrigPoly(nu, [(k, c, 0.0)] if kind == "c" else [(k, 0.0, c)]))
    return basis, coef * norms[None, :]


class SeparableKernel:
    """Kernel ``k(p, q) = sum_t left_t(p) * right_t(q)`` on ``(T^nu)^2``.

    Use :meth:`from_factors` for the symmetric form ``sum_k phi_k(p) phi_k(q)``.
    """

    def __init__(self, nu: int, terms=(), factors=None):
        self.nu = nu
        self.terms = tuple((l, r) for l, r in terms)
        for l, r in self.terms:
            if l.nu != nu or r.nu != nu:
                raise ValueError("kernel term has wrong dimension")
        self._factors = None if factors is None else tuple(factors)

    @classmethod
    def from_factors(cls, nu: int, factors) -> "SeparableKernel":
        factors = tuple(factors)
        return cls(nu, [(f, f) for f in factors], factors=factors)

    @classmethod
    def zero(cls, nu: int) -> "SeparableKernel":
        return cls.from_factors(nu, ())

    @property
    def is_factor_form(self) -> bool:
        return self._factors is not None

    def __call__(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        out = 0.0
        for l, r in self.terms:
            out = out + l(p) * r(q)
        return np.broadcast_to(out, np.broadcast_shapes(p.shape[:-1], q.shape[:-1])).copy() \
            if np.ndim(out) == 0 else out

    def left_matrix(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.stack([l(x) for l, _ in self.terms], axis=-1) if self.terms \
            else np.zeros(x.shape[:-1] + (0,))

    def right_matrix(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.stack([r(x) for _, r in self.terms], axis=-1) if self.terms \
            else np.zeros(x.shape[:-1] + (0,))

    def matrix(self, P, Q=None) -> np.ndarray:
        """Node matrix ``K[i, j] = k(P[i], Q[j])``."""
        Q = P if Q is None else Q
        return self.left_matrix(P) @ self.right_matrix(Q).T

    def swapped(self) -> "SeparableKernel":
        return SeparableKernel(self.nu, [(r, l) for l, r in self.terms])

    def coefficient_matrix(self):
        """Kernel in an orthonormal cos/sin monomial basis: ``(basis, C)``
        with ``k(p, q) = sum_ij C[i, j] e_i(p) e_j(q)``."""
        polys = [f for pair in self.terms for f in pair]
        if not polys:
            return [], np.zeros((0, 0))
        basis, coef = _monomial_basis(polys, self.nu)
        L = coef[0::2]
        R = coef[1::2]
        return basis, L.T @ R

    def symmetry_defect(self) -> float:
        _, C = self.coefficient_matrix()
        return float(np.abs(C - C.T).max()) if C.size else 0.0

    def operator_eigenvalues(self) -> np.ndarray:
        """Nonzero-part spectrum of the integral operator with this kernel.

        For factor form this is the spectrum of the Gram matrix
        ``G[k, l] = int phi_k phi_l``.
        """
        if self.is_factor_form:
            return np.linalg.eigvalsh(gram_matrix(self._factors)) if self._factors \
                else np.zeros(0)
        _, C = self.coefficient_matrix()
        if not C.size:
            return np.zeros(0)
        return np.linalg.eigvalsh(0.5 * (C + C.T))

    def symmetric_factors(self):
        """Factor list ``phi_k`` with ``k(p, q) = sum phi_k(p) phi_k(q)``.

        Raises :class:`ModelError` for kernels that are not symmetric or
        whose operator is not positive.
        """
        if self.is_factor_form:
            return self._factors
        if self.symmetry_defect() > 1e-12:
            raise ModelError("kernel is not symmetric")
        basis, C = self.coefficient_matrix()
        if not C.size:
            return ()
        lam, U = np.linalg.eigh(0.5 * (C + C.T))
        if lam.min() < -POSITIVITY_TOL:
            raise ModelError(f"kernel operator is not positive (eigenvalue {lam.min():.3e})")
        scale = max(1.0, float(np.abs(lam).max()))
        keep = lam > 1e-14 * scale
        return tuple(
            linear_combination(basis, np.sqrt(lam[j]) * U[:, j]).pruned(1e-15)
            for j in np.flatnonzero(keep)
        )

    def __repr__(self) -> str:
        kind = "factors" if self.is_factor_form else "terms"
        return f"SeparableKernel(nu={self.nu}, {kind}={len(self.terms)})"


def gram_matrix(polys) -> np.ndarray:
    polys = list(polys)
    G = np.empty((len(polys), len(polys)))
    for i, f in enumerate(polys):
        for j in range(i, len(polys)):
            G[i, j] = G[j, i] = f.inner(polys[j])
    return G


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Full parameter set ``(w0, w1, v0, v1, w2, v2)`` of the Hamiltonian."""

    nu: int
    w0: float
    w1: TrigPoly
    v0: TrigPoly
    v1: TrigPoly
    w2: SeparableKernel
    v2: SeparableKernel
    name: str = ""

    def __post_init__(self):
        for label in ("w1", "v0", "v1", "w2", "v2"):
            if getattr(self, label).nu != self.nu:
                raise ValueError(f"{label} has dimension {getattr(self, label).nu}, expected {self.nu}")

    @cached_property
    def sqrt_kernel(self) -> "SqrtKernel":
        return kernel_sqrt(self.v2)

    @property
    def rank(self) -> int:
        return len(self.v2.symmetric_factors())


@dataclass
class ValidationReport:
    checks: dict = field(default_factory=dict)
    messages: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def failures(self):
        return [f"{k}: {self.messages.get(k, 'failed')}" for k, v in self.checks.items() if not v]

    def __str__(self) -> str:
        return "\n".join(
            f"{'PASS' if v else 'FAIL'} {k}" + (f" ({self.messages[k]})" if k in self.messages else "")
            for k, v in self.checks.items()
        )


def validate(spec: ModelSpec, samples: int = 64, seed: int = 0) -> ValidationReport:
    """Check the standing hypotheses: symmetric ``w2`` and ``v2``, positive ``v``."""
    rng = np.random.default_rng(seed)
    P = rng.uniform(-np.pi, np.pi, size=(samples, spec.nu))
    Q = rng.uniform(-np.pi, np.pi, size=(samples, spec.nu))
    report = ValidationReport()
    for label in ("w2", "v2"):
        k = getattr(spec, label)
        a, b = k.matrix(P, Q), k.matrix(Q, P).T
        defect = float(np.abs(a - b).max()) if a.size else 0.0
        report.checks[f"{label} symmetry"] = defect <= 1e-12 * max(1.0, float(np.abs(a).max(initial=0.0)))
        report.messages[f"{label} symmetry"] = f"max |k(p,q)-k(q,p)| = {defect:.3e}"
    lam = spec.v2.operator_eigenvalues()
    lo = float(lam.min()) if lam.size else 0.0
    report.checks["v positivity"] = lo >= -POSITIVITY_TOL
    report.messages["v positivity"] = f"min Gram eigenvalue = {lo:.6g}"
    return report


@dataclass(frozen=True, eq=False)
class SqrtKernel:
    """Kernel of the positive square root ``v^(1/2)`` in factor form.

    ``node_matrix`` optionally carries the same kernel sampled on a grid.
    """

    nu: int
    factors: tuple
    eigenvalues: np.ndarray
    grid: TorusGrid | None = None
    node_matrix: np.ndarray | None = None

    def __call__(self, p, q):
        return SeparableKernel.from_factors(self.nu, self.factors)(p, q)

    def factor_matrix(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not self.factors:
            return np.zeros(x.shape[:-1] + (0,))
        return np.stack([f(x) for f in self.factors], axis=-1)

    def matrix(self, P, Q=None) -> np.ndarray:
        Q = P if Q is None else Q
        return self.factor_matrix(P) @ self.factor_matrix(Q).T

    def on_grid(self, grid: TorusGrid) -> "SqrtKernel":
        return SqrtKernel(self.nu, self.factors, self.eigenvalues, grid, self.matrix(grid.points))

    def as_kernel(self) -> SeparableKernel:
        return SeparableKernel.from_factors(self.nu, self.factors)


def kernel_sqrt(v2: SeparableKernel, grid: TorusGrid | None = None) -> SqrtKernel:
    """Positive square root of the operator with kernel ``v2``.

    With ``G = U diag(lam) U^T`` the Gram matrix of the factors, the root has
    factors ``phi @ G^(-1/4)`` taken on the range of ``G``; its nonzero
    eigenvalues are ``sqrt(lam)``.
    """
    phi = v2.symmetric_factors()
    nu = v2.nu
    if not phi:
        out = SqrtKernel(nu, (), np.zeros(0))
        return out.on_grid(grid) if grid is not None else out
    G = gram_matrix(phi)
    lam, U = np.linalg.eigh(G)
    if lam.min() < -POSITIVITY_TOL:
        raise ModelError(f"operator v is not positive: Gram eigenvalue {lam.min():.3e}")
    keep = lam > 1e-13 * max(1.0, float(lam.max()))
    G_quarter = (U[:, keep] * lam[keep] ** -0.25) @ U[:, keep].T
    factors = tuple(
        linear_combination(phi, G_quarter[:, j]).pruned(1e-15) for j in range(len(phi))
    )
    factors = tuple(f for f in factors if not f.is_zero(1e-15))
    out = SqrtKernel(nu, factors, np.sqrt(lam[keep]))
    return out.on_grid(grid) if grid is not None else out


def apply_V(which: int, kernel, f2, grid: TorusGrid) -> np.ndarray:
    """Partial integral operators on node samples ``f2[i, j] = f(x_i, x_j)``.

    ``which=1`` integrates the first slot against ``k(p, s)``, ``which=2`` the
    second slot against ``k(s, q)``. Passing a :class:`SqrtKernel` gives the
    square-root operators.
    """
    f2 = np.asarray(f2)
    if f2.shape != (grid.size, grid.size):
        raise ValueError(f"expected shape {(grid.size, grid.size)}, got {f2.shape}")
    K = grid.weight * kernel.matrix(grid.points)
    if which == 1:
        return K @ f2
    if which == 2:
        return f2 @ K
    raise ValueError("which must be 1 or 2")


def symmetrize(f2) -> np.ndarray:
    f2 = np.asarray(f2)
    if f2.ndim != 2 or f2.shape[0] != f2.shape[1]:
        raise ValueError(f"expected a square node array, got shape {f2.shape}")
    return 0.5 * (f2 + f2.T)


# -- model constructors -------------------------------------------------------

def cosine_difference_kernel(nu: int, coupling: float = 1.0) -> SeparableKernel:
    """``coupling * sum_i cos(p_i - q_i)`` as its cos/sin factor expansion."""
    c = np.sqrt(coupling)
    factors = [TrigPoly.cos_axis(nu, i, c) for i in range(nu)]
    factors += [TrigPoly.sin_axis(nu, i, c) for i in range(nu)]
    return SeparableKernel.from_factors(nu, factors)


def additive_kernel(f: TrigPoly, g: TrigPoly | None = None) -> SeparableKernel:
    """Symmetric ``f(p) + f(q)`` (or ``f(p) + g(q)``) as a separable kernel."""
    g = f if g is None else g
    one = TrigPoly.constant(f.nu, 1.0)
    return SeparableKernel(f.nu, [(f, one), (one, g)])


def cubic_cosine_model(w0: float = 1.0, v0: float = 1.0) -> ModelSpec:
    """Three-dimensional example with ``v2 = sum cos(p_i - q_i)``,
    ``v1 = sum cos p_i`` and ``w2 = sum (2 - cos p_i - cos q_i)``."""
    nu = 3
    cos_sum = linear_combination([TrigPoly.cos_axis(nu, i) for i in range(nu)], [1.0] * nu)
    half = TrigPoly.constant(nu, 3.0) - cos_sum
    return ModelSpec(
        nu=nu,
        w0=w0,
        w1=TrigPoly.constant(nu, 3.0) - cos_sum,
        v0=TrigPoly.constant(nu, v0),
        v1=cos_sum,
        w2=additive_kernel(half),
        v2=cosine_difference_kernel(nu),
        name="cubic-cosine",
    )


def decoupled_model(nu: int, w0: float, w1: TrigPoly, w2: SeparableKernel) -> ModelSpec:
    zero = TrigPoly.zero(nu)
    return ModelSpec(nu, w0, w1, zero, zero, w2, SeparableKernel.zero(nu), name="decoupled")


def random_chain_model(seed: int, degree: int = 2, coupling: float = 0.6) -> ModelSpec:
    """Random one-dimensional model with low-degree even coefficient functions."""
    rng = np.random.default_rng(seed)
    nu = 1

    def poly(scale, const=0.0):
        terms = [((0,), const + scale * rng.normal(), 0.0)]
        terms += [((k,), scale * rng.normal() / k, 0.0) for k in range(1, degree + 1)]
        return TrigPoly(nu, terms)

    disp = TrigPoly(nu, [((0,), 1.0, 0.0), ((1,), -1.0, 0.0)]) * (1.0 + 0.5 * rng.random())
    w1 = disp + float(rng.uniform(-0.5, 0.5))
    w2 = additive_kernel(disp + float(rng.uniform(0.0, 0.5)))
    factors = [poly(coupling * 0.5, const=coupling * 0.3) for _ in range(2)]
    return ModelSpec(
        nu=nu,
        w0=float(rng.uniform(-1.5, -0.5)),
        w1=w1,
        v0=poly(0.5, const=0.5),
        v1=poly(0.5, const=0.3),
        w2=w2,
        v2=SeparableKernel.from_factors(nu, factors),
        name=f"random-chain-{seed}",
    )


def toy_chain_model() -> ModelSpec:
    """Small one-dimensional model with bound states below the bands."""
    nu = 1
    cos = TrigPoly.cos_axis(nu, 0)
    one = TrigPoly.constant(nu, 1.0)
    return ModelSpec(
        nu=nu,
        w0=0.3,
        w1=1.5 - 0.7 * cos,
        v0=0.6 + 0.2 * cos,
        v1=0.3 + 0.8 * cos,
        w2=additive_kernel(1.25 - cos),
        v2=SeparableKernel.from_factors(nu, [one * 0.3, cos * 0.25]),
        name="toy-chain",
    )


def decoupled_chain_model() -> ModelSpec:
    """``v0 = v1 = v2 = 0`` with ``w1(p)`` strictly inside every fiber band."""
    nu = 1
    cos = TrigPoly.cos_axis(nu, 0)
    return decoupled_model(nu, -1.0, 2.0 - cos, additive_kernel(1.0 - cos))
