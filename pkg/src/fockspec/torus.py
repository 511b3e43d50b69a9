"""Uniform periodic grids, rectangle-rule quadrature and trigonometric
polynomials on the torus ``(-pi, pi]^nu``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class TorusGrid:
    """Tensor grid with ``n`` equispaced nodes per axis.

    Axis nodes are ``x_j = -pi + 2 pi j / n`` for ``j = 1..n``, so ``pi`` is a
    node and ``-pi`` is not. Nodes are ordered lexicographically (last axis
    fastest).
    """

    nu: int
    n: int
    axis: np.ndarray = field(repr=False)
    points: np.ndarray = field(repr=False)
    weight: float

    @property
    def size(self) -> int:
        return self.n**self.nu

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.size, self.weight)

    def index_of(self, idx) -> int:
        """Flat index of the node with per-axis indices ``idx`` (0-based)."""
        return int(np.ravel_multi_index(tuple(idx), (self.n,) * self.nu))


def make_grid(nu: int, n: int) -> TorusGrid:
    if nu < 1:
        raise ValueError(f"dimension must be >= 1, got {nu}")
    if n < 2:
        raise ValueError(f"need at least 2 points per axis, got {n}")
    axis = -np.pi + TWO_PI * np.arange(1, n + 1) / n
    axis[-1] = np.pi
    points = np.array(list(itertools.product(axis, repeat=nu)), dtype=float)
    points.setflags(write=False)
    axis.setflags(write=False)
    return TorusGrid(nu=nu, n=n, axis=axis, points=points, weight=(TWO_PI / n) ** nu)


def integrate(grid: TorusGrid, samples) -> float | complex:
    samples = np.asarray(samples)
    if samples.shape[0] != grid.size:
        raise ValueError(
            f"expected {grid.size} samples, got {samples.shape[0]}"
        )
    return grid.weight * samples.sum(axis=0)


def wrap(x):
    """Map points into ``(-pi, pi]`` modulo ``2 pi``."""
    x = np.asarray(x, dtype=float)
    y = np.mod(x + np.pi, TWO_PI) - np.pi
    y = np.where(y <= -np.pi, y + TWO_PI, y)
    # points already inside are returned bit-for-bit
    return np.where((x > -np.pi) & (x <= np.pi), x, y)


def _canonical(k: tuple[int, ...]) -> tuple[tuple[int, ...], int]:
    """Return the representative of ``{k, -k}`` and the sign of the sine part."""
    for c in k:
        if c > 0:
            return k, 1
        if c < 0:
            return tuple(-c for c in k), -1
    return k, 0


class TrigPoly:
    """Real trigonometric polynomial ``sum_k a_k cos<k,x> + b_k sin<k,x>``.

    Frequencies are stored in canonical form (``k`` and ``-k`` merged, first
    nonzero component positive), so two polynomials that agree as functions
    have identical coefficient tables after :meth:`pruned`.
    """

    __slots__ = ("nu", "ks", "cos", "sin")

    def __init__(self, nu: int, terms=()):
        if nu < 1:
            raise ValueError("dimension must be >= 1")
        acc: dict[tuple[int, ...], list[float]] = {}
        for k, a, b in terms:
            k = tuple(int(c) for c in k)
            if len(k) != nu:
                raise ValueError(f"frequency {k} has wrong dimension (nu={nu})")
            ck, s = _canonical(k)
            slot = acc.setdefault(ck, [0.0, 0.0])
            slot[0] += float(a)
            slot[1] += s * float(b)
        keys = sorted(acc)
        self.nu = nu
        self.ks = np.array(keys, dtype=np.int64).reshape(len(keys), nu)
        self.cos = np.array([acc[k][0] for k in keys], dtype=float)
        self.sin = np.array([acc[k][1] for k in keys], dtype=float)
        for arr in (self.ks, self.cos, self.sin):
            arr.setflags(write=False)

    @classmethod
    def constant(cls, nu: int, c: float) -> "TrigPoly":
        return cls(nu, [((0,) * nu, c, 0.0)])

    @classmethod
    def zero(cls, nu: int) -> "TrigPoly":
        return cls(nu)

    @classmethod
    def cos_axis(cls, nu: int, i: int, coeff: float = 1.0) -> "TrigPoly":
        k = [0] * nu
        k[i] = 1
        return cls(nu, [(k, coeff, 0.0)])

    @classmethod
    def sin_axis(cls, nu: int, i: int, coeff: float = 1.0) -> "TrigPoly":
        k = [0] * nu
        k[i] = 1
        return cls(nu, [(k, 0.0, coeff)])

    def terms(self):
        return [
            (tuple(int(c) for c in k), float(a), float(b))
            for k, a, b in zip(self.ks, self.cos, self.sin)
        ]

    @property
    def degree(self) -> int:
        p = self.pruned()
        return int(np.abs(p.ks).max()) if len(p.ks) else 0

    def pruned(self, tol: float = 0.0) -> "TrigPoly":
        keep = (np.abs(self.cos) > tol) | (np.abs(self.sin) > tol)
        return TrigPoly(
            self.nu,
            [(k, a, b) for (k, a, b), m in zip(self.terms(), keep) if m],
        )

    def is_zero(self, tol: float = 0.0) -> bool:
        return len(self.pruned(tol).ks) == 0

    def is_even(self, tol: float = 1e-14) -> bool:
        return bool(np.all(np.abs(self.sin) <= tol))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.nu:
            raise ValueError(
                f"point dimension {x.shape[-1]} does not match nu={self.nu}"
            )
        if len(self.ks) == 0:
            return np.zeros(x.shape[:-1])
        phase = x @ self.ks.T.astype(float)
        return np.cos(phase) @ self.cos + np.sin(phase) @ self.sin

    def __add__(self, other: "TrigPoly") -> "TrigPoly":
        if isinstance(other, (int, float)):
            other = TrigPoly.constant(self.nu, other)
        self._check(other)
        return TrigPoly(self.nu, self.terms() + other.terms())

    __radd__ = __add__

    def __neg__(self) -> "TrigPoly":
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, c: float) -> "TrigPoly":
        c = float(c)
        return TrigPoly(self.nu, [(k, c * a, c * b) for k, a, b in self.terms()])

    __rmul__ = __mul__

    def _check(self, other: "TrigPoly") -> None:
        if other.nu != self.nu:
            raise ValueError(f"dimension mismatch: {self.nu} vs {other.nu}")

    def integral(self) -> float:
        zero = np.all(self.ks == 0, axis=1)
        return float(self.cos[zero].sum()) * TWO_PI**self.nu

    def inner(self, other: "TrigPoly") -> float:
        """Exact ``L2(T^nu)`` inner product by coefficient matching."""
        self._check(other)
        mine = {tuple(k): (a, b) for k, a, b in self.terms()}
        vol = TWO_PI**self.nu
        total = 0.0
        for k, a2, b2 in other.terms():
            if k not in mine:
                continue
            a1, b1 = mine[k]
            if any(k):
                total += 0.5 * vol * (a1 * a2 + b1 * b2)
            else:
                total += vol * a1 * a2
        return total

    def __eq__(self, other) -> bool:
        if not isinstance(other, TrigPoly) or other.nu != self.nu:
            return NotImplemented
        a, b = self.pruned(), other.pruned()
        return (
            a.ks.shape == b.ks.shape
            and np.array_equal(a.ks, b.ks)
            and np.array_equal(a.cos, b.cos)
            and np.array_equal(a.sin, b.sin)
        )

    def __hash__(self):
        return hash((self.nu, self.ks.tobytes(), self.cos.tobytes(), self.sin.tobytes()))

    def __repr__(self) -> str:
        return f"TrigPoly(nu={self.nu}, terms={self.terms()})"


def eval_trigpoly(f: TrigPoly, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != f.nu:
        raise ValueError(f"expected a point of dimension {f.nu}, got shape {x.shape}")
    return float(f(x))


def linear_combination(polys, coeffs) -> TrigPoly:
    """``sum_i coeffs[i] * polys[i]`` for a non-empty list of polynomials."""
    polys = list(polys)
    nu = polys[0].nu
    terms = []
    for f, c in zip(polys, coeffs):
        terms.extend((k, c * a, c * b) for k, a, b in f.terms())
    return TrigPoly(nu, terms)
