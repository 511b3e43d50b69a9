"""Essential spectrum of the Hamiltonian assembled from the fiber family.

``sigma_ess(H)`` is the union of the three-particle interval ``[m, M]``
(the range of ``w2``) and the two-particle branch. The branch is the union
over ``p`` of the discrete spectra of the fibers ``h(p)``. The branch is
sampled on a ``p``-sweep grid and reported as curves plus a merged hull.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import separable_extrema
from ._search import golden_coordinate_min
from .friedrichs import (CLIP, BandEdges, FiberSystem, band_edges_batch, fiber_roots,
                         operator_bound)
from .model import ModelSpec
from .torus import TWO_PI, TorusGrid, make_grid

PAIR_BUDGET = 2.0e7


@dataclass
class TwoParticleSample:
    index: int
    p: np.ndarray
    edges: BandEdges
    eigenvalues: list
    multiplicities: list
    near_edge: list

    @property
    def values(self) -> list:
        """Eigenvalues repeated by multiplicity."""
        return [e for e, m in zip(self.eigenvalues, self.multiplicities) for _ in range(m)]


@dataclass
class SpectrumBands:
    three_particle: tuple
    two_particle: list
    merged: list
    sweep_n: int
    quadrature_n: int
    window: tuple
    gap_threshold: float
    flags: list = field(default_factory=list)

    def contains(self, z, tol: float = 0.0) -> bool:
        return any(lo - tol <= z <= hi + tol for lo, hi in self.merged)

    def gaps(self):
        """Open gaps between consecutive merged intervals."""
        return [(a[1], b[0]) for a, b in zip(self.merged[:-1], self.merged[1:])]

    def complement(self, window):
        """Pieces of ``window`` outside the merged bands, clipped by ``CLIP``."""
        lo, hi = window
        pieces = []
        cur = lo
        for a, b in self.merged:
            if b < cur:
                continue
            if a > hi:
                break
            if a - CLIP > cur:
                pieces.append((cur, a - CLIP))
            cur = max(cur, b + CLIP)
        if cur < hi:
            pieces.append((cur, hi))
        return pieces


def three_particle_branch(spec: ModelSpec, n: int | None = None) -> tuple:
    """Global ``[m, M]`` of ``w2`` over ``(T^nu)^2``.

    A dense pair sample (about ``PAIR_BUDGET`` pairs) finds the extremal nodes.
    Golden-section search over all ``2 nu`` coordinates then refines them.
    """
    nu = spec.nu
    if n is None:
        n = int(np.clip(np.floor(PAIR_BUDGET ** (1.0 / (2 * nu))), 8, 64))
    grid = make_grid(nu, n)
    L = spec.w2.left_matrix(grid.points)
    R = spec.w2.right_matrix(grid.points)
    lo, (il, jl), hi, (ih, jh) = separable_extrema(L, R)

    def f(X, rows=None):
        return np.sum(spec.w2.left_matrix(X[:, :nu]) * spec.w2.right_matrix(X[:, nu:]), axis=1)

    h = TWO_PI / n
    x0 = np.concatenate([grid.points[il], grid.points[jl]])
    x1 = np.concatenate([grid.points[ih], grid.points[jh]])
    _, flo = golden_coordinate_min(f, x0, h)
    _, fhi = golden_coordinate_min(lambda X, rows: -f(X), x1, h)
    return (min(float(lo), float(flo[0])), max(float(hi), float(-fhi[0])))


_EDGE_CACHE: dict = {}


def sweep_edges(spec: ModelSpec, sweep: TorusGrid) -> list:
    """Band edges at every sweep node (memoized per model and sweep)."""
    key = (id(spec), sweep.nu, sweep.n)
    hit = _EDGE_CACHE.get(key)
    if hit is None or hit[0] is not spec:
        if len(_EDGE_CACHE) > 32:
            _EDGE_CACHE.clear()
        hit = (spec, band_edges_batch(spec, sweep.points))
        _EDGE_CACHE[key] = hit
    return hit[1]


def default_window(spec: ModelSpec, three=None) -> tuple:
    """``(m - R, M + R)`` with ``R`` the documented operator-norm bound."""
    m, M = three if three is not None else three_particle_branch(spec)
    R = operator_bound(spec)
    return (m - R, M + R)


def _clip_window(edges: BandEdges, window):
    lo, hi = window
    pieces = []
    if lo < edges.m_p - CLIP:
        pieces.append((lo, min(hi, edges.m_p - CLIP)))
    if hi > edges.M_p + CLIP:
        pieces.append((max(lo, edges.M_p + CLIP), hi))
    return [(a, b) for a, b in pieces if a < b]


def two_particle_branch(spec: ModelSpec, p_sweep: TorusGrid, window=None,
                        grid: TorusGrid | None = None, steps: int = 400) -> list:
    """Discrete fiber eigenvalues at every node of ``p_sweep``.

    Per-fiber windows are clipped to avoid ``[m(p) - CLIP, M(p) + CLIP]``. The
    quadrature grid defaults to the sweep grid.
    """
    grid = p_sweep if grid is None else grid
    if window is None:
        window = default_window(spec)
    out = []
    for idx, (p, edges) in enumerate(zip(p_sweep.points, sweep_edges(spec, p_sweep))):
        sysm = FiberSystem(spec, p, grid, edges=edges)
        roots, mults, near = [], [], []
        for piece in _clip_window(edges, window):
            r = fiber_roots(spec, p, grid, piece, steps=steps, system=sysm)
            roots += r.roots
            mults += r.multiplicities
            near += r.near_edge
        out.append(TwoParticleSample(idx, np.array(p), edges, roots, mults, near))
    return out


def _neighbour_spacing(samples, p_sweep: TorusGrid) -> float:
    """Largest change of any branch between neighbouring sweep nodes.

    Branch ``j`` below (above) the fiber band is the ``j``-th eigenvalue
    counted from the band edge outward. Neighbours differ by one step along
    one axis, periodically.
    """
    n, nu = p_sweep.n, p_sweep.nu
    shape = (n,) * nu

    def branches(s):
        vals = np.array(s.values)
        below = np.sort(vals[vals < s.edges.m_p])[::-1]
        above = np.sort(vals[vals > s.edges.M_p])
        return below, above

    table = [branches(s) for s in samples]
    spacing = 0.0
    for flat in range(len(samples)):
        idx = np.array(np.unravel_index(flat, shape))
        for axis in range(nu):
            nb = idx.copy()
            nb[axis] = (nb[axis] + 1) % n
            other = int(np.ravel_multi_index(tuple(nb), shape))
            for side in (0, 1):
                a, b = table[flat][side], table[other][side]
                k = min(len(a), len(b))
                if k:
                    spacing = max(spacing, float(np.abs(a[:k] - b[:k]).max()))
    return spacing


def merge_intervals(intervals, tol: float = 0.0):
    merged = []
    for lo, hi in sorted(intervals):
        if merged and lo <= merged[-1][1] + tol:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return merged


def essential_spectrum(spec: ModelSpec, p_sweep: TorusGrid, window=None,
                       grid: TorusGrid | None = None, steps: int = 400,
                       gap_factor: float = 2.0) -> SpectrumBands:
    """Three-particle interval together with the hull of the sampled branch.

    Sorted branch samples closer than ``gap_factor`` times the largest
    neighbour spacing of a branch are joined into one interval. The result is
    then merged with ``[m, M]``.
    """
    three = three_particle_branch(spec)
    if window is None:
        window = default_window(spec, three)
    samples = two_particle_branch(spec, p_sweep, window, grid, steps)
    values = np.sort([v for s in samples for v in s.values])
    threshold = gap_factor * (_neighbour_spacing(samples, p_sweep) if len(values) else 0.0)
    hulls = []
    if len(values):
        start = prev = values[0]
        for v in values[1:]:
            if v - prev > threshold:
                hulls.append((float(start), float(prev)))
                start = v
            prev = v
        hulls.append((float(start), float(prev)))
    merged = merge_intervals([three] + hulls)
    flags = [
        f"eigenvalue within {10 * CLIP:g} of the band edge at sweep node {s.index}"
        for s in samples if any(s.near_edge)
    ]
    q = grid if grid is not None else p_sweep
    return SpectrumBands(three, samples, merged, p_sweep.n, q.n, tuple(window), threshold, flags)


@dataclass
class InvertibilityMargin:
    z: float
    value: float
    fiber_min: float
    argmin: int
    skipped: list

    @property
    def flagged(self) -> bool:
        return bool(self.skipped)


def a_invertibility_margin(spec: ModelSpec, z: float, grid: TorusGrid,
                           sweep: TorusGrid | None = None) -> InvertibilityMargin:
    """Smallest singular value of ``E + A0(p; z)`` over the sweep.

    Fibers with ``z`` in their band are skipped and listed in ``skipped``.
    ``z`` then belongs to the three-particle branch, where the operator is
    not invertible, so ``value`` is reported as ``0``. ``fiber_min`` keeps
    the minimum over the remaining fibers.
    """
    z = float(z)
    sweep = grid if sweep is None else sweep
    best, arg, skipped = np.inf, -1, []
    for idx, (p, edges) in enumerate(zip(sweep.points, sweep_edges(spec, sweep))):
        sysm = FiberSystem(spec, p, grid, edges=edges)
        if sysm.in_band(z):
            skipped.append(idx)
            continue
        s = float(sysm.sigma_min(np.array([z]))[0])
        if s < best:
            best, arg = s, idx
    value = 0.0 if skipped else best
    return InvertibilityMargin(z, value, best, arg, skipped)
