"""Vectorized golden-section refinement of extrema on the torus."""
import numpy as np

_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


def golden_coordinate_min(func, x0, half_width, sweeps=30, iters=70, tol=1e-15):
    """Cyclic coordinate golden-section descent for a batch of start points.

    ``func(X, rows)`` maps points ``X`` of shape ``(b, D)`` to ``(b,)`` values.
    ``rows`` holds the batch indices of the points, so per-member parameters
    can be looked up. Each sweep
    searches every coordinate in ``[x - h, x + h]``; ``h`` shrinks to a few
    times the last step after the first sweep. Returns ``(x, f(x))``.
    """
    x = np.array(x0, dtype=float, copy=True)
    if x.ndim == 1:
        x = x[None, :]
    B, D = x.shape
    every = np.arange(B)
    fx = func(x, every)
    h = np.full(B, float(half_width))
    for _ in range(sweeps):
        f_before = fx.copy()
        step = np.zeros(B)
        for c in range(D):
            lo = x[:, c] - h
            hi = x[:, c] + h
            a = hi - _INVPHI * (hi - lo)
            b = lo + _INVPHI * (hi - lo)
            xa = x.copy()
            xb = x.copy()
            xa[:, c] = a
            xb[:, c] = b
            fa, fb = func(xa, every), func(xb, every)
            for _ in range(iters):
                left = fa < fb
                hi = np.where(left, b, hi)
                lo = np.where(left, lo, a)
                b_new = np.where(left, a, lo + _INVPHI * (hi - lo))
                a_new = np.where(left, hi - _INVPHI * (hi - lo), b)
                xa[:, c] = a_new
                xb[:, c] = b_new
                fa_new = np.where(left, np.nan, fb)
                fb_new = np.where(left, fa, np.nan)
                need_a = left
                need_b = ~left
                if need_a.any():
                    fa_new[need_a] = func(xa[need_a], every[need_a])
                if need_b.any():
                    fb_new[need_b] = func(xb[need_b], every[need_b])
                a, b, fa, fb = a_new, b_new, fa_new, fb_new
                if np.all(hi - lo < 1e-13):
                    break
            cand = 0.5 * (lo + hi)
            xc = x.copy()
            xc[:, c] = cand
            fc = func(xc, every)
            better = fc < fx
            step = np.maximum(step, np.where(better, np.abs(cand - x[:, c]), 0.0))
            x[better, c] = cand[better]
            fx = np.where(better, fc, fx)
        if np.all(f_before - fx <= tol * np.maximum(1.0, np.abs(fx))):
            break
        h = np.maximum(4.0 * step, 1e-6)
    return x, fx
