"""Pure-numpy reference implementations of the compiled kernels."""
import numpy as np


def resolvent_moments(F, d, zs, weight=1.0):
    """Moment matrices ``weight * sum_s F[s,k] F[s,l] / (d[s] - z)``.

    Returns an array of shape ``(len(zs), m, m)``; complex if ``zs`` is.
    """
    F = np.asarray(F)
    d = np.asarray(d)
    zs = np.atleast_1d(zs)
    R = 1.0 / (d[None, :] - zs[:, None])
    # one GEMM against the upper-triangle products F_k F_l, then mirrored
    r = F.shape[1]
    iu, ju = np.triu_indices(r)
    M = weight * (R @ (F[:, iu] * F[:, ju]))
    out = np.empty((len(zs), r, r), dtype=M.dtype)
    out[:, iu, ju] = M
    out[:, ju, iu] = M
    return out


def separable_extrema(left, right, chunk=1 << 22):
    """Min and max of ``left @ right.T`` with their flat indices, chunked."""
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    rows = max(1, chunk // max(1, right.shape[0]))
    best_lo, best_hi = np.inf, -np.inf
    arg_lo = arg_hi = (0, 0)
    for start in range(0, left.shape[0], rows):
        block = left[start:start + rows] @ right.T
        i = int(np.argmin(block))
        j = int(np.argmax(block))
        lo, hi = block.flat[i], block.flat[j]
        if lo < best_lo:
            best_lo, arg_lo = lo, (start + i // block.shape[1], i % block.shape[1])
        if hi > best_hi:
            best_hi, arg_hi = hi, (start + j // block.shape[1], j % block.shape[1])
    return best_lo, arg_lo, best_hi, arg_hi
