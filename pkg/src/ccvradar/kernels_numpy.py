"""Pure-numpy fallback kernels, semantically identical to kernels_numba.

Same bin rounding (floor(x + 0.5)), same half-turn Taylor sincos, same NaN
invalidation rules; vectorized over (range, pulse) blocks per velocity cell.
Slower than the numba path but dependency-free beyond numpy.
"""
import numpy as np

TWO_PI = 2.0 * np.pi


def _sincos_turns(w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """cos/sin of 2*pi*w via half-turn reduction and truncated Taylor."""
    f = w - np.floor(w + 0.5)
    o = np.floor(2.0 * f + 0.5)
    r = (f - 0.5 * o) * TWO_PI
    sign = 1.0 - 2.0 * (o * o)
    x2 = r * r
    sr = r * (1.0 + x2 * (-1.0 / 6.0 + x2 * (1.0 / 120.0 + x2 * (
        -1.0 / 5040.0 + x2 * (1.0 / 362880.0 + x2 * (
            -1.0 / 39916800.0 + x2 * (1.0 / 6227020800.0
                                      - x2 / 1307674368000.0)))))))
    cr = 1.0 + x2 * (-0.5 + x2 * (1.0 / 24.0 + x2 * (
        -1.0 / 720.0 + x2 * (1.0 / 40320.0 + x2 * (
            -1.0 / 3628800.0 + x2 * (1.0 / 479001600.0 + x2 * (
                -1.0 / 87178291200.0 + x2 / 20922789888000.0)))))))
    return sign * cr, sign * sr


def _accumulate(cube_t, bins, turns, N):
    """Sum cube samples along per-row bin trajectories with phase turns.

    bins, turns: [rows, M]; returns (values[rows], valid[rows]).
    """
    M = cube_t.shape[1]
    valid = np.all((bins >= 0) & (bins < N), axis=1)
    safe = np.clip(bins, 0, N - 1)
    samples = cube_t[safe, np.arange(M)[None, :]]
    c, s = _sincos_turns(turns)
    vals = np.sum(samples * (c + 1j * s), axis=1)
    vals[~valid] = complex(np.nan, np.nan)
    return vals


def arem_map(cube_t, r_ax, rd_ax, v_ax, t, start, inv_dr, turns_per_m):
    N, M = cube_t.shape
    Nr, Nrd, Nv = len(r_ax), len(rd_ax), len(v_ax)
    out = np.empty((Nr, Nrd, Nv), np.complex128)
    t2 = t * t
    ri = r_ax[:, None]
    for j in range(Nrd):
        rdj = rd_ax[j]
        for q in range(Nv):
            vq = v_ax[q]
            if vq < abs(rdj):
                out[:, j, q] = complex(np.nan, np.nan)
                continue
            rs = np.sqrt(ri * ri + (2.0 * rdj) * ri * t[None, :]
                         + (vq * vq) * t2[None, :])
            bins = np.floor((rs - start) * inv_dr + 0.5).astype(np.int64)
            out[:, j, q] = _accumulate(cube_t, bins, rs * turns_per_m, N)
    return out


def poly_map(cube_t, r_ax, rd_ax, a_ax, j_ax, t, start, inv_dr, turns_per_m):
    N, M = cube_t.shape
    Nr, Nrd = len(r_ax), len(rd_ax)
    Na, Nj = len(a_ax), len(j_ax)
    out = np.empty((Nr, Nrd, Na, Nj), np.complex128)
    ri = r_ax[:, None]
    for j in range(Nrd):
        rdj = rd_ax[j]
        for ia in range(Na):
            half_a = 0.5 * a_ax[ia]
            for ij in range(Nj):
                sixth_j = j_ax[ij] / 6.0
                d = t * (rdj + t * (half_a + t * sixth_j))
                bins = np.floor((ri + d[None, :] - start) * inv_dr
                                + 0.5).astype(np.int64)
                turns = np.broadcast_to((d * turns_per_m)[None, :],
                                        (Nr, M))
                out[:, j, ia, ij] = _accumulate(cube_t, bins, turns, N)
    return out
