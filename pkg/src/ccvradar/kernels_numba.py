"""Numba-JIT grid-search kernels.

Layout and conventions shared with kernels_numpy (the two must stay in
lockstep):

- the cube is passed bin-major (transposed, shape [N, M]) so slow-time
  gathers along a trajectory dwell inside cache lines;
- range-bin extraction rounds (r - start)/dr with floor(x + 0.5), which is
  round-half-away-from-zero for every x > -0.5 (cells below that are
  out-of-window and invalid regardless);
- the per-pulse phasor exp(j*2*pi*w) is evaluated with an explicit half-turn
  range reduction and truncated Taylor polynomials instead of libm sincos:
  the phase arguments reach ~1e6 rad and this form is both faster and as
  accurate as the argument itself (~4e-10 rad);
- cells whose trajectory leaves the cube window get NaN, as do cells pruned
  by the speed >= |radial velocity| constraint (AREM only);
- each output cell is written by exactly one worker and accumulated
  sequentially in m, so results are bit-identical for any thread count.

fastmath is restricted to FMA contraction: no reassociation, so the
summation order is fixed.
"""
import math

import numpy as np
from numba import njit, prange

TWO_PI = 2.0 * np.pi

_FM = {"contract"}


@njit(cache=True, parallel=True, fastmath=_FM)
def arem_map(cube_t, r_ax, rd_ax, v_ax, t, start, inv_dr, turns_per_m):
    """Square-root-trajectory search over (range, radial velocity, speed).

    cube_t: complex [N bins, M pulses]; turns_per_m = 2/lambda.
    Returns complex [Nr, Nrd, Nv]; invalid cells are NaN.
    """
    N, M = cube_t.shape
    Nr, Nrd, Nv = len(r_ax), len(rd_ax), len(v_ax)
    out = np.empty((Nr, Nrd, Nv), np.complex128)
    t2 = t * t
    for flat in prange(Nr * Nrd):
        i = flat // Nrd
        j = flat % Nrd
        ri = r_ax[i]
        rdj = rd_ax[j]
        ri2 = ri * ri
        b = 2.0 * ri * rdj
        ard = abs(rdj)
        rs = np.empty(M, np.float64)
        cc = np.empty(M, np.float64)
        ss = np.empty(M, np.float64)
        bins = np.empty(M, np.int64)
        for q in range(Nv):
            vq = v_ax[q]
            if vq < ard:
                out[i, j, q] = complex(np.nan, np.nan)
                continue
            v2 = vq * vq
            nbad = 0
            for m in range(M):
                rsm = math.sqrt(ri2 + b * t[m] + v2 * t2[m])
                rs[m] = rsm
                nb = int(np.floor((rsm - start) * inv_dr + 0.5))
                bins[m] = nb
                nbad += (nb < 0) or (nb >= N)
            if nbad != 0:
                out[i, j, q] = complex(np.nan, np.nan)
                continue
            for m in range(M):
                w = rs[m] * turns_per_m
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
                cc[m] = sign * cr
                ss[m] = sign * sr
            acc_re = 0.0
            acc_im = 0.0
            for m in range(M):
                v = cube_t[bins[m], m]
                acc_re += v.real * cc[m] - v.imag * ss[m]
                acc_im += v.real * ss[m] + v.imag * cc[m]
            out[i, j, q] = complex(acc_re, acc_im)
    return out


@njit(cache=True, parallel=True, fastmath=_FM)
def poly_map(cube_t, r_ax, rd_ax, a_ax, j_ax, t, start, inv_dr, turns_per_m):
    """Polynomial-trajectory search r + rd*t + a*t^2/2 + jk*t^3/6.

    Phase compensation excludes the constant term.  Lower orders pass
    length-1 zero axes for the unused dimensions.
    Returns complex [Nr, Nrd, Na, Nj]; invalid cells are NaN.
    """
    N, M = cube_t.shape
    Nr, Nrd = len(r_ax), len(rd_ax)
    Na, Nj = len(a_ax), len(j_ax)
    out = np.empty((Nr, Nrd, Na, Nj), np.complex128)
    for flat in prange(Nr * Nrd):
        i = flat // Nrd
        j = flat % Nrd
        ri = r_ax[i]
        rdj = rd_ax[j]
        ph = np.empty(M, np.float64)
        cc = np.empty(M, np.float64)
        ss = np.empty(M, np.float64)
        bins = np.empty(M, np.int64)
        for ia in range(Na):
            half_a = 0.5 * a_ax[ia]
            for ij in range(Nj):
                sixth_j = j_ax[ij] / 6.0
                nbad = 0
                for m in range(M):
                    # time-varying part of the trajectory; constant excluded
                    # from the compensation phase
                    d = t[m] * (rdj + t[m] * (half_a + t[m] * sixth_j))
                    ph[m] = d
                    nb = int(np.floor((ri + d - start) * inv_dr + 0.5))
                    bins[m] = nb
                    nbad += (nb < 0) or (nb >= N)
                if nbad != 0:
                    out[i, j, ia, ij] = complex(np.nan, np.nan)
                    continue
                for m in range(M):
                    w = ph[m] * turns_per_m
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
                    cc[m] = sign * cr
                    ss[m] = sign * sr
                acc_re = 0.0
                acc_im = 0.0
                for m in range(M):
                    v = cube_t[bins[m], m]
                    acc_re += v.real * cc[m] - v.imag * ss[m]
                    acc_im += v.real * ss[m] + v.imag * cc[m]
                out[i, j, ia, ij] = complex(acc_re, acc_im)
    return out
