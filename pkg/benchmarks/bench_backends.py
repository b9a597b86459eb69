"""Benchmark the numba kernels against the pure-numpy fallback.

Runs the square-root-trajectory search and the order-3 polynomial search on
the same cube with both backends and reports cell-pulse throughput.

    python3 benchmarks/bench_backends.py [--pulses 512] [--cells 31]

Select the default backend for the library via CCVRADAR_BACKEND=numpy|numba
and the numba thread count via CCVRADAR_THREADS=N.
"""
import argparse
import time

import numpy as np

import ccvradar as cr
from ccvradar.integrate import centered_axis, poly_accel_spacing, poly_jerk_spacing


def run_once(backend, cube, grid, p, accel, jerk):
    prev = cr.set_backend(backend)
    try:
        t0 = time.perf_counter()
        m = cr.arem_grft(cube, grid, p)
        t_arem = time.perf_counter() - t0
        t0 = time.perf_counter()
        m3 = cr.poly_grft(cube, grid, p, 3, accel_axis=accel, jerk_axis=jerk)
        t_poly = time.perf_counter() - t0
    finally:
        cr.set_backend(prev)
    return m, m3, t_arem, t_poly


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--pulses", type=int, default=512)
    ap.add_argument("--cells", type=int, default=31,
                    help="cells per search axis")
    args = ap.parse_args()

    p = cr.RadarParams(1.5e9, 10e-6, 20e6, 50e6, 200.0, args.pulses)
    tgt = cr.CcvTarget(25000.0, 60.0, 800.0, snr_after_pc=6.0)
    cube = cr.synth_compressed(p, [tgt], (24900.0, 25500.0), seed=1)

    half = args.cells // 2
    dr, dv = p.range_resolution, p.wavelength / (2.0 * p.cpi)
    grid = cr.build_search_grid(
        p, (25000 - half * dr, 25000 + half * dr,
            60 - half * dv, 60 + half * dv,
            800 - half * dv, 800 + half * dv))
    tc = cr.taylor_coeffs(25000.0, 60.0, 800.0, 3)
    accel = centered_axis("radial_accel", 2 * tc.coefficients[2],
                          poly_accel_spacing(p), 2)
    jerk = centered_axis("radial_jerk", 6 * tc.coefficients[3],
                         poly_jerk_spacing(p), 2)

    arem_ops = grid.cell_count * p.pulse_count
    poly_ops = (grid.ranges.count * grid.radial_velocities.count
                * accel.count * jerk.count * p.pulse_count)
    print(f"grid {grid.shape}, M={p.pulse_count}: "
          f"{arem_ops:.2e} cell-pulses (sqrt search), "
          f"{poly_ops:.2e} (poly-3 search)")

    results = {}
    for backend in cr.available_backends():
        # warm-up covers JIT compilation for the numba path
        run_once(backend, cube, grid, p, accel, jerk)
        m, m3, t_arem, t_poly = run_once(backend, cube, grid, p, accel, jerk)
        results[backend] = (m, m3)
        print(f"{backend:6s}: sqrt search {t_arem:7.3f} s "
              f"({arem_ops / t_arem:.3e} cp/s) | "
              f"poly-3 {t_poly:7.3f} s ({poly_ops / t_poly:.3e} cp/s)")

    if len(results) == 2:
        a, b = (results["numba"][0].values, results["numpy"][0].values)
        scale = np.nanmax(np.abs(b))
        worst = np.nanmax(np.abs(a - b)) / scale
        print(f"backend agreement (sqrt search): worst relative "
              f"difference {worst:.2e}")


if __name__ == "__main__":
    main()
