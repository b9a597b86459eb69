"""Search-based coherent integrators.

arem_grft sums cube samples along square-root range trajectories
r_s(t) = sqrt(r^2 + 2 r rdot t + v^2 t^2) with phase compensation
exp(+j 4 pi r_s(t) / lambda); cells with speed < |radial velocity| are
skipped (the kinematics forbid them) and cells whose trajectory leaves the
cube window are marked invalid rather than clamped.

poly_grft is the polynomial-trajectory baseline family: order 1 is the
classic 2-D (range, radial velocity) transform, orders 2 and 3 add radial
acceleration and jerk axes.  Its phase compensation excludes the constant
term.  mtd is the no-migration-handling slow-time DFT baseline.
"""
from __future__ import annotations

import numpy as np

from . import backend
from .echo import DataCube
from .grids import Axis, IntegrationMap, SearchGrid
from .scene import RadarParams

_ROUND_NOTE = "extraction rounds with floor(x + 0.5): half-away-from-zero " \
    "for every reachable bin"


def _require_compressed(cube: DataCube):
    if cube.domain_tag != "compressed":
        raise ValueError("integrator expects a compressed cube "
                         f"(got domain_tag={cube.domain_tag!r})")


def _cube_t(cube: DataCube) -> np.ndarray:
    return np.ascontiguousarray(cube.samples.T)


def _finish(values: np.ndarray, axes: tuple[Axis, ...], tag: str,
            allow_all_invalid: bool = False) -> IntegrationMap:
    if not allow_all_invalid and np.all(np.isnan(values.real)):
        raise ValueError(f"{tag}: every searched trajectory leaves the cube "
                         "range window (grid/window mismatch)")
    return IntegrationMap(values, axes, tag)


def arem_grft(cube: DataCube, grid: SearchGrid, p: RadarParams
              ) -> IntegrationMap:
    """Integrate over the (range, radial velocity, speed) search grid."""
    _require_compressed(cube)
    kern = backend.kernels()
    values = kern.arem_map(
        _cube_t(cube),
        grid.ranges.values(), grid.radial_velocities.values(),
        grid.speeds.values(),
        cube.pulse_times(), cube.range_axis_start, 1.0 / cube.range_bin,
        2.0 / p.wavelength)
    axes = (grid.ranges, grid.radial_velocities, grid.speeds)
    return _finish(values, axes, "arem_grft")


def poly_accel_spacing(p: RadarParams) -> float:
    """Matched radial-acceleration spacing lambda/(2 T^2) * 2!."""
    return p.wavelength / (2.0 * p.cpi ** 2) * 2.0


def poly_jerk_spacing(p: RadarParams) -> float:
    """Matched radial-jerk spacing lambda/(2 T^3) * 3!."""
    return p.wavelength / (2.0 * p.cpi ** 3) * 6.0


def centered_axis(name: str, center: float, step: float, half_cells: int
                  ) -> Axis:
    """Uniform axis of 2*half_cells+1 points centred on a value."""
    return Axis(name, center - step * half_cells, step, 2 * half_cells + 1)


def poly_grft(cube: DataCube, grid: SearchGrid, p: RadarParams, order: int,
              accel_axis: Axis | None = None,
              jerk_axis: Axis | None = None) -> IntegrationMap:
    """Polynomial-trajectory baseline of order 1, 2 or 3.

    Orders 2 and 3 require explicit acceleration (and jerk) axes; use
    poly_accel_spacing / poly_jerk_spacing for the matched spacings.  The
    grid's speed axis is ignored.
    """
    _require_compressed(cube)
    if order not in (1, 2, 3):
        raise ValueError(f"poly_grft: order must be 1, 2 or 3, got {order}")
    zero = Axis("zero", 0.0, 1.0, 1)
    if order == 1:
        if accel_axis is not None or jerk_axis is not None:
            raise ValueError("poly_grft order 1 takes no extra axes")
        a_ax, j_ax = zero, zero
    elif order == 2:
        if accel_axis is None or jerk_axis is not None:
            raise ValueError("poly_grft order 2 needs accel_axis only")
        a_ax, j_ax = accel_axis, zero
    else:
        if accel_axis is None or jerk_axis is None:
            raise ValueError("poly_grft order 3 needs accel_axis and jerk_axis")
        a_ax, j_ax = accel_axis, jerk_axis

    kern = backend.kernels()
    values = kern.poly_map(
        _cube_t(cube),
        grid.ranges.values(), grid.radial_velocities.values(),
        a_ax.values(), j_ax.values(),
        cube.pulse_times(), cube.range_axis_start, 1.0 / cube.range_bin,
        2.0 / p.wavelength)

    axes: tuple[Axis, ...] = (grid.ranges, grid.radial_velocities)
    if order == 1:
        values = values[:, :, 0, 0]
    elif order == 2:
        values = values[:, :, :, 0]
        axes = axes + (a_ax,)
    else:
        axes = axes + (a_ax, j_ax)
    return _finish(np.ascontiguousarray(values), axes, f"poly_grft{order}")


def mtd(cube: DataCube, p: RadarParams) -> IntegrationMap:
    """Per-range-bin slow-time DFT; no range-walk handling by design.

    A scatterer at radial velocity rdot rotates at Doppler -2*rdot/lambda,
    so Doppler bins are labelled with the (aliased) radial velocity
    -lambda*f/2 in m/s, ascending.
    """
    _require_compressed(cube)
    M = cube.pulse_count
    spectrum = np.fft.fft(cube.samples, axis=0)          # [M, N]
    freqs = np.fft.fftfreq(M, d=1.0 / cube.prf)
    order = np.argsort(-freqs, kind="stable")            # ascending velocity
    values = np.ascontiguousarray(spectrum[order, :].T)  # [N, M]
    velocities = -0.5 * p.wavelength * freqs[order]
    range_axis = Axis("range", cube.range_axis_start, cube.range_bin,
                      cube.bin_count)
    vel_axis = Axis("radial_velocity", float(velocities[0]),
                    p.wavelength * cube.prf / (2.0 * M), M)
    return IntegrationMap(values, (range_axis, vel_axis), "mtd")


def trajectory_of_cell(r_s: float, rdot_s: float, v_s: float,
                       cube: DataCube) -> np.ndarray:
    """The exact (pulse, range bin) extraction path arem_grft uses.

    Returns an int array of shape (M, 2); bins may fall outside
    [0, cube.bin_count) when the trajectory leaves the window, which is
    exactly the condition that invalidates the cell.
    """
    t = cube.pulse_times()
    rs = np.sqrt(r_s * r_s + 2.0 * r_s * rdot_s * t + v_s * v_s * t * t)
    x = (rs - cube.range_axis_start) / cube.range_bin
    bins = np.floor(x + 0.5).astype(np.int64)
    out = np.empty((t.size, 2), np.int64)
    out[:, 0] = np.arange(t.size)
    out[:, 1] = bins
    return out
