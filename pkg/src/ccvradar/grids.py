"""Search-grid and integration-map containers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .scene import RadarParams


@dataclass(frozen=True)
class Axis:
    """A uniform, strictly increasing search axis."""

    name: str
    start: float
    step: float
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise ValueError(f"axis {self.name}: empty")
        if self.count > 1 and self.step <= 0:
            raise ValueError(f"axis {self.name}: step must be positive")

    @property
    def stop(self) -> float:
        return self.start + self.step * (self.count - 1)

    def values(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.count, dtype=np.float64)

    def index_of(self, value: float) -> int:
        """Nearest axis index for a value inside the axis span (+- step/2)."""
        idx = int(round((value - self.start) / self.step)) if self.count > 1 else 0
        snapped = self.start + self.step * idx
        tol = 0.5 * self.step + 1e-9 * max(abs(value), 1.0)
        if idx < 0 or idx >= self.count or abs(value - snapped) > tol:
            raise ValueError(f"axis {self.name}: value {value} outside "
                             f"[{self.start}, {self.stop}]")
        return idx


def _axis(name: str, lo: float, hi: float, step: float) -> Axis:
    if hi < lo:
        raise ValueError(f"axis {name}: max {hi} below min {lo}")
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return Axis(name, lo, step, count)


@dataclass(frozen=True)
class SearchGrid:
    """Discrete (range, radial velocity, speed) search axes.

    Default spacings are dr = c/(2B) and drdot = dv = lambda/(2T); overrides
    are recorded in spacing_overridden.
    """

    ranges: Axis
    radial_velocities: Axis
    speeds: Axis
    oversample: float = 1.0
    spacing_overridden: tuple[bool, bool, bool] = (False, False, False)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.ranges.count, self.radial_velocities.count,
                self.speeds.count)

    @property
    def cell_count(self) -> int:
        return int(np.prod(self.shape))

    def pruned_count(self) -> int:
        """Number of cells skipped because speed < |radial velocity|."""
        rd = np.abs(self.radial_velocities.values())
        v = self.speeds.values()
        per_rd = (v[None, :] < rd[:, None]).sum()
        return int(per_rd) * self.ranges.count


def build_search_grid(p: RadarParams,
                      bounds: tuple[float, float, float, float, float, float],
                      oversample: float = 1.0,
                      spacings: tuple[float | None, float | None, float | None]
                      = (None, None, None)) -> SearchGrid:
    """Build the search grid from (r_min, r_max, rdot_min, rdot_max, v_min, v_max).

    Spacings default to the matched resolutions (c/(2B) in range,
    lambda/(2T) in radial velocity and speed) divided by the oversample
    factor; explicit spacings override the defaults and are recorded.
    """
    r_min, r_max, rd_min, rd_max, v_min, v_max = bounds
    if r_min <= 0:
        raise ValueError("grid bounds: r_min must be positive")
    if v_min < 0:
        raise ValueError("grid bounds: v_min must be >= 0")
    if oversample < 1.0:
        raise ValueError("oversample factor must be >= 1")

    default_dr = p.range_resolution
    default_dv = p.wavelength / (2.0 * p.cpi)
    dr, drd, dv = spacings
    overridden = (dr is not None, drd is not None, dv is not None)
    dr = (dr if dr is not None else default_dr) / oversample
    drd = (drd if drd is not None else default_dv) / oversample
    dv = (dv if dv is not None else default_dv) / oversample

    return SearchGrid(
        ranges=_axis("range", r_min, r_max, dr),
        radial_velocities=_axis("radial_velocity", rd_min, rd_max, drd),
        speeds=_axis("speed", v_min, v_max, dv),
        oversample=oversample,
        spacing_overridden=overridden,
    )


@dataclass(frozen=True)
class IntegrationMap:
    """Complex integration output over a search grid.

    values has one dimension per axis; pruned or window-exiting cells carry
    NaN (never zero-as-data).  The invalid mask is therefore recoverable as
    np.isnan(values.real).
    """

    values: np.ndarray       # complex, shape = tuple(ax.count for ax in axes)
    axes: tuple[Axis, ...]
    method_tag: str

    def __post_init__(self):
        if self.values.shape != tuple(ax.count for ax in self.axes):
            raise ValueError("IntegrationMap: values shape does not match axes")
        self.values.setflags(write=False)

    @property
    def valid(self) -> np.ndarray:
        return ~np.isnan(self.values.real)

    def magnitudes(self) -> np.ndarray:
        return np.abs(self.values)

    def valid_magnitudes(self) -> np.ndarray:
        mags = np.abs(self.values[self.valid])
        return mags

    def axis(self, name: str) -> tuple[int, Axis]:
        for i, ax in enumerate(self.axes):
            if ax.name == name:
                return i, ax
        raise KeyError(f"map has no axis named {name!r}")

    def peak(self) -> tuple[tuple[int, ...], float]:
        """Indices and magnitude of the largest valid cell."""
        mags = np.abs(self.values)
        mags = np.where(self.valid, mags, -np.inf)
        flat = int(np.argmax(mags))
        idx = np.unravel_index(flat, self.values.shape)
        return tuple(int(i) for i in idx), float(mags[idx])

    def cell_params(self, indices: tuple[int, ...]) -> dict[str, float]:
        return {ax.name: float(ax.start + ax.step * i)
                for ax, i in zip(self.axes, indices)}
