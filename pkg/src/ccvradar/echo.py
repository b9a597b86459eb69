"""LFM echo synthesis and pulse compression.

Two synthesis paths are provided and cross-checked by the tests: a direct
compressed-domain path (sinc envelope walking along the exact range history,
fast, used by the integrator experiments) and a full raw-chirp path followed
by matched filtering (validates the front end).

Amplitude convention: compressed cubes are normalized so a unit-reflectivity
on-bin scatterer has per-pulse envelope peak magnitude 1.  With noise enabled
the injected noise is unit-variance circular complex Gaussian and the target
amplitude is A = 10^(snr_db/20), so snr_after_pc is peak power over noise
variance in the compressed domain.  The raw path injects noise with variance
equal to the chirp sample count so that the normalized matched filter (unit
compressed gain) delivers unit-variance compressed noise, keeping the two
paths statistically interchangeable.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scene import C, CcvTarget, RadarParams


@dataclass(frozen=True)
class DataCube:
    """Complex pulse-by-range matrix with range-axis metadata."""

    samples: np.ndarray      # complex128 [M pulses, N range bins], read-only
    range_axis_start: float  # range of bin 0, m
    range_bin: float         # bin spacing, m
    prf: float               # Hz
    domain_tag: str          # "raw" | "compressed"

    def __post_init__(self):
        if self.samples.ndim != 2 or self.samples.shape[0] < 1 or self.samples.shape[1] < 1:
            raise ValueError("DataCube.samples must be a non-empty 2-D matrix")
        if self.domain_tag not in ("raw", "compressed"):
            raise ValueError(f"DataCube.domain_tag invalid: {self.domain_tag!r}")
        self.samples.setflags(write=False)

    @property
    def pulse_count(self) -> int:
        return self.samples.shape[0]

    @property
    def bin_count(self) -> int:
        return self.samples.shape[1]

    def pulse_times(self) -> np.ndarray:
        return np.arange(self.pulse_count, dtype=np.float64) / self.prf

    def range_values(self) -> np.ndarray:
        return self.range_axis_start + self.range_bin * np.arange(
            self.bin_count, dtype=np.float64)


def _window_bin_count(r_lo: float, r_hi: float, dr: float) -> int:
    """Bin count for a window whose width must be a positive multiple of dr."""
    width = r_hi - r_lo
    if width <= 0:
        raise ValueError("range window must have positive width")
    n = round(width / dr)
    if n < 1 or abs(n * dr - width) > 1e-6 * dr:
        raise ValueError(
            f"window width {width} m is not a positive multiple of the "
            f"range bin {dr} m")
    return n + 1  # bin centers at r_lo, r_lo+dr, ..., r_hi inclusive


def _check_trajectories(targets, times, r_lo, r_hi):
    for k, tgt in enumerate(targets):
        ranges = tgt.range_at(times)
        bad = np.nonzero((ranges < r_lo) | (ranges > r_hi))[0]
        if bad.size:
            m = int(bad[0])
            raise ValueError(
                f"target {k} leaves the range window at pulse {m} "
                f"(range {ranges[m]:.1f} m outside [{r_lo}, {r_hi}])")


def _noise_rng(seed):
    if seed is None:
        return None
    return np.random.default_rng(seed)


def synth_compressed(p: RadarParams, targets: list[CcvTarget],
                     window: tuple[float, float], seed: int | None = None,
                     sinc_nulls: int = 4) -> DataCube:
    """Synthesize a pulse-compressed cube directly in the range domain.

    Each target contributes, per pulse, a sinc envelope of width c/(2B)
    centred on its instantaneous range, carrying the phase -4 pi r / lambda.
    The envelope is truncated beyond the first +-sinc_nulls nulls
    (contributions past 4 nulls are below -30 dB).  With seed=None the cube
    is noise-free and target amplitudes are 1; with a seed, unit-variance
    complex Gaussian noise is added and amplitudes are 10^(snr/20).
    """
    r_lo, r_hi = window
    n_bins = _window_bin_count(r_lo, r_hi, p.range_bin)
    times = p.pulse_times()
    _check_trajectories(targets, times, r_lo, r_hi)

    rng = _noise_rng(seed)
    cube = np.zeros((p.pulse_count, n_bins), dtype=np.complex128)
    rho = p.range_resolution
    half_width = sinc_nulls * rho
    k_phase = 4.0 * np.pi / p.wavelength

    for tgt in targets:
        amp = 10.0 ** (tgt.snr_after_pc / 20.0) if rng is not None else 1.0
        phasor0 = amp * np.exp(1j * tgt.echo_phase_rad)
        ranges = tgt.range_at(times)
        for m in range(p.pulse_count):
            r = ranges[m]
            lo = max(0, int(np.ceil((r - half_width - r_lo) / p.range_bin)))
            hi = min(n_bins - 1, int(np.floor((r + half_width - r_lo) / p.range_bin)))
            if lo > hi:
                continue
            bins = r_lo + p.range_bin * np.arange(lo, hi + 1)
            envelope = np.sinc((bins - r) / rho)
            cube[m, lo:hi + 1] += phasor0 * envelope * np.exp(-1j * k_phase * r)

    if rng is not None:
        cube += (rng.standard_normal(cube.shape)
                 + 1j * rng.standard_normal(cube.shape)) / np.sqrt(2.0)
    return DataCube(cube, r_lo, p.range_bin, p.prf, "compressed")


def _chirp_sample_offsets(p: RadarParams) -> np.ndarray:
    """Sample offsets (in fast-time samples) covered by one chirp."""
    n_half = int(round(p.pulse_duration * p.sample_rate)) // 2
    return np.arange(-n_half, n_half + 1)


def synth_raw(p: RadarParams, targets: list[CcvTarget],
              window: tuple[float, float], seed: int | None = None) -> DataCube:
    """Synthesize raw baseband chirp echoes on a fast-time grid.

    The fast-time grid covers the range window plus one pulse duration so
    that every echo chirp fits entirely.  Per pulse each target adds
    rect((t-tau)/Tp) * exp(j pi mu (t-tau)^2) * exp(-j 2 pi fc tau) with
    tau = 2 r(t_m) / c.
    """
    r_lo, r_hi = window
    n_window = _window_bin_count(r_lo, r_hi, p.range_bin)
    times = p.pulse_times()
    _check_trajectories(targets, times, r_lo, r_hi)

    offsets = _chirp_sample_offsets(p)
    n_half = offsets[-1]
    n_bins = n_window + 2 * n_half
    start = r_lo - n_half * p.range_bin
    dt = 1.0 / p.sample_rate
    mu = p.bandwidth / p.pulse_duration

    rng = _noise_rng(seed)
    cube = np.zeros((p.pulse_count, n_bins), dtype=np.complex128)
    grid_ranges = start + p.range_bin * np.arange(n_bins)

    for tgt in targets:
        amp = 10.0 ** (tgt.snr_after_pc / 20.0) if rng is not None else 1.0
        phasor0 = amp * np.exp(1j * tgt.echo_phase_rad)
        ranges = tgt.range_at(times)
        for m in range(p.pulse_count):
            r = ranges[m]
            tau = 2.0 * r / C
            # fast-time offsets of each grid sample from the echo center
            u = 2.0 * (grid_ranges - r) / C
            inside = np.abs(u) <= p.pulse_duration / 2.0
            cube[m, inside] += (phasor0
                                * np.exp(1j * np.pi * mu * u[inside] ** 2)
                                * np.exp(-2j * np.pi * p.carrier_frequency * tau))

    if rng is not None:
        # raw noise variance = chirp sample count, so the unit-gain matched
        # filter leaves unit-variance noise in the compressed domain
        sigma = np.sqrt(float(offsets.size))
        cube += sigma * (rng.standard_normal(cube.shape)
                         + 1j * rng.standard_normal(cube.shape)) / np.sqrt(2.0)
    return DataCube(cube, start, p.range_bin, p.prf, "raw")


def pulse_compress(raw: DataCube, p: RadarParams) -> DataCube:
    """Matched-filter each pulse against the reference chirp.

    Implemented as frequency-domain multiplication with the conjugate
    reference spectrum, normalized by the chirp energy so a unit-amplitude
    full-duration chirp compresses to peak magnitude 1 with zero reference
    phase at the peak.
    """
    if raw.domain_tag != "raw":
        raise ValueError("pulse_compress expects a raw cube")
    n_bins = raw.bin_count
    offsets = _chirp_sample_offsets(p)
    if offsets.size > n_bins:
        raise ValueError("cube has fewer fast-time samples than one chirp")
    dt = 1.0 / p.sample_rate
    mu = p.bandwidth / p.pulse_duration

    # reference chirp centred at sample 0 with circular wrap
    h = np.zeros(n_bins, dtype=np.complex128)
    h[offsets % n_bins] = np.exp(1j * np.pi * mu * (offsets * dt) ** 2)
    energy = float(offsets.size)

    spec = np.fft.fft(raw.samples, axis=1) * np.conj(np.fft.fft(h))[None, :]
    compressed = np.fft.ifft(spec, axis=1) / energy
    return DataCube(compressed, raw.range_axis_start, raw.range_bin, raw.prf,
                    "compressed")


def crop_cube(cube: DataCube, r_lo: float, r_hi: float) -> DataCube:
    """Restrict a cube to the bins whose centers lie in [r_lo, r_hi]."""
    ranges = cube.range_values()
    keep = np.nonzero((ranges >= r_lo - 1e-9) & (ranges <= r_hi + 1e-9))[0]
    if keep.size == 0:
        raise ValueError("crop window does not overlap the cube range axis")
    samples = cube.samples[:, keep[0]:keep[-1] + 1].copy()
    return DataCube(samples, float(ranges[keep[0]]), cube.range_bin, cube.prf,
                    cube.domain_tag)
