"""Radar constants, target kinematics and the square-root range evolution law.

A target flying a straight line at constant speed in Cartesian coordinates
has a slant range that evolves as the square root of a quadratic in time.
That law, its Cartesian parametrization and its low-order Taylor expansion
live here; everything downstream (echo synthesis, integrators) builds on it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

C = 3.0e8  # propagation speed (m/s), radar convention


@dataclass(frozen=True)
class RadarParams:
    """Waveform and sampling constants for a pulsed LFM radar."""

    carrier_frequency: float  # Hz
    pulse_duration: float     # s
    bandwidth: float          # Hz
    sample_rate: float        # Hz
    prf: float                # Hz
    pulse_count: int          # pulses per CPI

    def __post_init__(self):
        for name in ("carrier_frequency", "pulse_duration", "bandwidth",
                     "sample_rate", "prf"):
            if getattr(self, name) <= 0:
                raise ValueError(f"RadarParams.{name} must be positive")
        if self.pulse_count < 1:
            raise ValueError("RadarParams.pulse_count must be >= 1")
        if self.sample_rate < self.bandwidth:
            raise ValueError(
                "sample_rate must be >= bandwidth (chirp would be undersampled)")

    @property
    def wavelength(self) -> float:
        return C / self.carrier_frequency

    @property
    def range_resolution(self) -> float:
        """Compressed mainlobe width c/(2B), in metres."""
        return C / (2.0 * self.bandwidth)

    @property
    def range_bin(self) -> float:
        """Range sampling cell c/(2 fs), in metres."""
        return C / (2.0 * self.sample_rate)

    @property
    def cpi(self) -> float:
        """Coherent processing interval M/prf, in seconds."""
        return self.pulse_count / self.prf

    @property
    def blind_speed(self) -> float:
        """Radial-velocity ambiguity spacing lambda*prf/2, in m/s."""
        return self.wavelength * self.prf / 2.0

    def pulse_times(self) -> np.ndarray:
        """Slow-time sampling instants m/prf for m = 0..M-1."""
        return np.arange(self.pulse_count, dtype=np.float64) / self.prf


class DerivedParams(NamedTuple):
    wavelength: float        # m
    range_resolution: float  # m
    range_bin: float         # m
    cpi: float               # s
    blind_speed: float       # m/s


def derived_params(p: RadarParams) -> DerivedParams:
    """Bundle the derived waveform constants used throughout the pipeline."""
    return DerivedParams(p.wavelength, p.range_resolution, p.range_bin,
                         p.cpi, p.blind_speed)


@dataclass(frozen=True)
class CcvTarget:
    """Kinematic truth for one constant-Cartesian-velocity target.

    The triple (r0, rdot0, speed) fully determines the range history; a
    Cartesian state may be attached for provenance and is checked for
    consistency with the triple.
    """

    r0: float              # initial slant range, m
    rdot0: float           # initial radial velocity, m/s (signed, >0 receding)
    speed: float           # Cartesian speed magnitude, m/s
    snr_after_pc: float = 0.0    # dB, peak power over unit noise variance
    echo_phase_rad: float = 0.0  # reflectivity phase of the compressed echo
    cartesian_truth: tuple[float, float, float, float] | None = None  # (x0, y0, vx, vy)

    def __post_init__(self):
        if self.r0 <= 0:
            raise ValueError("CcvTarget.r0 must be positive")
        if self.speed < 0:
            raise ValueError("CcvTarget.speed must be >= 0")
        if abs(self.rdot0) > self.speed * (1.0 + 1e-12) + 1e-9:
            raise ValueError(
                "CcvTarget: |rdot0| cannot exceed speed "
                f"(got rdot0={self.rdot0}, speed={self.speed})")
        if self.cartesian_truth is not None:
            x0, y0, vx, vy = self.cartesian_truth
            r0, rdot0, speed = ccv_from_cartesian(x0, y0, vx, vy)
            scale = max(abs(self.r0), abs(self.speed), 1.0)
            if (abs(r0 - self.r0) > 1e-6 * scale
                    or abs(rdot0 - self.rdot0) > 1e-6 * scale
                    or abs(speed - self.speed) > 1e-6 * scale):
                raise ValueError(
                    "CcvTarget: cartesian_truth is inconsistent with the "
                    f"(r0, rdot0, speed) triple: maps to ({r0}, {rdot0}, {speed})")

    def range_at(self, t):
        return range_at(self.r0, self.rdot0, self.speed, t)


def ccv_from_cartesian(x0: float, y0: float, vx: float, vy: float
                       ) -> tuple[float, float, float]:
    """Map a Cartesian state to the (r0, rdot0, speed) range-coordinate triple.

    Raises ValueError when the initial position is the radar origin.
    """
    r0 = math.hypot(x0, y0)
    if r0 == 0.0:
        raise ValueError("initial position coincides with the radar origin")
    speed = math.hypot(vx, vy)
    rdot0 = (x0 * vx + y0 * vy) / r0
    # rounding can push |rdot0| a few ulps past speed for collinear motion
    if abs(rdot0) > speed:
        if abs(rdot0) - speed < 16 * np.finfo(float).eps * max(speed, 1.0):
            rdot0 = math.copysign(speed, rdot0)
        else:  # pragma: no cover - unreachable for finite inputs
            raise ValueError("radial velocity exceeds speed")
    return r0, rdot0, speed


def range_at(r0: float, rdot0: float, speed: float, t):
    """Slant range sqrt(r0^2 + 2 r0 rdot0 t + speed^2 t^2) at time(s) t.

    Accepts scalar or ndarray t.  The radicand is evaluated in exactly this
    form; it is non-negative whenever |rdot0| <= speed.
    """
    t = np.asarray(t, dtype=np.float64)
    radicand = r0 * r0 + 2.0 * r0 * rdot0 * t + speed * speed * t * t
    if np.any(radicand < 0.0):
        raise ValueError("range_at: negative radicand "
                         "(kinematic invariants violated)")
    out = np.sqrt(radicand)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class TaylorCoeffs:
    """Factors of t^l in the polynomial expansion of the range law at t=0.

    coefficients[l] multiplies t^l directly (the 1/l! of the derivative is
    already absorbed).
    """

    coefficients: tuple[float, ...]

    def __post_init__(self):
        if len(self.coefficients) < 2:
            raise ValueError("TaylorCoeffs needs at least order 1")
        if not all(math.isfinite(c) for c in self.coefficients):
            raise ValueError("TaylorCoeffs must be finite")

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def partial_sum(self, t):
        """Evaluate the truncated polynomial at time(s) t."""
        t = np.asarray(t, dtype=np.float64)
        out = np.zeros_like(t)
        for coeff in reversed(self.coefficients):
            out = out * t + coeff
        return float(out) if out.ndim == 0 else out


def taylor_coeffs(r0: float, rdot0: float, speed: float, order: int
                  ) -> TaylorCoeffs:
    """Closed-form expansion factors of the range law through t^4.

    Orders above 4 are not supported; the closed forms are
      t^2: (v^2 - rdot0^2) / (2 r0)
      t^3: (rdot0^3 - rdot0 v^2) / (2 r0^2)
      t^4: (6 rdot0^2 v^2 - v^4 - 5 rdot0^4) / (8 r0^3)
    """
    if not 1 <= order <= 4:
        raise ValueError(f"taylor_coeffs: order must be in 1..4, got {order}")
    v2 = speed * speed
    rd2 = rdot0 * rdot0
    coeffs = [
        float(r0),
        float(rdot0),
        (v2 - rd2) / (2.0 * r0),
        (rdot0 * rd2 - rdot0 * v2) / (2.0 * r0 * r0),
        (6.0 * rd2 * v2 - v2 * v2 - 5.0 * rd2 * rd2) / (8.0 * r0 ** 3),
    ]
    return TaylorCoeffs(tuple(coeffs[:order + 1]))
