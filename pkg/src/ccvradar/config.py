"""Scenario configuration: JSON parsing with path-qualified validation.

Unknown keys are rejected everywhere so typos fail loudly.  See README for
the documented schema; configs/ holds worked examples.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .scene import CcvTarget, RadarParams, ccv_from_cartesian


class ConfigError(ValueError):
    pass


def _require(d: dict, key: str, path: str):
    if key not in d:
        raise ConfigError(f"{path}.{key}: missing required key")
    return d[key]


def _number(val, path: str) -> float:
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {val!r}")
    return float(val)


def _integer(val, path: str) -> int:
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"{path}: expected an integer, got {val!r}")
    return val


def _object(val, path: str) -> dict:
    if not isinstance(val, dict):
        raise ConfigError(f"{path}: expected an object, got {type(val).__name__}")
    return val


def _no_extras(d: dict, allowed: set[str], path: str):
    extras = sorted(set(d) - allowed)
    if extras:
        raise ConfigError(f"{path}: unknown key(s) {extras}; "
                          f"allowed: {sorted(allowed)}")


@dataclass(frozen=True)
class PolyAxesConfig:
    """Extra search axes for the polynomial baselines, Taylor-centred."""

    accel_center: float | None = None   # m/s^2; None = centre on first target
    accel_half_cells: int = 1
    jerk_center: float | None = None    # m/s^3
    jerk_half_cells: int = 1


@dataclass(frozen=True)
class MonteCarloConfig:
    trials: int
    master_seed: int
    methods: tuple[str, ...]
    snr_start_db: float
    snr_stop_db: float
    snr_step_db: float = 1.0
    auto_bracket_db: float | None = None
    match_cells: int = 1


@dataclass(frozen=True)
class ScenarioConfig:
    radar: RadarParams
    targets: tuple[CcvTarget, ...]
    window: tuple[float, float]
    grid_bounds: tuple[float, float, float, float, float, float] | None
    oversample: float
    grid_spacings: tuple[float | None, float | None, float | None]
    noise_seed: int | None
    pfa: float
    poly_axes: PolyAxesConfig
    monte_carlo: MonteCarloConfig | None


_METHODS = ("arem", "poly1", "poly2", "poly3", "mtd")


def parse_config(raw: bytes | str) -> ScenarioConfig:
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from None
    return _parse_doc(_object(doc, "config"))


def load_config(path: str) -> tuple[ScenarioConfig, bytes]:
    """Parse a config file; returns the config and the raw bytes (for hashing)."""
    with open(path, "rb") as f:
        blob = f.read()
    return parse_config(blob), blob


def _parse_doc(doc: dict) -> ScenarioConfig:
    _no_extras(doc, {"radar", "targets", "window", "grid", "noise", "pfa",
                     "poly_axes", "monte_carlo"}, "config")

    rd = _object(_require(doc, "radar", "config"), "config.radar")
    _no_extras(rd, {"carrier_frequency_hz", "pulse_duration_s", "bandwidth_hz",
                    "sample_rate_hz", "prf_hz", "pulse_count"}, "config.radar")
    try:
        radar = RadarParams(
            carrier_frequency=_number(_require(rd, "carrier_frequency_hz",
                                               "config.radar"),
                                      "config.radar.carrier_frequency_hz"),
            pulse_duration=_number(_require(rd, "pulse_duration_s",
                                            "config.radar"),
                                   "config.radar.pulse_duration_s"),
            bandwidth=_number(_require(rd, "bandwidth_hz", "config.radar"),
                              "config.radar.bandwidth_hz"),
            sample_rate=_number(_require(rd, "sample_rate_hz", "config.radar"),
                                "config.radar.sample_rate_hz"),
            prf=_number(_require(rd, "prf_hz", "config.radar"),
                        "config.radar.prf_hz"),
            pulse_count=_integer(_require(rd, "pulse_count", "config.radar"),
                                 "config.radar.pulse_count"),
        )
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"config.radar: {e}") from None

    tl = _require(doc, "targets", "config")
    if not isinstance(tl, list) or not tl:
        raise ConfigError("config.targets: expected a non-empty list")
    targets = tuple(_parse_target(_object(t, f"config.targets[{i}]"),
                                  f"config.targets[{i}]")
                    for i, t in enumerate(tl))

    w = _object(_require(doc, "window", "config"), "config.window")
    _no_extras(w, {"r_lo_m", "r_hi_m"}, "config.window")
    window = (_number(_require(w, "r_lo_m", "config.window"),
                      "config.window.r_lo_m"),
              _number(_require(w, "r_hi_m", "config.window"),
                      "config.window.r_hi_m"))
    if window[1] <= window[0]:
        raise ConfigError("config.window: r_hi_m must exceed r_lo_m")

    grid_bounds = None
    oversample = 1.0
    spacings: tuple[float | None, float | None, float | None] = (None,) * 3
    if "grid" in doc:
        g = _object(doc["grid"], "config.grid")
        _no_extras(g, {"r_min_m", "r_max_m", "rdot_min_mps", "rdot_max_mps",
                       "v_min_mps", "v_max_mps", "oversample",
                       "dr_m", "drdot_mps", "dv_mps"}, "config.grid")
        grid_bounds = tuple(
            _number(_require(g, k, "config.grid"), f"config.grid.{k}")
            for k in ("r_min_m", "r_max_m", "rdot_min_mps", "rdot_max_mps",
                      "v_min_mps", "v_max_mps"))
        if "oversample" in g:
            oversample = _number(g["oversample"], "config.grid.oversample")
        spacings = tuple(
            _number(g[k], f"config.grid.{k}") if k in g else None
            for k in ("dr_m", "drdot_mps", "dv_mps"))

    noise_seed = None
    if doc.get("noise") is not None:
        n = _object(doc["noise"], "config.noise")
        _no_extras(n, {"seed"}, "config.noise")
        noise_seed = _integer(_require(n, "seed", "config.noise"),
                              "config.noise.seed")

    pfa = 1e-4
    if "pfa" in doc:
        pfa = _number(doc["pfa"], "config.pfa")
        if not 0.0 < pfa < 0.5:
            raise ConfigError("config.pfa: must be in (0, 0.5)")

    poly_axes = PolyAxesConfig()
    if "poly_axes" in doc:
        pa = _object(doc["poly_axes"], "config.poly_axes")
        _no_extras(pa, {"accel_center_mps2", "accel_half_cells",
                        "jerk_center_mps3", "jerk_half_cells"},
                   "config.poly_axes")
        poly_axes = PolyAxesConfig(
            accel_center=(_number(pa["accel_center_mps2"],
                                  "config.poly_axes.accel_center_mps2")
                          if "accel_center_mps2" in pa else None),
            accel_half_cells=_integer(pa.get("accel_half_cells", 1),
                                      "config.poly_axes.accel_half_cells"),
            jerk_center=(_number(pa["jerk_center_mps3"],
                                 "config.poly_axes.jerk_center_mps3")
                         if "jerk_center_mps3" in pa else None),
            jerk_half_cells=_integer(pa.get("jerk_half_cells", 1),
                                     "config.poly_axes.jerk_half_cells"),
        )

    mc = None
    if "monte_carlo" in doc:
        m = _object(doc["monte_carlo"], "config.monte_carlo")
        _no_extras(m, {"trials", "master_seed", "methods", "snr_start_db",
                       "snr_stop_db", "snr_step_db", "auto_bracket_db",
                       "match_cells"}, "config.monte_carlo")
        trials = _integer(_require(m, "trials", "config.monte_carlo"),
                          "config.monte_carlo.trials")
        if trials < 1:
            raise ConfigError("config.monte_carlo.trials: must be >= 1")
        methods = _require(m, "methods", "config.monte_carlo")
        if (not isinstance(methods, list) or not methods
                or not all(isinstance(x, str) for x in methods)):
            raise ConfigError("config.monte_carlo.methods: expected a "
                              "non-empty list of method names")
        for x in methods:
            if x not in _METHODS:
                raise ConfigError(f"config.monte_carlo.methods: unknown "
                                  f"method {x!r}; allowed: {list(_METHODS)}")
        mc = MonteCarloConfig(
            trials=trials,
            master_seed=_integer(_require(m, "master_seed",
                                          "config.monte_carlo"),
                                 "config.monte_carlo.master_seed"),
            methods=tuple(methods),
            snr_start_db=_number(_require(m, "snr_start_db",
                                          "config.monte_carlo"),
                                 "config.monte_carlo.snr_start_db"),
            snr_stop_db=_number(_require(m, "snr_stop_db",
                                         "config.monte_carlo"),
                                "config.monte_carlo.snr_stop_db"),
            snr_step_db=_number(m.get("snr_step_db", 1.0),
                                "config.monte_carlo.snr_step_db"),
            auto_bracket_db=(_number(m["auto_bracket_db"],
                                     "config.monte_carlo.auto_bracket_db")
                             if m.get("auto_bracket_db") is not None else None),
            match_cells=_integer(m.get("match_cells", 1),
                                 "config.monte_carlo.match_cells"),
        )

    return ScenarioConfig(radar=radar, targets=targets, window=window,
                          grid_bounds=grid_bounds, oversample=oversample,
                          grid_spacings=spacings, noise_seed=noise_seed,
                          pfa=pfa, poly_axes=poly_axes, monte_carlo=mc)


def _parse_target(t: dict, path: str) -> CcvTarget:
    snr = _number(t.get("snr_after_pc_db", 0.0), f"{path}.snr_after_pc_db")
    phase = _number(t.get("echo_phase_rad", 0.0), f"{path}.echo_phase_rad")
    cart_keys = {"x0_m", "y0_m", "vx_mps", "vy_mps"}
    triple_keys = {"r0_m", "rdot0_mps", "speed_mps"}
    common = {"snr_after_pc_db", "echo_phase_rad"}
    if cart_keys & set(t):
        _no_extras(t, cart_keys | common, path)
        x0 = _number(_require(t, "x0_m", path), f"{path}.x0_m")
        y0 = _number(_require(t, "y0_m", path), f"{path}.y0_m")
        vx = _number(_require(t, "vx_mps", path), f"{path}.vx_mps")
        vy = _number(_require(t, "vy_mps", path), f"{path}.vy_mps")
        try:
            r0, rd0, v = ccv_from_cartesian(x0, y0, vx, vy)
            return CcvTarget(r0, rd0, v, snr, phase,
                             cartesian_truth=(x0, y0, vx, vy))
        except ValueError as e:
            raise ConfigError(f"{path}: {e}") from None
    _no_extras(t, triple_keys | common, path)
    try:
        return CcvTarget(
            _number(_require(t, "r0_m", path), f"{path}.r0_m"),
            _number(_require(t, "rdot0_mps", path), f"{path}.rdot0_mps"),
            _number(_require(t, "speed_mps", path), f"{path}.speed_mps"),
            snr, phase)
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"{path}: {e}") from None
