"""Command-line interface.

Subcommands: synth, integrate, slice, detect, pd-curve.  Every output file
embeds the SHA-256 (first 16 bytes) of the config it was produced from;
downstream commands refuse inputs whose hash does not match their --config.
"""
from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import fileio
from .config import ConfigError, ScenarioConfig, load_config
from .detect import (MethodSearch, PdScenario, calibrate_threshold, detect,
                     monte_carlo_pd)
from .echo import crop_cube, pulse_compress, synth_compressed, synth_raw
from .grids import Axis, IntegrationMap, SearchGrid, build_search_grid
from .integrate import (arem_grft, centered_axis, mtd, poly_accel_spacing,
                        poly_grft, poly_jerk_spacing)
from .scene import taylor_coeffs

METHOD_CHOICES = ("arem", "poly1", "poly2", "poly3", "mtd")


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ccvradar",
        description="Coherent integration for constant-Cartesian-velocity "
                    "radar targets (square-root range-model search plus "
                    "polynomial/MTD baselines).")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="synthesize an echo cube from a config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--raw", action="store_true",
                   help="run the raw-chirp path and pulse-compress it "
                        "instead of direct compressed-domain synthesis")
    s.add_argument("--seed", type=int, default=None,
                   help="override the config noise seed")
    s.set_defaults(func=_cmd_synth)

    s = sub.add_parser("integrate", help="run one integrator over a cube")
    s.add_argument("--cube", required=True)
    s.add_argument("--config", required=True)
    s.add_argument("--method", required=True, choices=METHOD_CHOICES)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_integrate)

    s = sub.add_parser("slice", help="extract a 2-D magnitude slice as CSV")
    s.add_argument("--map", required=True, dest="map_path")
    s.add_argument("--fix", action="append", default=[],
                   metavar="AXIS=VALUE",
                   help="fix an axis at the nearest grid plane (repeatable)")
    s.add_argument("--out", required=True)
    s.add_argument("--db", action="store_true",
                   help="write magnitudes in dB instead of linear")
    s.set_defaults(func=_cmd_slice)

    s = sub.add_parser("detect", help="CFAR-detect peaks in a map")
    s.add_argument("--map", required=True, dest="map_path")
    s.add_argument("--config", required=True)
    s.add_argument("--mode", choices=("ca", "empirical"), default="ca",
                   help="threshold mode: cell-averaging (default, "
                        "self-contained) or empirical noise-quantile")
    s.add_argument("--calib-maps", type=int, default=4,
                   help="noise-only maps to synthesize for empirical mode")
    s.add_argument("--out", default=None, help="JSON-lines output path")
    s.set_defaults(func=_cmd_detect)

    s = sub.add_parser("pd-curve", help="Monte-Carlo detection probability")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_pd)
    return p


def _load(path_cfg: str):
    cfg, blob = load_config(path_cfg)
    return cfg, fileio.config_hash(blob)


def _check_hash(file_hash: bytes, cfg_hash: bytes, what: str):
    if file_hash != cfg_hash:
        raise ValueError(
            f"{what} was produced from a different config "
            f"(hash {file_hash.hex()} != {cfg_hash.hex()}); refusing")


def _cmd_synth(args) -> int:
    cfg, h = _load(args.config)
    seed = args.seed if args.seed is not None else cfg.noise_seed
    if args.raw:
        raw = synth_raw(cfg.radar, list(cfg.targets), cfg.window, seed=seed)
        cube = crop_cube(pulse_compress(raw, cfg.radar), *cfg.window)
    else:
        cube = synth_compressed(cfg.radar, list(cfg.targets), cfg.window,
                                seed=seed)
    fileio.write_cube(args.out, cube, h)
    print(f"wrote {args.out}: {cube.pulse_count} pulses x "
          f"{cube.bin_count} bins, window [{cfg.window[0]}, {cfg.window[1]}] m"
          f", noise={'none' if seed is None else f'seed {seed}'}")
    return 0


def _grid_from_config(cfg: ScenarioConfig) -> SearchGrid:
    if cfg.grid_bounds is None:
        raise ValueError("config has no grid block (required for this method)")
    return build_search_grid(cfg.radar, cfg.grid_bounds, cfg.oversample,
                             cfg.grid_spacings)


def _poly_axes_from_config(cfg: ScenarioConfig, order: int
                           ) -> tuple[Axis | None, Axis | None]:
    if order < 2:
        return None, None
    pa = cfg.poly_axes
    tgt = cfg.targets[0]
    tc = taylor_coeffs(tgt.r0, tgt.rdot0, tgt.speed, 3)
    a_c = pa.accel_center if pa.accel_center is not None else 2.0 * tc.coefficients[2]
    accel = centered_axis("radial_accel", a_c, poly_accel_spacing(cfg.radar),
                          pa.accel_half_cells)
    if order < 3:
        return accel, None
    j_c = pa.jerk_center if pa.jerk_center is not None else 6.0 * tc.coefficients[3]
    jerk = centered_axis("radial_jerk", j_c, poly_jerk_spacing(cfg.radar),
                         pa.jerk_half_cells)
    return accel, jerk


def _run_method(cfg: ScenarioConfig, method: str, cube) -> IntegrationMap:
    if method == "mtd":
        return mtd(cube, cfg.radar)
    grid = _grid_from_config(cfg)
    if method == "arem":
        return arem_grft(cube, grid, cfg.radar)
    order = int(method[-1])
    accel, jerk = _poly_axes_from_config(cfg, order)
    return poly_grft(cube, grid, cfg.radar, order,
                     accel_axis=accel, jerk_axis=jerk)


def _cmd_integrate(args) -> int:
    cfg, h = _load(args.config)
    cube, cube_hash = fileio.read_cube(args.cube)
    _check_hash(cube_hash, h, f"cube {args.cube}")
    if cube.domain_tag != "compressed":
        raise ValueError("cube is raw; run synth without --raw or compress it")
    t0 = time.perf_counter()
    imap = _run_method(cfg, args.method, cube)
    elapsed = time.perf_counter() - t0
    fileio.write_map(args.out, imap, h)
    idx, peak = imap.peak()
    cells = imap.values.size
    rate = cells * cube.pulse_count / max(elapsed, 1e-9)
    params = ", ".join(f"{k}={v:g}" for k, v in imap.cell_params(idx).items())
    print(f"method={imap.method_tag} cells={cells} pulses={cube.pulse_count}")
    print(f"peak |G|={peak:.2f} at [{params}] (indices {list(idx)})")
    print(f"wall={elapsed:.3f} s  throughput={rate:.3e} cell-pulses/s")
    print(f"wrote {args.out}")
    return 0


def _cmd_slice(args) -> int:
    imap, h = fileio.read_map(args.map_path)
    fixed: dict[str, float] = {}
    for spec in args.fix:
        if "=" not in spec:
            raise ValueError(f"--fix expects AXIS=VALUE, got {spec!r}")
        name, _, val = spec.partition("=")
        fixed[name.strip()] = float(val)
    take: list = [slice(None)] * imap.values.ndim
    kept: list[Axis] = []
    note = []
    for d, ax in enumerate(imap.axes):
        if ax.name in fixed:
            idx = ax.index_of(fixed.pop(ax.name))
            take[d] = idx
            note.append(f"{ax.name}={ax.start + ax.step * idx:g}")
        else:
            kept.append(ax)
    if fixed:
        raise ValueError(f"--fix names not in map axes: {sorted(fixed)}; "
                         f"axes are {[a.name for a in imap.axes]}")
    if len(kept) != 2:
        raise ValueError(f"slice must leave exactly 2 free axes, got "
                         f"{[a.name for a in kept]}; use --fix")
    mags = np.abs(imap.values[tuple(take)])
    mags = np.where(np.isfinite(mags), mags, np.nan)
    fileio.write_slice_csv(args.out, kept[0], kept[1], mags, cfg_hash=h,
                           header_comment=f"method={imap.method_tag} "
                                          + " ".join(note),
                           db=args.db)
    print(f"wrote {args.out}: {kept[0].name} x {kept[1].name} "
          f"({kept[0].count} x {kept[1].count})"
          + (f" at {' '.join(note)}" if note else ""))
    return 0


def _cmd_detect(args) -> int:
    cfg, h = _load(args.config)
    imap, map_hash = fileio.read_map(args.map_path)
    _check_hash(map_hash, h, f"map {args.map_path}")
    if args.mode == "ca":
        calib = calibrate_threshold(imap, cfg.pfa, mode="cell_averaging")
    else:
        pools = []
        pooled = 0
        method = {"arem_grft": "arem", "poly_grft1": "poly1",
                  "poly_grft2": "poly2", "poly_grft3": "poly3",
                  "mtd": "mtd"}[imap.method_tag]
        needed = int(np.ceil(10.0 / cfg.pfa))
        k = 0
        while k < max(1, args.calib_maps) or pooled < needed:
            seed = (cfg.noise_seed or 0) + 7_000_003 * (k + 1)
            noise = synth_compressed(cfg.radar, [], cfg.window, seed=seed)
            mags = _run_method(cfg, method, noise).valid_magnitudes()
            pools.append(mags)
            pooled += mags.size
            k += 1
        calib = calibrate_threshold(np.concatenate(pools), cfg.pfa,
                                    mode="empirical")
    dets = detect(imap, calib)
    meta = {"map": args.map_path, "method": imap.method_tag,
            "pfa": cfg.pfa, "mode": calib.mode,
            "config_sha256_16": h.hex(), "detections": len(dets)}
    lines = [json.dumps(meta)]
    for d in dets:
        lines.append(json.dumps({
            "indices": list(d.indices), "params": d.params,
            "amplitude": d.amplitude, "threshold": d.threshold_at_cell}))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
        print(f"{len(dets)} detection(s); wrote {args.out}")
    else:
        print(text, end="")
    return 0


def _cmd_pd(args) -> int:
    cfg, h = _load(args.config)
    mc = cfg.monte_carlo
    if mc is None:
        raise ValueError("config has no monte_carlo block")
    if len(cfg.targets) != 1:
        raise ValueError("pd-curve expects exactly one target in the config")
    searches = []
    for method in mc.methods:
        if method == "mtd":
            searches.append(MethodSearch("mtd"))
            continue
        grid = _grid_from_config(cfg)
        order = 0 if method == "arem" else int(method[-1])
        accel, jerk = _poly_axes_from_config(cfg, order) if order >= 2 else (None, None)
        searches.append(MethodSearch(method, grid=grid,
                                     accel_axis=accel, jerk_axis=jerk))
    scenario = PdScenario(cfg.radar, cfg.targets[0], cfg.window,
                          tuple(searches))
    curves = monte_carlo_pd(
        scenario, mc.snr_start_db, mc.snr_stop_db, mc.snr_step_db,
        trials=mc.trials, pfa=cfg.pfa, master_seed=mc.master_seed,
        match_cells=mc.match_cells, auto_bracket_db=mc.auto_bracket_db,
        progress=lambda msg: print(f"  {msg}"))
    fileio.write_pd_csv(args.out, curves, cfg_hash=h)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
