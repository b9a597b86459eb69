import numpy as np
import pytest

import ccvradar
from ccvradar import (Axis, CcvTarget, DataCube, RadarParams, arem_grft,
                      build_search_grid, mtd, poly_grft, range_at,
                      set_backend, synth_compressed, synth_raw,
                      pulse_compress, crop_cube, trajectory_of_cell)
from ccvradar.integrate import centered_axis, poly_accel_spacing, poly_jerk_spacing

P500 = RadarParams(1.5e9, 10e-6, 20e6, 50e6, 200.0, 500)
P64 = RadarParams(1.5e9, 10e-6, 20e6, 50e6, 200.0, 64)


def test_grid_spacings_and_counts():
    g = build_search_grid(P500, (24000.0, 25000.0, 50.0, 70.0, 780.0, 820.0))
    assert g.radial_velocities.step == pytest.approx(0.04, rel=1e-12)
    assert g.radial_velocities.count == 501
    assert g.ranges.step == pytest.approx(7.5)
    assert g.speeds.step == pytest.approx(0.04, rel=1e-12)
    g2 = build_search_grid(P500, (24000.0, 25000.0, 50.0, 70.0, 790.0, 810.0))
    assert g2.speeds.count == 501


def test_grid_degenerate_axis_and_errors():
    g = build_search_grid(P500, (25000.0, 25000.0, 0.0, 1.0, 0.0, 1.0))
    assert g.ranges.count == 1
    with pytest.raises(ValueError, match="r_min"):
        build_search_grid(P500, (0.0, 100.0, 0.0, 1.0, 0.0, 1.0))
    with pytest.raises(ValueError, match="v_min"):
        build_search_grid(P500, (100.0, 200.0, 0.0, 1.0, -1.0, 1.0))
    with pytest.raises(ValueError, match="oversample"):
        build_search_grid(P500, (100.0, 200.0, 0.0, 1.0, 0.0, 1.0),
                          oversample=0.5)
    with pytest.raises(ValueError, match="below"):
        build_search_grid(P500, (200.0, 100.0, 0.0, 1.0, 0.0, 1.0))


def test_grid_oversample_and_overrides_recorded():
    bounds = (24000.0, 24300.0, 0.0, 2.0, 0.0, 2.0)
    g1 = build_search_grid(P500, bounds)
    g2 = build_search_grid(P500, bounds, oversample=2.0)
    assert g2.ranges.count == 2 * (g1.ranges.count - 1) + 1
    assert g1.spacing_overridden == (False, False, False)
    g3 = build_search_grid(P500, bounds, spacings=(None, 0.5, None))
    assert g3.spacing_overridden == (False, True, False)
    assert g3.radial_velocities.step == 0.5


def make_cube(p=P64, tgt=None, window=(24900.0, 25200.0), seed=None):
    targets = [tgt] if tgt is not None else []
    return synth_compressed(p, targets, window, seed=seed)


def small_grid(p=P64, center=(25000.0, 60.0, 800.0), cells=(4, 6, 6)):
    r0, rd0, v0 = center
    dr = p.range_resolution
    dv = p.wavelength / (2.0 * p.cpi)
    return build_search_grid(p, (r0 - cells[0] * dr, r0 + cells[0] * dr,
                                 rd0 - cells[1] * dv, rd0 + cells[1] * dv,
                                 v0 - cells[2] * dv, v0 + cells[2] * dv))


def test_matched_cell_single_pulse_equals_envelope():
    p = RadarParams(1.5e9, 10e-6, 20e6, 50e6, 200.0, 1)
    tgt = CcvTarget(25000.0, 60.0, 800.0)
    cube = make_cube(p, tgt)
    g = small_grid(p)
    m = arem_grft(cube, g, p)
    i = g.ranges.index_of(25000.0)
    j = g.radial_velocities.index_of(60.0)
    q = g.speeds.index_of(800.0)
    bins = trajectory_of_cell(25000.0, 60.0, 800.0, cube)
    envelope = abs(cube.samples[0, bins[0, 1]])
    assert abs(m.values[i, j, q]) == pytest.approx(envelope, rel=1e-9)


def test_matched_cell_noise_free_gain():
    tgt = CcvTarget(25000.0, 60.0, 800.0)
    cube = make_cube(tgt=tgt)
    g = small_grid()
    m = arem_grft(cube, g, P64)
    idx, peak = m.peak()
    assert m.cell_params(idx) == pytest.approx(
        {"range": 25000.0, "radial_velocity": 60.0, "speed": 800.0})
    assert peak >= 0.93 * P64.pulse_count


def test_matched_cell_phase_coherence_both_paths():
    tgt = CcvTarget(25000.0, 60.0, 800.0)
    w = (24900.0, 25200.0)
    direct = make_cube(tgt=tgt)
    via_raw = crop_cube(pulse_compress(synth_raw(P64, [tgt], w), P64), *w)
    for cube in (direct, via_raw):
        bins = trajectory_of_cell(25000.0, 60.0, 800.0, cube)
        t = cube.pulse_times()
        rs = range_at(25000.0, 60.0, 800.0, t)
        phasors = cube.samples[bins[:, 0], bins[:, 1]] * np.exp(
            4j * np.pi * rs / P64.wavelength)
        resultant = np.abs(np.mean(phasors / np.abs(phasors)))
        circ_std = np.sqrt(-2.0 * np.log(resultant))
        assert circ_std < 0.2


def test_rft_reduction_exact_cells():
    # on the v = |rdot| plane (with positive trajectories) the square-root
    # search and the order-1 polynomial search extract the same bins and
    # differ only by a constant phase
    rng = np.random.default_rng(5)
    samples = (rng.standard_normal((P64.pulse_count, 101))
               + 1j * rng.standard_normal((P64.pulse_count, 101)))
    cube = DataCube(samples, 24900.0, 3.0, 200.0, "compressed")
    grid = build_search_grid(
        P64, (24960.0, 25050.0, -30.0, 30.0, 0.0, 30.0),
        spacings=(7.5, 10.0, 10.0))
    ma = arem_grft(cube, grid, P64)
    mp = poly_grft(cube, grid, P64, 1)
    rd = grid.radial_velocities.values()
    vs = grid.speeds.values()
    checked = 0
    for j, rdj in enumerate(rd):
        q = np.nonzero(vs == abs(rdj))[0]
        assert q.size == 1
        q = q[0]
        for i, ri in enumerate(grid.ranges.values()):
            if ri + rdj * P64.cpi <= 0 or np.isnan(ma.values[i, j, q].real):
                continue
            ta = trajectory_of_cell(ri, rdj, abs(rdj), cube)
            d = ri + rdj * cube.pulse_times()
            tp = np.floor((d - cube.range_axis_start) / cube.range_bin
                          + 0.5).astype(int)
            np.testing.assert_array_equal(ta[:, 1], tp)
            assert abs(ma.values[i, j, q]) == pytest.approx(
                abs(mp.values[i, j]), rel=1e-9)
            checked += 1
    assert checked >= 30


def test_cell_magnitude_upper_bound():
    tgt = CcvTarget(25000.0, 60.0, 800.0, snr_after_pc=3.0)
    cube = make_cube(tgt=tgt, seed=11)
    g = small_grid()
    m = arem_grft(cube, g, P64)
    rng = np.random.default_rng(2)
    vals = g.ranges.values(), g.radial_velocities.values(), g.speeds.values()
    for _ in range(25):
        i, j, q = (rng.integers(0, n) for n in g.shape)
        if np.isnan(m.values[i, j, q].real):
            continue
        bins = trajectory_of_cell(vals[0][i], vals[1][j], vals[2][q], cube)
        bound = np.abs(cube.samples[bins[:, 0], bins[:, 1]]).sum()
        assert abs(m.values[i, j, q]) <= bound + 1e-9


def test_pruned_cells_are_nan_and_counted():
    cube = make_cube()
    grid = build_search_grid(
        P64, (24960.0, 25050.0, -30.0, 30.0, 0.0, 30.0),
        spacings=(7.5, 10.0, 10.0))
    m = arem_grft(cube, grid, P64)
    rd = grid.radial_velocities.values()
    vs = grid.speeds.values()
    pruned_mask = vs[None, :] < np.abs(rd)[:, None]
    expected = int(pruned_mask.sum()) * grid.ranges.count
    assert grid.pruned_count() == expected
    got_invalid = ~m.valid
    # pruned cells are invalid; a few more may be invalid from window exits
    for j in range(rd.size):
        for q in range(vs.size):
            if pruned_mask[j, q]:
                assert got_invalid[:, j, q].all()


def test_out_of_window_cells_invalid_not_clamped():
    tgt = CcvTarget(25000.0, 60.0, 800.0)
    cube = make_cube(tgt=tgt, window=(24900.0, 25026.0))
    g = small_grid(cells=(2, 2, 2))
    # the outermost range cells walk out of this tight window within 64 pulses
    m = arem_grft(cube, g, P64)
    assert (~m.valid).any()
    exited = trajectory_of_cell(25015.0, 60.625, 800.0, cube)
    assert (exited[:, 1] >= cube.bin_count).any()


def test_all_cells_invalid_raises_mismatch():
    cube = make_cube(window=(24000.0, 24300.0))
    g = small_grid()  # centred at 25 km: nothing overlaps
    with pytest.raises(ValueError, match="window"):
        arem_grft(cube, g, P64)


def test_arem_rejects_raw_cube():
    raw = synth_raw(P64, [], (24000.0, 24300.0))
    with pytest.raises(ValueError, match="compressed"):
        arem_grft(raw, small_grid(), P64)


def test_bssl_ridges_at_blind_speed_offsets():
    p = RadarParams(1.5e9, 10e-6, 20e6, 50e6, 200.0, 128)
    tgt = CcvTarget(25000.0, 40.0, 40.0)
    cube = synth_compressed(p, [tgt], (24900.0, 25200.0))
    dv = p.wavelength / (2.0 * p.cpi)
    g = build_search_grid(p, (24985.0, 25015.0, 10.0, 70.0, 35.0, 70.0))
    m = arem_grft(cube, g, p)
    mags = np.where(m.valid, np.abs(m.values), np.nan)
    rd = g.radial_velocities.values()
    main = np.nanmax(mags[:, np.abs(rd - 40.0) < 1.0, :])
    floor = np.nanmedian(mags)
    for ridge_rd in (20.0, 60.0):  # +-1 blind speed (20 m/s at Table-2 PRF)
        sel = np.abs(rd - ridge_rd) < 0.5
        ridge = np.nanmax(mags[:, sel, :])
        assert ridge > 4.0 * floor
        assert ridge < 0.9 * main


def test_single_mainlobe_component_above_third_peak():
    # away from the correlated (rdot, speed) mainlobe ridge and with blind
    # speeds outside the window, no cell reaches a third of the peak
    from scipy import ndimage
    p = RadarParams(1.5e9, 10e-6, 20e6, 50e6, 200.0, 128)
    tgt = CcvTarget(25000.0, 60.0, 800.0)
    cube = synth_compressed(p, [tgt], (24900.0, 25200.0))
    dr, dv = p.range_resolution, p.wavelength / (2 * p.cpi)
    g = build_search_grid(p, (25000 - 10 * dr, 25000 + 10 * dr,
                              60 - 20 * dv, 60 + 20 * dv,
                              800 - 20 * dv, 800 + 20 * dv))
    m = arem_grft(cube, g, p)
    mags = np.where(m.valid, np.abs(m.values), 0.0)
    idx, peak = m.peak()
    labels, n = ndimage.label(mags > peak / 3.0,
                              structure=np.ones((3, 3, 3), bool))
    assert n == 1
    assert labels[idx] == 1


def test_thread_count_determinism():
    pytest.importorskip("numba")
    import numba
    tgt = CcvTarget(25000.0, 60.0, 800.0, snr_after_pc=6.0)
    cube = make_cube(tgt=tgt, seed=9)
    g = small_grid()
    before = numba.get_num_threads()
    try:
        numba.set_num_threads(1)
        m1 = arem_grft(cube, g, P64)
        numba.set_num_threads(max(2, before))
        m2 = arem_grft(cube, g, P64)
    finally:
        numba.set_num_threads(before)
    np.testing.assert_array_equal(m1.values, m2.values)


def test_repeat_run_determinism():
    tgt = CcvTarget(25000.0, 60.0, 800.0, snr_after_pc=6.0)
    cube = make_cube(tgt=tgt, seed=9)
    g = small_grid()
    a = arem_grft(cube, g, P64).values
    b = arem_grft(cube, g, P64).values
    np.testing.assert_array_equal(a, b)


def test_backend_agreement():
    tgt = CcvTarget(25000.0, 60.0, 800.0, snr_after_pc=0.0)
    cube = make_cube(tgt=tgt, seed=21)
    g = small_grid(cells=(3, 4, 4))
    tc = ccvradar.taylor_coeffs(25000.0, 60.0, 800.0, 3)
    aax = centered_axis("radial_accel", 2 * tc.coefficients[2],
                        poly_accel_spacing(P64), 2)
    jax = centered_axis("radial_jerk", 6 * tc.coefficients[3],
                        poly_jerk_spacing(P64), 2)
    prev = set_backend("numpy")
    try:
        a_np = arem_grft(cube, g, P64).values
        p_np = poly_grft(cube, g, P64, 3, accel_axis=aax, jerk_axis=jax).values
    finally:
        set_backend(prev)
    if prev != "numpy":
        a_nb = arem_grft(cube, g, P64).values
        p_nb = poly_grft(cube, g, P64, 3, accel_axis=aax, jerk_axis=jax).values
        np.testing.assert_allclose(a_nb, a_np, rtol=1e-9,
                                   atol=1e-9 * P64.pulse_count)
        np.testing.assert_allclose(p_nb, p_np, rtol=1e-9,
                                   atol=1e-9 * P64.pulse_count)


def test_poly_grft_axis_validation():
    cube = make_cube()
    g = small_grid()
    ax = Axis("radial_accel", 0.0, 0.1, 3)
    with pytest.raises(ValueError, match="order"):
        poly_grft(cube, g, P64, 4)
    with pytest.raises(ValueError, match="no extra axes"):
        poly_grft(cube, g, P64, 1, accel_axis=ax)
    with pytest.raises(ValueError, match="accel_axis only"):
        poly_grft(cube, g, P64, 2)
    with pytest.raises(ValueError, match="jerk_axis"):
        poly_grft(cube, g, P64, 3, accel_axis=ax)


def test_poly1_focuses_radial_motion():
    tgt = CcvTarget(25000.0, 800.0, 800.0)
    p = P64
    cube = synth_compressed(p, [tgt], (24900.0, 25500.0))
    # bounds chosen so 800.0 m/s sits exactly on the velocity axis
    g = build_search_grid(p, (24985.0, 25015.0, 798.75, 801.25,
                              798.75, 801.25))
    m = poly_grft(cube, g, p, 1)
    idx, peak = m.peak()
    assert peak >= 0.93 * p.pulse_count
    assert m.cell_params(idx)["radial_velocity"] == pytest.approx(800.0)


def test_poly1_unfocused_on_ccv_motion():
    p = RadarParams(1.5e9, 10e-6, 20e6, 50e6, 32.0, 128)  # 4 s CPI
    tgt = CcvTarget(25000.0, 60.0, 800.0)
    cube = synth_compressed(p, [tgt], (24801.0, 25650.0))
    dv = p.wavelength / (2.0 * p.cpi)
    g = build_search_grid(p, (24940.0, 25060.0, 60 - 20 * dv, 60 + 20 * dv,
                              800 - 20 * dv, 800 + 20 * dv))
    m = poly_grft(cube, g, p, 1)
    assert m.peak()[1] < 0.3 * p.pulse_count


def test_mtd_stationary_and_walking():
    r0 = 24900.0 + 3.0 * 40
    stat = synth_compressed(P64, [CcvTarget(r0, 0.0, 0.0)],
                            (24900.0, 25200.0))
    m = mtd(stat, P64)
    idx, peak = m.peak()
    assert peak == pytest.approx(P64.pulse_count, rel=1e-6)
    assert m.cell_params(idx)["radial_velocity"] == pytest.approx(0.0)
    assert m.cell_params(idx)["range"] == pytest.approx(r0)

    walking = synth_compressed(P64, [CcvTarget(25000.0, 60.0, 800.0)],
                               (24900.0, 25200.0))
    m2 = mtd(walking, P64)
    assert m2.peak()[1] < 0.7 * P64.pulse_count


def test_mtd_blind_speed_aliases_to_zero():
    tgt = CcvTarget(25000.0, 20.0, 20.0)  # exactly one blind speed
    cube = synth_compressed(P64, [tgt], (24900.0, 25200.0))
    m = mtd(cube, P64)
    idx, _ = m.peak()
    assert abs(m.cell_params(idx)["radial_velocity"]) < 2 * m.axes[1].step


def test_trajectory_of_cell_reference_points():
    p = P500
    tgt = CcvTarget(25000.0, 60.0, 800.0)
    cube = synth_compressed(p, [tgt], (24900.0, 25500.0))
    tr = trajectory_of_cell(25000.0, 60.0, 800.0, cube)
    assert tr.shape == (500, 2)
    start, dr = cube.range_axis_start, cube.range_bin
    assert tr[0, 1] == int(np.floor((25000.0 - start) / dr + 0.5))
    r_end = range_at(25000.0, 60.0, 800.0, 499 / 200.0)
    assert tr[499, 1] == int(np.floor((r_end - start) / dr + 0.5))
    const = trajectory_of_cell(25003.0, 0.0, 0.0, cube)
    assert (const[:, 1] == const[0, 1]).all()
