import numpy as np
import pytest

from ccvradar import (Axis, CcvTarget, IntegrationMap, RadarParams,
                      arem_grft, build_search_grid, calibrate_threshold,
                      detect, estimate, monte_carlo_pd, range_at, snr_at_pd,
                      synth_compressed)
from ccvradar.detect import Detection, MethodSearch, PdScenario

P = RadarParams(1.5e9, 10e-6, 20e6, 50e6, 200.0, 64)


def noise_map(n_cells: int, seed: int, shape=None) -> IntegrationMap:
    rng = np.random.default_rng(seed)
    shape = shape or (n_cells,)
    vals = (rng.standard_normal(shape)
            + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    axes = tuple(Axis(f"ax{i}", 0.0, 1.0, n) for i, n in enumerate(shape))
    return IntegrationMap(vals, axes, "mtd")


def test_empirical_median_at_half_pfa():
    m = noise_map(10 ** 5, 0)
    calib = calibrate_threshold(m, 0.4999999, mode="empirical")
    med = np.median(np.abs(m.values))
    assert calib.eta == pytest.approx(med, rel=1e-6)


def test_empirical_matches_rayleigh_quantile():
    # unit-variance complex Gaussian magnitudes: P(|z|^2 > x) = exp(-x),
    # so the pfa=1e-2 threshold satisfies eta^2 = ln(100) = 4.605
    m = noise_map(10 ** 6, 1)
    calib = calibrate_threshold(m, 1e-2, mode="empirical")
    assert calib.eta ** 2 == pytest.approx(np.log(100.0), abs=0.1)
    assert calib.n_cells == 10 ** 6


def test_empirical_requires_enough_cells():
    m = noise_map(1000, 2)
    with pytest.raises(ValueError, match="needs >="):
        calibrate_threshold(m, 1e-4, mode="empirical")
    with pytest.raises(ValueError, match="pfa"):
        calibrate_threshold(m, 0.7, mode="empirical")


def test_threshold_monotone_in_pfa():
    m = noise_map(10 ** 5, 3)
    etas = [calibrate_threshold(m, pfa, mode="empirical").eta
            for pfa in (0.2, 0.05, 1e-2, 1e-3)]
    assert all(a < b for a, b in zip(etas, etas[1:]))


def test_ca_cfar_hits_requested_pfa_and_flags_edges():
    m = noise_map(None, 4, shape=(300, 160))
    pfa = 1e-2
    calib = calibrate_threshold(m, pfa, mode="cell_averaging")
    assert calib.mode == "cell_averaging"
    eta = calib.eta
    assert eta.shape == m.values.shape
    # edge rows along the range axis use shrunken reference windows
    assert calib.shrunk[:18, :].all() and calib.shrunk[-18:, :].all()
    assert not calib.shrunk[18:-18, :].any()
    crossings = (np.abs(m.values) > eta).sum()
    n = m.values.size
    sigma = np.sqrt(n * pfa * (1 - pfa))
    assert abs(crossings - n * pfa) < 4 * sigma


def test_ca_cfar_ignores_invalid_reference_cells():
    rng = np.random.default_rng(5)
    vals = (rng.standard_normal((200, 4))
            + 1j * rng.standard_normal((200, 4))) / np.sqrt(2.0)
    vals[50:70, :] = complex(np.nan, np.nan)
    axes = (Axis("range", 0.0, 1.0, 200), Axis("radial_velocity", 0.0, 1.0, 4))
    m = IntegrationMap(vals, axes, "mtd")
    calib = calibrate_threshold(m, 1e-2, mode="cell_averaging")
    assert np.isnan(calib.eta[55, 0])       # invalid cells get no threshold
    assert np.isfinite(calib.eta[80, 0])    # neighbours still calibrated


def test_detect_monotone_in_threshold():
    m = noise_map(None, 6, shape=(60, 60))
    counts = [len(detect(m, eta)) for eta in (1.5, 2.0, 2.5, 3.0)]
    assert all(a >= b for a, b in zip(counts, counts[1:]))


def test_detect_false_alarm_rate_binomial():
    # 100 noise-only maps of 1e4 valid cells at pfa = 1e-4: about one false
    # detection per map
    pfa = 1e-4
    pool = [noise_map(None, 100 + k, shape=(100, 100)) for k in range(150)]
    calib = calibrate_threshold(pool, pfa, mode="empirical")
    total = 0
    for k in range(100):
        m = noise_map(None, 500 + k, shape=(100, 100))
        total += len(detect(m, calib))
    expect = 100 * 100 * 100 * pfa  # = 100
    # CI combines binomial counting noise with the threshold-estimation
    # noise of a 1.5e6-cell quantile (~150 tail samples)
    sigma = np.sqrt(expect + (expect / np.sqrt(150.0)) ** 2)
    assert abs(total - expect) < 4 * sigma


def test_detect_single_target_single_component():
    tgt = CcvTarget(25000.0, 60.0, 800.0)
    cube = synth_compressed(P, [tgt], (24900.0, 25200.0))
    dr = P.range_resolution
    dv = P.wavelength / (2 * P.cpi)
    g = build_search_grid(P, (25000 - 4 * dr, 25000 + 4 * dr,
                              60 - 6 * dv, 60 + 6 * dv,
                              800 - 6 * dv, 800 + 6 * dv))
    m = arem_grft(cube, g, P)
    dets = detect(m, 0.5 * P.pulse_count)
    assert len(dets) == 1
    d = dets[0]
    assert d.params == pytest.approx({"range": 25000.0,
                                      "radial_velocity": 60.0,
                                      "speed": 800.0})
    assert d.amplitude > d.threshold_at_cell
    assert d.r0 == 25000.0 and d.rdot0 == 60.0 and d.speed == 800.0


def test_detect_never_fires_on_pruned_cells():
    g = build_search_grid(P, (24990.0, 25010.0, -30.0, 30.0, 0.0, 30.0),
                          spacings=(7.5, 10.0, 10.0))
    cube = synth_compressed(P, [], (24900.0, 25200.0), seed=8)
    m = arem_grft(cube, g, P)
    dets = detect(m, 1e-6)  # absurdly low threshold: everything valid fires
    pruned = {(i, j, q) for i in range(g.shape[0])
              for j, rd in enumerate(g.radial_velocities.values())
              for q, v in enumerate(g.speeds.values()) if v < abs(rd)}
    assert pruned
    assert all(d.indices not in pruned for d in dets)


def test_estimate_track_and_sensitivity():
    p500 = RadarParams(1.5e9, 10e-6, 20e6, 50e6, 200.0, 500)
    det = Detection((0, 0, 0), {"range": 25000.0, "radial_velocity": 60.0,
                                "speed": 800.0}, 100.0, 10.0)
    r_hat, track = estimate(det, p500)
    assert r_hat(2.5) == pytest.approx(25228.95, abs=0.01)
    assert track.shape == (500,)
    assert track[0] == 25000.0

    # one velocity cell off: end-of-CPI track error ~ drdot * dr/drdot0
    drdot = p500.wavelength / (2 * p500.cpi)  # 0.04 m/s
    det_off = Detection((0, 0, 0), {"range": 25000.0,
                                    "radial_velocity": 60.0 + drdot,
                                    "speed": 800.0}, 100.0, 10.0)
    r_off, _ = estimate(det_off, p500)
    err = abs(r_off(2.5) - r_hat(2.5))
    assert err == pytest.approx(0.1, abs=0.03)

    affine = Detection((0,), {"range": 5000.0, "radial_velocity": 50.0,
                              "speed": 50.0}, 1.0, 0.1)
    r_aff, _ = estimate(affine, p500)
    assert r_aff(10.0) == pytest.approx(5500.0, rel=1e-12)

    with pytest.raises(ValueError, match="triple"):
        estimate(Detection((0, 0), {"range": 100.0,
                                    "radial_velocity": 1.0}, 1.0, 0.1), p500)


def tiny_scenario():
    # a 0.16 s CPI has no speed resolution at all, so the speed axis is a
    # single cell; range and radial velocity carry the sensitivity
    p = RadarParams(1.5e9, 10e-6, 20e6, 50e6, 200.0, 32)
    tgt = CcvTarget(25000.0, 30.0, 40.0)
    dr, dv = p.range_resolution, p.wavelength / (2 * p.cpi)
    grid = build_search_grid(p, (25000 - 2 * dr, 25000 + 2 * dr,
                                 30 - 2 * dv, 30 + 2 * dv,
                                 40.0, 40.0))
    searches = (MethodSearch("arem", grid=grid), MethodSearch("mtd"))
    return PdScenario(p, tgt, (24900.0, 25200.0), searches)


def test_monte_carlo_pd_reproducible_and_saturating():
    sc = tiny_scenario()
    kw = dict(snr_start_db=-40.0, snr_stop_db=30.0, snr_step_db=70.0,
              trials=15, pfa=1e-2, master_seed=99)
    a = monte_carlo_pd(sc, **kw)
    b = monte_carlo_pd(sc, **kw)
    for name in ("arem", "mtd"):
        np.testing.assert_array_equal(a[name].pd, b[name].pd)
        np.testing.assert_array_equal(a[name].snr_db, b[name].snr_db)
        assert a[name].pd[-1] == 1.0          # +30 dB saturates
        # -40 dB sits at the false-alarm floor; with only ~25 correlated
        # cells and pfa=1e-2 the truth neighbourhood fires a few times
        assert a[name].pd[0] <= 0.4
        assert a[name].trials == 15 and a[name].pfa == 1e-2


def test_monte_carlo_pd_rejects_zero_trials():
    with pytest.raises(ValueError, match="trials"):
        monte_carlo_pd(tiny_scenario(), -10.0, 10.0, 10.0, trials=0,
                       pfa=1e-2, master_seed=1)


def test_snr_at_pd_interpolation():
    c = type("C", (), {})()
    from ccvradar.detect import PdCurve
    curve = PdCurve("arem", np.array([-20.0, -19.0, -18.0, -17.0]),
                    np.array([0.1, 0.6, 0.9, 1.0]), 100, 1e-4)
    x = snr_at_pd(curve, 0.8)
    assert x == pytest.approx(-19.0 + (0.8 - 0.6) / 0.3, abs=1e-9)
    none_curve = PdCurve("arem", np.array([-20.0, -19.0]),
                         np.array([0.0, 0.5]), 100, 1e-4)
    assert snr_at_pd(none_curve, 0.8) is None
