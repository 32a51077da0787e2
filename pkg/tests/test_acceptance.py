"""End-to-end acceptance checks, one test per criterion.

Each test appends a PASS/FAIL line to the terminal summary before asserting.
"""

import csv
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from holoangle.holo import ComplexField, OpticsConfig, lee_decode, lee_encode, propagate, synthesize
from holoangle.metrics import TimeModel, acc, mse, training_time
from holoangle.recon import focus_scan, object_regions, reconstruct, sharpness
from holoangle.scenegen import Frame, generate_dataset, pair_scene, render_view
from holoangle.sweep import CSV_COLUMNS, METRIC_COLUMNS, SweepConfig, detect_knee, run_sweep
from holoangle.viewgeom import camera_pose, central_angle, schedule

from oracles import band_limited_field, brute_cosine, brute_mse, rel_l2


def _record(label, ok, detail, elapsed, limit):
    ok = bool(ok) and elapsed < limit
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail} ({elapsed:.2f}s / limit {limit:g}s)")
    print(ACCEPTANCE_LINES[-1])
    return ok


def test_acc01_schedule():
    t0 = time.perf_counter()
    ok = True
    for n in range(2, 10):
        s = schedule(n)
        step = 360.0 / 2**n
        ok &= central_angle(n).angle_deg == step
        ok &= s.train_angles_deg == tuple(k * step for k in range(2**n))
        ok &= s.test_angles_deg == tuple(k * step + step / 2 for k in range(2**n))
    assert _record("AC1 schedule n=2..9 exact", ok, "angles and view sets exact", time.perf_counter() - t0, 1.0)


def test_acc02_lee_codec():
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    worst, nonneg, quadrant = 0.0, True, True
    for _ in range(1000):
        h = rng.standard_normal((64, 64)) + 1j * rng.standard_normal((64, 64))
        planes = lee_encode(ComplexField(h, 638e-9, 8e-6))
        p = planes.planes
        nonneg &= bool(np.all(p >= 0))
        quadrant &= not np.any((p[0] > 0) & (p[2] > 0)) and not np.any((p[1] > 0) & (p[3] > 0))
        worst = max(worst, float(np.max(np.abs(lee_decode(planes).values - h))))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-12 and nonneg and quadrant
    assert _record("AC2 Lee codec", ok, f"max err {worst:.3g}, planes>=0 {nonneg}, quadrant rule {quadrant}",
                   elapsed, 5.0)


def test_acc03_propagation():
    rng = np.random.default_rng(3)
    wl, pitch = 520e-9, 8e-6
    t0 = time.perf_counter()
    rt = en = sg = 0.0
    for _ in range(100):
        f = ComplexField(band_limited_field(rng, (256, 256)), wl, pitch)
        z = float(rng.uniform(0.011, 0.0287))
        fwd = propagate(f, z)
        rt = max(rt, rel_l2(propagate(fwd, -z).values, f.values))
        en = max(en, abs(fwd.energy() / f.energy() - 1))
        z1 = float(rng.uniform(0, z))
        sg = max(sg, rel_l2(propagate(propagate(f, z1), z - z1).values, fwd.values))
    elapsed = time.perf_counter() - t0
    ok = max(rt, en, sg) < 1e-9
    assert _record("AC3 propagation", ok, f"round trip {rt:.2g}, energy {en:.2g}, semigroup {sg:.2g}",
                   elapsed, 60.0)


def test_acc04_point_source_focus():
    optics = OpticsConfig(phase_mode="zero")
    distances = np.linspace(optics.z_near_m, optics.z_far_m, 64)
    t0 = time.perf_counter()
    worst = 0.0
    for byte, pixel in ((40, (80, 170)), (200, (128, 128))):
        rgb = np.zeros((256, 256, 3), np.uint8)
        rgb[pixel] = 255
        depth = np.zeros((256, 256), np.uint8)
        depth[pixel] = byte
        scan = focus_scan(synthesize(Frame(rgb, depth, camera_pose(0.0)), optics), distances, optics=optics)
        best = distances[int(np.argmax([p.peak_amplitude for p in scan]))]
        worst = max(worst, abs(best - optics.distance_for_byte(byte)))
    elapsed = time.perf_counter() - t0
    ok = worst <= optics.layer_spacing()
    assert _record("AC4 point-source focus", ok,
                   f"worst offset {worst * 1e3:.3f} mm vs spacing {optics.layer_spacing() * 1e3:.3f} mm",
                   elapsed, 120.0)


def test_acc05_accommodation_cone():
    optics = OpticsConfig()
    t0 = time.perf_counter()
    frame = render_view(pair_scene("cone"), camera_pose(0.0), (256, 256))
    fields = synthesize(frame, optics)
    regions = object_regions(frame.labels)
    focus = {name: optics.distance_for_byte(int(np.median(frame.depth[frame.labels == i])))
             for i, name in enumerate(("front", "back"))}
    ratios = {}
    for name, z in focus.items():
        amp = reconstruct(fields, z, optics).amplitude
        ratios[name] = sharpness(amp, regions["front"]) / sharpness(amp, regions["back"])
    elapsed = time.perf_counter() - t0
    ok = ratios["front"] > 1.2 and ratios["back"] < 1 / 1.2
    assert _record("AC5 cone accommodation", ok,
                   f"front/back sharpness {ratios['front']:.3f} at front focus, {ratios['back']:.3f} at back focus",
                   elapsed, 300.0)


def test_acc06_metrics():
    rng = np.random.default_rng(6)
    t0 = time.perf_counter()
    img = rng.integers(0, 256, (32, 32)).astype(float)
    scale_err = max(abs(acc(img, k * img) - 1) for k in (0.5, 1.0, 3.0))
    oracle_err = 0.0
    for _ in range(20):
        a = rng.integers(0, 256, (8, 8))
        b = rng.integers(0, 256, (8, 8))
        oracle_err = max(oracle_err, abs(acc(a, b) - brute_cosine(a, b)), abs(mse(a, b) - brute_mse(a, b)))
    elapsed = time.perf_counter() - t0
    ok = scale_err < 1e-12 and oracle_err < 1e-12
    assert _record("AC6 metric oracles", ok, f"acc(I,kI) err {scale_err:.2g}, oracle err {oracle_err:.2g}",
                   elapsed, 1.0)


@pytest.mark.slow
def test_acc07_torus_sweep(tmp_path):
    t0 = time.perf_counter()
    generate_dataset(pair_scene("torus"), 128, tmp_path, resolution=(256, 256))
    recs = run_sweep(SweepConfig(data_root=tmp_path, shape="torus", n_min=2, n_max=6, baseline="blend"))
    elapsed = time.perf_counter() - t0
    series = [r.depth_mse for r in recs]
    gain = series[0] / series[3]
    monotone = all(b <= a * 1.05 for a, b in zip(series, series[1:]))
    ok = gain >= 1.5 and monotone
    assert _record("AC7 torus sweep", ok,
                   f"MSE(2)/MSE(5) = {gain:.2f}, non-increasing {monotone}, MSE " +
                   " ".join(f"{m:.4g}" for m in series), elapsed, 300.0)


def test_acc08_knee():
    t0 = time.perf_counter()
    mses = [1.0]
    for r in (2.0, 2.0, 1.6, 1.05, 1.02, 1.01, 1.0):
        mses.append(mses[-1] / r)
    knee = detect_knee([(central_angle(n).angle_deg, m) for n, m in zip(range(2, 10), mses)], 1.5)
    elapsed = time.perf_counter() - t0
    assert _record("AC8 knee", knee.knee_angle_deg == 11.25, f"knee at {knee.knee_angle_deg:g} deg",
                   elapsed, 1.0)


def test_acc09_determinism(small_torus_data, tmp_path):
    t0 = time.perf_counter()
    cols = []
    for run in ("a", "b"):
        cfg = SweepConfig(data_root=small_torus_data, n_min=2, n_max=4,
                          optics=OpticsConfig(phase_mode="zero", seed=42))
        run_sweep(cfg, tmp_path / run)
        with open(tmp_path / run / "sweep.csv") as fh:
            rows = list(csv.reader(fh))
        idx = [CSV_COLUMNS.index(c) for c in METRIC_COLUMNS]
        cols.append([[row[i] for i in idx] for row in rows])
    elapsed = time.perf_counter() - t0
    ok = cols[0] == cols[1]
    assert _record("AC9 sweep determinism", ok, f"{len(cols[0]) - 1} rows, metric columns identical {ok}",
                   elapsed, float("inf"))


def test_acc10_training_time():
    rng = np.random.default_rng(10)
    t0 = time.perf_counter()
    bad = 0
    for _ in range(1000):
        t = float(rng.uniform(0, 10))
        b = int(rng.integers(0, 10_000))
        e = int(rng.integers(0, 500))
        bad += training_time(TimeModel(t, b, e)) != t * b * e
    elapsed = time.perf_counter() - t0
    assert _record("AC10 training time", bad == 0, f"{1000 - bad}/1000 exact", elapsed, float("inf"))
