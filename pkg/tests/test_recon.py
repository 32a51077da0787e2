import csv
import json

import numpy as np
import pytest
from scipy import ndimage

from holoangle.errors import ConfigurationError
from holoangle.fileio import read_png
from holoangle.holo import ComplexField, OpticsConfig, encode_hologram, synthesize
from holoangle.recon import (focus_scan, object_regions, reconstruct, sharpness, write_focus_scan,
                             write_reconstruction)
from holoangle.scenegen import Frame, pair_scene, render_view
from holoangle.viewgeom import camera_pose

ZERO = OpticsConfig(phase_mode="zero")


def _point_frame(shape, pixel, byte, rgb=(255, 255, 255)):
    img = np.zeros(shape + (3,), np.uint8)
    img[pixel] = rgb
    depth = np.zeros(shape, np.uint8)
    depth[pixel] = byte
    return Frame(rgb=img, depth=depth, pose=camera_pose(0.0))


def test_point_refocuses_at_its_pixel():
    frame = _point_frame((64, 64), (20, 45), 255)
    rec = reconstruct(synthesize(frame, ZERO), ZERO.z_near_m)
    for c in range(3):
        assert np.unravel_index(np.argmax(rec.amplitude[..., c]), (64, 64)) == (20, 45)
        assert rec.amplitude[20, 45, c] == pytest.approx(1.0, abs=1e-9)
    assert rec.source == "complex"


def test_lee_decoded_matches_complex():
    frame = render_view(pair_scene("cube"), camera_pose(0.0), (48, 32))
    fields = synthesize(frame, OpticsConfig())
    a = reconstruct(fields, 0.02)
    b = reconstruct(encode_hologram(fields, OpticsConfig()), 0.02)
    assert b.source == "lee-decoded"
    np.testing.assert_allclose(b.amplitude, a.amplitude, rtol=0, atol=1e-12)


def test_zero_hologram_reconstructs_to_zero():
    zero = [ComplexField(np.zeros((16, 16), complex), wl, 8e-6) for wl in ZERO.wavelengths_m]
    assert np.all(reconstruct(zero, 0.02).amplitude == 0)


@pytest.mark.parametrize("z", [0.001, 0.06, -0.02])
def test_focus_out_of_range(z):
    zero = [ComplexField(np.zeros((8, 8), complex), 638e-9, 8e-6)]
    with pytest.raises(ConfigurationError):
        reconstruct(zero, z)


def test_reconstruction_linear_in_amplitude():
    frame = render_view(pair_scene("sphere"), camera_pose(0.0), (40, 40))
    fields = synthesize(frame, OpticsConfig())
    base = reconstruct(fields, 0.015).amplitude
    for alpha in (0.5, 3.0):
        scaled = [ComplexField(alpha * f.values, f.wavelength_m, f.pitch_m) for f in fields]
        np.testing.assert_allclose(reconstruct(scaled, 0.015).amplitude, alpha * base, rtol=1e-12, atol=1e-15)


def test_focus_scan_single_distance_equals_direct():
    frame = render_view(pair_scene("cone"), camera_pose(0.0), (48, 48))
    fields = synthesize(frame, OpticsConfig())
    regions = object_regions(frame.labels)
    (point,) = focus_scan(fields, [0.02], regions)
    rec = reconstruct(fields, 0.02)
    assert point.peak_amplitude == rec.amplitude.max()
    for name, reg in regions.items():
        assert point.sharpness[name] == sharpness(rec.amplitude, reg)


def test_focus_scan_empty():
    with pytest.raises(ConfigurationError):
        focus_scan([ComplexField(np.zeros((4, 4), complex), 638e-9, 8e-6)], [])


def test_focus_scan_peak_at_source_distance():
    byte = 96
    frame = _point_frame((64, 64), (32, 32), byte)
    z0 = ZERO.distance_for_byte(byte)
    distances = np.linspace(ZERO.z_near_m, ZERO.z_far_m, 24)
    scan = focus_scan(synthesize(frame, ZERO), distances)
    best = distances[np.argmax([p.peak_amplitude for p in scan])]
    assert abs(best - z0) <= ZERO.layer_spacing()


def test_object_regions():
    labels = -np.ones((10, 12), int)
    labels[2:5, 3:7] = 0
    labels[6, 10] = 1
    assert object_regions(labels) == {"front": (2, 5, 3, 7), "back": (6, 7, 10, 11)}


# -- sharpness --------------------------------------------------------------

def test_sharpness_uniform_is_zero():
    assert sharpness(np.full((20, 20, 3), 0.7)) == 0.0


def test_sharpness_prefers_crisp_checkerboard():
    board = np.indices((32, 32)).sum(axis=0) // 4 % 2 * 1.0
    blurred = ndimage.gaussian_filter(board, 1.5)
    assert sharpness(board) > sharpness(blurred)


def test_sharpness_monotone_under_blur():
    img = render_view(pair_scene("torus"), camera_pose(0.0), (64, 64)).rgb / 255.0
    scores = [sharpness(img)]
    for _ in range(4):
        img = ndimage.uniform_filter(img, size=(3, 3, 1), mode="nearest")
        scores.append(sharpness(img))
    assert all(a > b for a, b in zip(scores, scores[1:]))


@pytest.mark.parametrize("region", [(3, 3, 0, 5), (0, 5, 0, 99), (-1, 2, 0, 2)])
def test_sharpness_bad_region(region):
    with pytest.raises(ConfigurationError):
        sharpness(np.zeros((10, 10)), region)


# -- output -----------------------------------------------------------------

def test_write_reconstruction(tmp_path):
    amp = np.zeros((4, 5, 3))
    amp[1, 2] = (2.0, 1.0, 0.5)
    from holoangle.recon import Reconstruction
    meta = write_reconstruction(tmp_path / "r.png", Reconstruction(amp, 0.02, "complex"))
    assert meta["normalization"] == 2.0
    assert json.loads((tmp_path / "r.json").read_text()) == meta
    img = read_png(tmp_path / "r.png")
    assert img[1, 2].tolist() == [255, 128, 64]
    assert img.sum() == 255 + 128 + 64


def test_write_focus_scan(tmp_path):
    frame = render_view(pair_scene("cone"), camera_pose(0.0), (32, 32))
    scan = focus_scan(synthesize(frame, OpticsConfig()), [0.012, 0.02], object_regions(frame.labels))
    write_focus_scan(tmp_path / "s.csv", scan)
    rows = list(csv.reader(open(tmp_path / "s.csv")))
    assert rows[0] == ["distance_m", "sharpness_front", "sharpness_back"]
    assert [float(r[0]) for r in rows[1:]] == [0.012, 0.02]
    assert float(rows[2][2]) == scan[1].sharpness["back"]
