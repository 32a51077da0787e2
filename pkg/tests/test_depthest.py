import json

import numpy as np
import pytest

from holoangle.depthest import estimate, evaluate, fit, write_estimate
from holoangle.errors import ConfigurationError, DataValidationError
from holoangle.fileio import read_pgm
from holoangle.scenegen import SHAPES, Frame, pair_scene, render_view
from holoangle.viewgeom import camera_pose, schedule


def _frames(scene, angles, res=(32, 32)):
    return [render_view(scene, camera_pose(a), res) for a in angles]


def _flat(angle, value, shape=(4, 4)):
    return Frame(rgb=np.zeros(shape + (3,), np.uint8), depth=np.full(shape, value, np.uint8),
                 pose=camera_pose(angle))


def test_fit_validates_angles():
    fit([_flat(a, 0) for a in (0, 90, 180, 270)], 2)
    with pytest.raises(DataValidationError):
        fit([_flat(a, 0) for a in (0, 90, 180)], 2)
    with pytest.raises(DataValidationError):
        fit([_flat(a, 0) for a in (0, 90, 180, 271)], 2)
    fit([_flat(a, 0) for a in schedule(3).train_angles_deg], 3)
    with pytest.raises(ConfigurationError):
        fit([_flat(a, 0) for a in (0, 90, 180, 270)], 2, baseline="learned")


def test_fit_rejects_mixed_sizes():
    frames = [_flat(a, 0) for a in (0, 90, 180)] + [_flat(270, 0, (5, 5))]
    with pytest.raises(DataValidationError):
        fit(frames, 2)


@pytest.mark.parametrize("baseline", ["nearest", "blend"])
def test_training_angle_returns_exact_copy(baseline):
    frames = _frames(pair_scene("torus"), schedule(2).train_angles_deg)
    state = fit(frames, 2, baseline)
    out = estimate(state, None, 90.0)
    assert np.array_equal(out, frames[1].depth)
    out[0, 0] ^= 1
    assert np.array_equal(estimate(state, None, 90.0), frames[1].depth)


def test_nearest_tie_goes_to_smaller_angle():
    state = fit([_flat(a, v) for a, v in zip((0, 90, 180, 270), (10, 20, 30, 40))], 2, "nearest")
    assert estimate(state, None, 45.0)[0, 0] == 10
    assert estimate(state, None, 100.0)[0, 0] == 20
    # wrap-around midpoint between 270 and 360 = 0
    assert estimate(state, None, 315.0)[0, 0] == 10


def test_blend_weights():
    state = fit([_flat(a, v) for a, v in zip((0, 90, 180, 270), (10, 20, 30, 40))], 2, "blend")
    assert estimate(state, None, 45.0)[0, 0] == 15
    assert estimate(state, None, 22.5)[0, 0] == 13  # 12.5 rounds up
    assert estimate(state, None, 315.0)[0, 0] == 25


def test_blend_of_identical_maps_is_identity(rng):
    d = rng.integers(0, 256, (6, 6)).astype(np.uint8)
    frames = [Frame(np.zeros((6, 6, 3), np.uint8), d, camera_pose(a)) for a in (0, 90, 180, 270)]
    state = fit(frames, 2)
    for q in (12.0, 45.0, 301.7):
        assert np.array_equal(estimate(state, None, q), d)


def test_blend_within_neighbour_envelope(rng):
    maps = [rng.integers(0, 256, (8, 8)).astype(np.uint8) for _ in range(4)]
    frames = [Frame(np.zeros((8, 8, 3), np.uint8), m, camera_pose(a)) for m, a in zip(maps, (0, 90, 180, 270))]
    state = fit(frames, 2)
    for q in rng.uniform(0, 360, 20):
        lo = int(q // 90) % 4
        hi = (lo + 1) % 4
        est = estimate(state, None, q)
        assert np.all(est >= np.minimum(maps[lo], maps[hi]))
        assert np.all(est <= np.maximum(maps[lo], maps[hi]))


def test_evaluate_identity_and_zero():
    truth = [_flat(a, 100) for a in (0, 90, 180, 270)]
    state = fit(truth, 2)
    errs = evaluate(state, [_flat(a, 100) for a in schedule(2).test_angles_deg])
    assert all(e.mse == 0 and e.acc == 1 for e in errs)
    zero = fit([_flat(a, 0) for a in (0, 90, 180, 270)], 2)
    errs = evaluate(zero, [_flat(45.0, 100)])
    assert errs[0].acc == 0.0
    assert errs[0].mse_bytes == pytest.approx(100.0**2)


def _mean_mse(scene, n, baseline="blend", res=(48, 48)):
    s = schedule(n)
    state = fit(_frames(scene, s.train_angles_deg, res), n, baseline)
    return float(np.mean([e.mse for e in evaluate(state, _frames(scene, s.test_angles_deg, res))]))


def test_denser_views_reduce_error_torus():
    assert _mean_mse(pair_scene("torus"), 5) < _mean_mse(pair_scene("torus"), 2)


@pytest.mark.slow
@pytest.mark.parametrize("shape", SHAPES)
def test_error_roughly_non_increasing(shape):
    series = [_mean_mse(pair_scene(shape), n, res=(32, 32)) for n in range(2, 6)]
    assert all(b <= a * 1.05 for a, b in zip(series, series[1:])), series


def test_write_estimate(tmp_path):
    state = fit([_flat(a, 9) for a in (0, 90, 180, 270)], 2, "nearest")
    est = estimate(state, None, 45.0)
    write_estimate(tmp_path, est, state)
    assert np.array_equal(read_pgm(tmp_path / "depth_est.pgm"), est)
    assert json.loads((tmp_path / "est_meta.json").read_text()) == {"baseline": "nearest", "n": 2}
