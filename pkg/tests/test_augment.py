import json

import numpy as np
import pytest

from voxmetrics import augment as aug
from voxmetrics.augment import (
    AugmentSpec,
    TRANSFORM_ORDER,
    add_gaussian_noise,
    adjust_brightness,
    adjust_contrast,
    apply_pipeline,
    gamma_transform,
    gaussian_blur,
    mirror,
    rotate,
    scale_spatial,
    simulate_low_res,
)
from voxmetrics.errors import NotNormalized
from voxmetrics.volume import LabelVolume, Volume
from oracles import gaussian_kernel_3d_center


@pytest.fixture
def pair(rng):
    vol = Volume(rng.normal(size=(9, 9, 9)))
    lab = LabelVolume(rng.integers(0, 7, size=(9, 9, 9)))
    return vol, lab


def test_rotate_zero_identity(pair):
    v, l = rotate(*pair, (0, 0, 0))
    assert np.array_equal(v.data, pair[0].data) and np.array_equal(l.data, pair[1].data)


def test_rotate_quarter_turn_is_index_permutation(pair):
    vol, lab = pair
    v, l = rotate(vol, lab, (0, 0, 90))
    # output (i, j) samples input R^T (p - c) + c = (j, n-1-i)
    n = vol.dims[0]
    i, j, k = np.indices(vol.dims)
    expect_l = lab.data[j, n - 1 - i, k]
    expect_v = vol.data[j, n - 1 - i, k]
    assert np.array_equal(l.data, expect_l)
    assert np.array_equal(v.data, expect_v)
    assert np.array_equal(expect_v, np.rot90(vol.data, k=1, axes=(0, 1)))


def test_rotate_four_quarter_turns(pair):
    v, l = pair
    for _ in range(4):
        v, l = rotate(v, l, (90, 0, 0))
    assert np.array_equal(v.data, pair[0].data) and np.array_equal(l.data, pair[1].data)


@pytest.mark.parametrize("angles", [(10, 0, 0), (0, -25, 13), (30, 30, 30), (45, 0, 0)])
def test_rotate_label_closure(pair, angles):
    v, l = rotate(*pair, angles)
    assert l.label_set() <= pair[1].label_set() | {0}
    assert v.dims == pair[0].dims and l.dims == pair[1].dims


def test_rotate_anisotropic_quarter_turn_keeps_physical_shape():
    # 0.5 mm in x, 1 mm in y: a 90 degree turn about z maps physical extents
    data = np.zeros((21, 11, 3), np.uint8)
    data[6:15, 4:7, 1] = 1  # 9 x 0.5 = 4.5 mm along x, 3 mm along y
    lab = LabelVolume(data, (0.5, 1.0, 1.0))
    vol = Volume(data.astype(float), lab.spacing)
    _, l = rotate(vol, lab, (0, 0, 90))
    xs, ys, _ = np.nonzero(l.data)
    assert (xs.max() - xs.min() + 1) * 0.5 == pytest.approx(3.0, abs=1.0)
    assert (ys.max() - ys.min() + 1) * 1.0 == pytest.approx(4.5, abs=1.0)


def test_spatial_geometry_matches_one_hot(pair):
    vol, lab = pair
    for angles in [(17, -8, 33), (0, 90, 0)]:
        _, l = rotate(vol, lab, angles)
        for c in range(1, 7):
            ind = LabelVolume((lab.data == c).astype(np.uint8))
            _, li = rotate(Volume(ind.data.astype(float)), ind, angles)
            assert np.array_equal(li.data == 1, l.data == c)
    _, l = scale_spatial(vol, lab, 1.3)
    for c in range(1, 7):
        ind = LabelVolume((lab.data == c).astype(np.uint8))
        _, li = scale_spatial(Volume(ind.data.astype(float)), ind, 1.3)
        assert np.array_equal(li.data == 1, l.data == c)


def test_scale_identity(pair):
    v, l = scale_spatial(*pair, 1.0)
    assert v is pair[0] and l is pair[1]


def _ball(n, r):
    c = (n - 1) / 2
    i, j, k = np.indices((n, n, n))
    return (((i - c) ** 2 + (j - c) ** 2 + (k - c) ** 2) <= r * r).astype(np.uint8)


@pytest.mark.parametrize("radius", [8, 10])
def test_scale_ball_volume_grows_eightfold(radius):
    data = _ball(48, radius)
    lab = LabelVolume(data)
    _, l = scale_spatial(Volume(data.astype(float)), lab, 2.0)
    ratio = np.count_nonzero(l.data) / np.count_nonzero(data)
    assert abs(ratio / 8 - 1) < 0.15


def test_scale_label_closure(pair):
    for f in (0.7, 1.4):
        _, l = scale_spatial(*pair, f)
        assert l.label_set() <= pair[1].label_set() | {0}


def test_noise_sigma_zero(pair):
    assert add_gaussian_noise(pair[0], 0.0, 1) is pair[0]


def test_noise_statistics():
    vol = Volume(np.zeros((100, 100, 100)))
    out = add_gaussian_noise(vol, 0.1, seed=2024).data
    n = out.size
    assert abs(out.mean()) < 4 * 0.1 / np.sqrt(n)
    assert abs(out.std() / 0.1 - 1) < 0.01


def test_noise_deterministic(pair):
    a = add_gaussian_noise(pair[0], 0.3, seed=5).data
    b = add_gaussian_noise(pair[0], 0.3, seed=5).data
    assert np.array_equal(a, b)


def test_blur_identity_and_constant(pair):
    assert gaussian_blur(pair[0], 0.0) is pair[0]
    const = Volume(np.full((6, 7, 8), 2.5))
    for s in (0.5, 1.0, 3.0):
        assert np.allclose(gaussian_blur(const, s).data, 2.5, rtol=0, atol=1e-12)


def test_blur_impulse():
    data = np.zeros((15, 15, 15))
    data[7, 7, 7] = 1.0
    out = gaussian_blur(Volume(data), 1.0).data
    assert out[7, 7, 7] == pytest.approx(gaussian_kernel_3d_center(1.0), rel=1e-12)
    assert abs(out.sum() - 1.0) < 1e-6


def test_blur_reflects_at_edges():
    data = np.zeros((5, 1, 1))
    data[0] = 1.0
    out = gaussian_blur(Volume(data), 1.0).data
    assert abs(out.sum() - 1.0) < 1e-12  # reflection keeps the mass inside


def test_brightness(pair):
    v = pair[0]
    assert np.array_equal(adjust_brightness(v, 1.0).data, v.data)
    assert np.array_equal(adjust_brightness(v, 2.0).data, 2 * v.data)
    assert adjust_brightness(v, 1.5).data.mean() == pytest.approx(1.5 * v.data.mean(), rel=1e-12)


def test_contrast(pair):
    v = pair[0]
    assert adjust_contrast(v, 1.0) is v
    flat = adjust_contrast(v, 0.0).data
    assert np.allclose(flat, v.data.mean(), atol=1e-12)
    strong = adjust_contrast(v, 3.0).data
    assert strong.min() >= v.data.min() and strong.max() <= v.data.max()


def test_low_res(pair):
    assert simulate_low_res(pair[0], 1.0) is pair[0]
    const = Volume(np.full((8, 9, 10), -4.0))
    assert np.array_equal(simulate_low_res(const, 1.7).data, const.data)
    checker = Volume(np.where(np.indices((8, 8, 8)).sum(0) % 2 == 0, 1.0, -1.0))
    out = simulate_low_res(checker, 2.0).data
    assert out.shape == (8, 8, 8)
    assert np.abs(out).max() < 1


def test_gamma():
    v = Volume(np.array([0.0, 0.25, 0.5, 1.0]).reshape(4, 1, 1))
    assert gamma_transform(v, 1.0) is v
    assert gamma_transform(v, 2.0).data.ravel().tolist() == [0.0, 0.0625, 0.25, 1.0]
    for g in (0.3, 0.7, 1.5, 4.0):
        out = gamma_transform(v, g).data.ravel()
        assert out[0] == 0.0 and out[-1] == 1.0
    with pytest.raises(NotNormalized):
        gamma_transform(Volume(np.array([1.5]).reshape(1, 1, 1)), 2.0)


def test_mirror():
    data = np.arange(8, dtype=float).reshape(2, 2, 2)
    v, l = Volume(data), LabelVolume(np.arange(8).reshape(2, 2, 2) % 7)
    assert mirror(v, l, [])[0] is v
    mv, ml = mirror(v, l, ["x", "y", "z"])
    expected = np.empty_like(data)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                expected[i, j, k] = data[1 - i, 1 - j, 1 - k]
    assert np.array_equal(mv.data, expected)
    for axes in (["x"], ["y", "z"], ["x", "z"]):
        twice = mirror(*mirror(v, l, axes), axes)
        assert np.array_equal(twice[0].data, data) and np.array_equal(twice[1].data, l.data)


def test_pipeline_all_off_identity(pair):
    spec = AugmentSpec(seed=3).all_off()
    v, l = apply_pipeline(spec, *pair)
    assert np.array_equal(v.data, pair[0].data) and np.array_equal(l.data, pair[1].data)


def test_pipeline_disabled_identity(pair):
    spec = AugmentSpec.from_dict({"transforms": {n: {"enabled": False} for n in TRANSFORM_ORDER}})
    v, l = apply_pipeline(spec, *pair)
    assert v is pair[0] and l is pair[1]


def test_pipeline_deterministic(pair):
    always = AugmentSpec.from_dict({"seed": 11, "transforms": {n: {"probability": 1.0} for n in TRANSFORM_ORDER}})
    a = apply_pipeline(always, *pair, case_index=4)
    b = apply_pipeline(always, *pair, case_index=4)
    assert np.array_equal(a[0].data, b[0].data) and np.array_equal(a[1].data, b[1].data)
    c = apply_pipeline(always, *pair, case_index=5)
    assert not np.array_equal(a[0].data, c[0].data)


@pytest.mark.parametrize("seed", range(8))
def test_pipeline_closure(pair, seed):
    spec = AugmentSpec.from_dict({"seed": seed, "transforms": {n: {"probability": 0.7} for n in TRANSFORM_ORDER}})
    v, l = apply_pipeline(spec, *pair)
    assert l.dims == pair[1].dims
    assert l.label_set() <= pair[1].label_set() | {0}
    assert np.all(np.isfinite(v.data))


def test_intensity_transforms_leave_labels_alone(pair):
    intensity_only = {"gaussian_noise", "gaussian_blur", "brightness", "contrast", "low_resolution", "gamma"}
    spec = AugmentSpec.from_dict(
        {"seed": 1, "transforms": {n: {"probability": 1.0 if n in intensity_only else 0.0} for n in TRANSFORM_ORDER}}
    )
    v, l = apply_pipeline(spec, *pair)
    assert l is pair[1]
    assert not np.array_equal(v.data, pair[0].data)


def test_spec_defaults_and_round_trip():
    spec = AugmentSpec()
    t = spec.transforms
    assert (t["rotate"].probability, t["rotate"].low, t["rotate"].high) == (0.2, -30.0, 30.0)
    assert (t["scale"].low, t["scale"].high) == (0.7, 1.4)
    assert (t["gaussian_noise"].probability, t["gaussian_noise"].high) == (0.1, 0.1)
    assert (t["gaussian_blur"].low, t["gaussian_blur"].high) == (0.5, 1.0)
    assert t["brightness"].probability == t["contrast"].probability == 0.15
    assert (t["low_resolution"].probability, t["low_resolution"].high) == (0.25, 2.0)
    assert (t["gamma"].probability, t["gamma"].low, t["gamma"].high) == (0.3, 0.7, 1.5)
    assert t["mirror"].probability == 0.5
    again = AugmentSpec.from_json(spec.to_json())
    assert again.to_dict() == spec.to_dict()
    assert list(json.loads(spec.to_json())["transforms"]) == list(TRANSFORM_ORDER)


def test_spec_validation():
    with pytest.raises(ValueError):
        AugmentSpec.from_dict({"transforms": {"rotate": {"probability": 1.5}}})
    with pytest.raises(ValueError):
        AugmentSpec.from_dict({"transforms": {"scale": {"range": [2, 1]}}})
    with pytest.raises(ValueError):
        AugmentSpec.from_dict({"transforms": {"elastic": {}}})


def test_transform_substreams_independent():
    a = aug.transform_rng(1, 0, 0).random(4)
    b = aug.transform_rng(1, 0, 1).random(4)
    c = aug.transform_rng(1, 1, 0).random(4)
    assert not np.array_equal(a, b) and not np.array_equal(a, c)
    assert np.array_equal(a, aug.transform_rng(1, 0, 0).random(4))
