import numpy as np
import pytest

from portraitguide.errors import ValidationError
from portraitguide.images import gray_from_png
from portraitguide.shadow import blend_shadow, shadow_png


def box(x0, y0, x1, y1, size=16):
    arr = np.zeros((size, size), dtype=bool)
    arr[y0:y1, x0:x1] = True
    return arr


def test_single_contour_is_identity():
    c = box(2, 2, 6, 6)
    out = blend_shadow([c])
    assert np.array_equal(out, c.astype(float))


def test_two_disjoint_contours_half_intensity():
    a, b = box(1, 1, 4, 4), box(8, 8, 12, 12)
    out = blend_shadow([a, b])
    assert np.all(out[a] == 0.5) and np.all(out[b] == 0.5)
    assert np.all(out[~(a | b)] == 0.0)


def test_three_contours_max_only_where_all_agree():
    shared = box(5, 5, 8, 8)
    a = shared | box(0, 0, 2, 2)
    b = shared | box(12, 0, 14, 2)
    c = shared | box(0, 12, 2, 14)
    out = blend_shadow([a, b, c])
    assert np.all(out[shared] == pytest.approx(1.0))
    assert out[~shared].max() < 1.0


def test_matches_per_pixel_mean_oracle():
    rng = np.random.default_rng(41)
    rasters = [rng.random((12, 12)) < 0.3 for _ in range(4)]
    weights = [1.0, 2.0, 3.0, 4.0]
    out = blend_shadow(rasters, weights)
    wsum = sum(weights)
    for y in range(12):
        for x in range(12):
            want = sum(w * r[y, x] for w, r in zip(weights, rasters)) / wsum
            assert out[y, x] == pytest.approx(want, abs=1e-12)


def test_permutation_invariance():
    rng = np.random.default_rng(42)
    rasters = [rng.random((10, 10)) < 0.4 for _ in range(3)]
    weights = [0.5, 1.5, 2.0]
    a = blend_shadow(rasters, weights)
    b = blend_shadow(rasters[::-1], weights[::-1])
    assert np.allclose(a, b)


def test_blend_of_identical_inputs_is_input():
    c = box(3, 3, 9, 9)
    out = blend_shadow([c, c, c])
    assert np.array_equal(out, c.astype(float))


def test_errors():
    with pytest.raises(ValidationError):
        blend_shadow([])
    with pytest.raises(ValidationError):
        blend_shadow([box(0, 0, 2, 2, size=8), box(0, 0, 2, 2, size=10)])
    with pytest.raises(ValidationError):
        blend_shadow([box(0, 0, 2, 2)], weights=[0.0])
    with pytest.raises(ValidationError):
        blend_shadow([box(0, 0, 2, 2)], weights=[-1.0])


def test_png_serialization_dark_on_white():
    c = box(2, 2, 6, 6)
    img = gray_from_png(shadow_png(blend_shadow([c])))
    assert img.shape == c.shape
    assert np.all(img[c] == 0)  # full-strength suggestion renders black
    assert np.all(img[~c] == 255)
