import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import ndimage

from bodyvol.errors import EmptyMask
from bodyvol.segmentation import (
    FOUR_CONNECTED,
    HueThresholdParams,
    clean_mask,
    rgb_to_hsv,
    segment_green_screen,
)


def uniform_image(rgb, w=8, h=6):
    img = np.empty((h, w, 3), dtype=np.uint8)
    img[...] = rgb
    return img


class TestRgbToHsv:
    def test_pure_green(self):
        assert rgb_to_hsv((0, 255, 0)) == (120.0, 1.0, 1.0)

    def test_gray_has_zero_saturation(self):
        h, s, v = rgb_to_hsv((128, 128, 128))
        assert (h, s) == (0.0, 0.0)
        assert v == pytest.approx(0.50196, abs=1e-5)

    def test_pure_red(self):
        assert rgb_to_hsv((255, 0, 0)) == (0.0, 1.0, 1.0)


class TestSegment:
    def test_uniform_green_is_all_background(self):
        mask = segment_green_screen(uniform_image((0, 255, 0)))
        assert mask.sum() == 0

    def test_uniform_red_is_all_body(self):
        mask = segment_green_screen(uniform_image((255, 0, 0)))
        assert mask.all()

    def test_red_rectangle_on_green_field(self):
        img = uniform_image((0, 255, 0), w=200, h=300)
        img[100:200, 80:120] = (255, 0, 0)  # 40 x 100 rectangle
        mask = segment_green_screen(img)
        expected = np.zeros((300, 200), dtype=bool)
        expected[100:200, 80:120] = True
        assert np.array_equal(mask, expected)

    def test_hue_band_wrap(self):
        params = HueThresholdParams(hue_min=350.0, hue_max=10.0, sat_min=0.5, val_min=0.5)
        mask = segment_green_screen(uniform_image((255, 0, 0)), params)
        assert mask.sum() == 0  # red now falls in the wrapped band

    def test_bad_params_rejected(self):
        with pytest.raises(ValueError):
            HueThresholdParams(hue_min=400.0)
        with pytest.raises(ValueError):
            HueThresholdParams(sat_min=1.5)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_partition_property(self, seed):
        rng = np.random.default_rng(seed)
        img = rng.integers(0, 256, size=(12, 17, 3), dtype=np.uint8)
        mask = segment_green_screen(img)
        assert int(mask.sum()) + int((~mask).sum()) == 12 * 17

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=20, deadline=None)
    def test_row_permutation_equivariance(self, seed):
        rng = np.random.default_rng(seed)
        img = rng.integers(0, 256, size=(10, 10, 3), dtype=np.uint8)
        perm = rng.permutation(10)
        assert np.array_equal(
            segment_green_screen(img[perm]), segment_green_screen(img)[perm]
        )


class TestCleanMask:
    def test_keeps_largest_component(self):
        mask = np.zeros((20, 20), dtype=bool)
        mask[2:12, 2:12] = True  # 100 px blob
        mask[15, 15:18] = True  # 3 px speck
        cleaned = clean_mask(mask)
        assert cleaned.sum() == 100
        assert not cleaned[15, 15:18].any()

    def test_fills_interior_hole(self):
        mask = np.zeros((12, 12), dtype=bool)
        mask[1:11, 1:11] = True
        mask[5:7, 5:7] = False  # 2x2 hole
        cleaned = clean_mask(mask)
        assert cleaned.sum() == mask.sum() + 4

    def test_idempotent_on_clean_input(self):
        mask = np.zeros((10, 10), dtype=bool)
        mask[2:8, 3:7] = True
        assert np.array_equal(clean_mask(mask), mask)

    def test_border_notch_not_filled(self):
        mask = np.ones((6, 6), dtype=bool)
        mask[0, 2] = False  # touches the border: not a hole
        assert np.array_equal(clean_mask(mask), mask)

    def test_empty_raises(self):
        with pytest.raises(EmptyMask):
            clean_mask(np.zeros((4, 4), dtype=bool))

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_single_component_and_idempotent(self, seed):
        from conftest import random_blob_mask

        rng = np.random.default_rng(seed)
        mask = random_blob_mask(seed)
        mask |= rng.random(mask.shape) < 0.05  # sprinkle specks
        if not mask.any():
            return
        cleaned = clean_mask(mask)
        _, n = ndimage.label(cleaned, structure=FOUR_CONNECTED)
        assert n == 1
        assert np.array_equal(clean_mask(cleaned), cleaned)
