import numpy as np
import pytest

import bodyvol as bv
from bodyvol.alignment import bounding_rect


def measure_phantom(spec, rows=400, align=True):
    """Render -> segment -> clean -> align -> normalize -> volume, in memory.

    Returns (VolumeEstimate, ShapeFeatures, SliceProfileSet).
    """
    back_rgb, side_rgb = bv.render_phantom(spec)
    masks = []
    for rgb in (back_rgb, side_rgb):
        m = bv.clean_mask(bv.segment_green_screen(rgb))
        if align:
            m = bv.align_upright(m).mask
        masks.append(m)
    heights = [bounding_rect(m).height for m in masks]
    nb, ns = bv.normalize_views(masks[0], masks[1], rows)
    row_height = (heights[0] + heights[1]) / 2.0 / rows
    profiles = bv.extract_profiles(nb, ns, row_height_px=row_height)
    volume = bv.body_volume(profiles)
    features = bv.shape_features(profiles, volume)
    return volume, features, profiles


def write_phantom_pair(spec, directory):
    """Render a phantom to <dir>/back.png and <dir>/side.png; returns the paths."""
    from bodyvol import raster

    directory.mkdir(parents=True, exist_ok=True)
    back_rgb, side_rgb = bv.render_phantom(spec)
    back_path = directory / "back.png"
    side_path = directory / "side.png"
    raster.write_image(back_path, back_rgb)
    raster.write_image(side_path, side_rgb)
    return str(back_path), str(side_path)


def random_blob_mask(seed, shape=(40, 40)):
    """A connected random blob: a filled random walk, for property tests."""
    rng = np.random.default_rng(seed)
    mask = np.zeros(shape, dtype=bool)
    y, x = shape[0] // 2, shape[1] // 2
    for _ in range(rng.integers(10, 200)):
        mask[y, x] = True
        dy, dx = ((0, 1), (0, -1), (1, 0), (-1, 0))[rng.integers(4)]
        y = int(np.clip(y + dy, 0, shape[0] - 1))
        x = int(np.clip(x + dx, 0, shape[1] - 1))
    return mask


@pytest.fixture(scope="session")
def fixtures():
    return bv.fixture_specs()
