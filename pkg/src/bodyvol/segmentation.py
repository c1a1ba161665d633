"""Green-screen segmentation: hue-threshold background removal and mask cleanup.

A pixel is background iff its hue falls in the configured green band AND its
saturation and value clear the configured floors; everything else is body.
``clean_mask`` then keeps the largest 4-connected component and fills enclosed
holes, which is what the downstream slicing assumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import EmptyMask

# 4-connectivity everywhere: avoids diagonal leakage through anti-aliased edges.
FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True)
class HueThresholdParams:
    """Background classification thresholds. The hue band may wrap 360 -> 0."""

    hue_min: float = 90.0
    hue_max: float = 150.0
    sat_min: float = 0.25
    val_min: float = 0.15

    def __post_init__(self):
        if not (0.0 <= self.hue_min < 360.0 and 0.0 <= self.hue_max < 360.0):
            raise ValueError("hue bounds must lie in [0, 360)")
        if not (0.0 <= self.sat_min <= 1.0 and 0.0 <= self.val_min <= 1.0):
            raise ValueError("sat_min and val_min must lie in [0, 1]")


def rgb_to_hsv_planes(rgb: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized hexcone RGB -> (hue degrees, sat, val) for a uint8 image."""
    rgbf = np.asarray(rgb, dtype=np.float64) / 255.0
    r, g, b = rgbf[..., 0], rgbf[..., 1], rgbf[..., 2]
    v = rgbf.max(axis=-1)
    c = v - rgbf.min(axis=-1)
    s = np.where(v > 0, c / np.where(v > 0, v, 1.0), 0.0)

    # Hue is undefined where chroma is zero; report 0 there.
    safe_c = np.where(c > 0, c, 1.0)
    h = np.zeros_like(v)
    is_r = (v == r) & (c > 0)
    is_g = (v == g) & (c > 0) & ~is_r
    is_b = (c > 0) & ~is_r & ~is_g
    h = np.where(is_r, (g - b) / safe_c, h)
    h = np.where(is_g, 2.0 + (b - r) / safe_c, h)
    h = np.where(is_b, 4.0 + (r - g) / safe_c, h)
    h = (h * 60.0) % 360.0
    return h, s, v


def rgb_to_hsv(pixel) -> tuple[float, float, float]:
    """Scalar RGB triple (0..255 channels) -> (hue degrees, sat, val)."""
    h, s, v = rgb_to_hsv_planes(np.asarray(pixel, dtype=np.uint8).reshape(1, 1, 3))
    return float(h[0, 0]), float(s[0, 0]), float(v[0, 0])


def segment_green_screen(
    image: np.ndarray, params: HueThresholdParams = HueThresholdParams()
) -> np.ndarray:
    """Classify each pixel of an RGB image; returns a bool mask, True = body."""
    h, s, v = rgb_to_hsv_planes(image)
    if params.hue_min <= params.hue_max:
        in_band = (h >= params.hue_min) & (h <= params.hue_max)
    else:  # band wraps through 0
        in_band = (h >= params.hue_min) | (h <= params.hue_max)
    background = in_band & (s >= params.sat_min) & (v >= params.val_min)
    return ~background


def clean_mask(mask: np.ndarray, smooth_radius: int = 0) -> np.ndarray:
    """Keep the largest 4-connected component and fill enclosed holes.

    Idempotent. ``smooth_radius`` > 0 additionally applies a binary
    open+close with a disk of that radius before component selection
    (off by default; it is not needed on clean captures).
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise EmptyMask("mask has no foreground pixels")
    if smooth_radius > 0:
        disk = _disk(smooth_radius)
        mask = ndimage.binary_closing(ndimage.binary_opening(mask, disk), disk)
        if not mask.any():
            raise EmptyMask(f"mask vanished under open/close radius {smooth_radius}")
    labels, n = ndimage.label(mask, structure=FOUR_CONNECTED)
    if n > 1:
        counts = np.bincount(labels.ravel())
        counts[0] = 0
        mask = labels == counts.argmax()
    return ndimage.binary_fill_holes(mask, structure=FOUR_CONNECTED)


def _disk(radius: int) -> np.ndarray:
    y, x = np.ogrid[-radius : radius + 1, -radius : radius + 1]
    return x * x + y * y <= radius * radius
