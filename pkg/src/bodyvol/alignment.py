"""Upright alignment of body masks.

A vertical axis is drawn through the center of the mask's smallest bounding
rectangle; the mask is rotated until the foreground pixel counts on the two
sides of that axis are as equal as possible. The search is a deterministic
coarse-to-fine grid over a configured angle range, with the axis recomputed
from the rotated mask's bounding rectangle at every trial angle.

Pixel (x, y) is treated as a point at integer coordinates (x, y); rotation
uses inverse mapping with nearest-neighbor sampling so masks stay binary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyMask


@dataclass(frozen=True)
class Rect:
    """Tight axis-aligned bounding box, inclusive coordinates."""

    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f"degenerate rect {self}")

    @property
    def width(self) -> int:
        return self.x_max - self.x_min + 1

    @property
    def height(self) -> int:
        return self.y_max - self.y_min + 1


@dataclass(frozen=True)
class RotationSearchParams:
    angle_min: float = -15.0
    angle_max: float = 15.0
    coarse_step: float = 1.0
    fine_step: float = 0.1

    def __post_init__(self):
        if not self.angle_min < self.angle_max:
            raise ValueError("angle_min must be < angle_max")
        if not 0 < self.fine_step <= self.coarse_step:
            raise ValueError("need 0 < fine_step <= coarse_step")


@dataclass
class AlignmentResult:
    mask: np.ndarray
    angle: float
    score: float


def bounding_rect(mask: np.ndarray) -> Rect:
    """Smallest rectangle containing all foreground pixels."""
    mask = np.asarray(mask, dtype=bool)
    rows = np.flatnonzero(mask.any(axis=1))
    if rows.size == 0:
        raise EmptyMask("cannot bound an empty mask")
    cols = np.flatnonzero(mask.any(axis=0))
    return Rect(int(cols[0]), int(rows[0]), int(cols[-1]), int(rows[-1]))


def rect_centroid(rect: Rect) -> tuple[float, float]:
    return (rect.x_min + rect.x_max) / 2.0, (rect.y_min + rect.y_max) / 2.0


def rotate_mask(
    mask: np.ndarray,
    angle: float,
    pivot: tuple[float, float],
    expand: bool = True,
) -> np.ndarray:
    """Rotate a binary mask by `angle` degrees about `pivot` (x, y).

    With ``expand`` the output canvas is grown/shifted to contain the rotated
    input canvas; otherwise the canvas keeps its shape and content may clip.
    Angle 0 returns a bit-identical copy.
    """
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    theta = math.radians(angle)
    c, s = math.cos(theta), math.sin(theta)
    px, py = pivot

    if expand:
        corners = np.array([[0, 0], [w - 1, 0], [0, h - 1], [w - 1, h - 1]], float)
        dx, dy = corners[:, 0] - px, corners[:, 1] - py
        # round off fp dust so exact multiples of 90 deg map cleanly
        rx = np.round(px + c * dx - s * dy, 9)
        ry = np.round(py + s * dx + c * dy, 9)
        ox = math.floor(rx.min())
        oy = math.floor(ry.min())
        out_w = math.ceil(rx.max()) - ox + 1
        out_h = math.ceil(ry.max()) - oy + 1
    else:
        ox = oy = 0
        out_w, out_h = w, h

    yy, xx = np.indices((out_h, out_w))
    dx = xx + ox - px
    dy = yy + oy - py
    # inverse rotation back into the source frame
    xs = np.rint(px + c * dx + s * dy).astype(np.intp)
    ys = np.rint(py - s * dx + c * dy).astype(np.intp)
    valid = (xs >= 0) & (xs < w) & (ys >= 0) & (ys < h)
    out = np.zeros((out_h, out_w), dtype=bool)
    out[valid] = mask[ys[valid], xs[valid]]
    return out


def asymmetry_score(mask: np.ndarray, axis_x: float) -> float:
    """|left - right| foreground counts about the vertical line x = axis_x,
    over total foreground. Pixels centered exactly on the axis join neither
    side but stay in the denominator.
    """
    mask = np.asarray(mask, dtype=bool)
    total = int(mask.sum())
    if total == 0:
        raise EmptyMask("cannot score an empty mask")
    col_counts = mask.sum(axis=0)
    x = np.arange(mask.shape[1])
    left = int(col_counts[x < axis_x].sum())
    right = int(col_counts[x > axis_x].sum())
    return abs(left - right) / total


def _grid(lo: float, hi: float, step: float) -> list[float]:
    n = int(math.floor((hi - lo) / step + 1e-9))
    return [round(lo + i * step, 6) for i in range(n + 1)]


def align_upright(
    mask: np.ndarray,
    params: RotationSearchParams = RotationSearchParams(),
    axis_from: str = "rect",
) -> AlignmentResult:
    """Rotate the mask to the angle of best left-right symmetry.

    Coarse grid over [angle_min, angle_max], then a fine grid within one
    coarse step of the coarse minimum. Ties break toward smallest |angle|,
    then toward the negative angle, so the result is deterministic.

    ``axis_from`` selects the symmetry axis: "rect" (default) uses the
    bounding-rectangle center, "mask" the foreground centroid. The latter is
    exposed for experimentation only.
    """
    if axis_from not in ("rect", "mask"):
        raise ValueError(f"unknown axis_from {axis_from!r}")
    r = bounding_rect(mask)  # raises EmptyMask
    sub = np.asarray(mask, dtype=bool)[r.y_min : r.y_max + 1, r.x_min : r.x_max + 1]
    pivot = ((sub.shape[1] - 1) / 2.0, (sub.shape[0] - 1) / 2.0)

    def trial(angle: float) -> tuple[float, np.ndarray]:
        rot = rotate_mask(sub, angle, pivot)
        if axis_from == "rect":
            axis = rect_centroid(bounding_rect(rot))[0]
        else:
            axis = float(np.flatnonzero(rot.any(axis=0)).mean()) if rot.any() else 0.0
        return asymmetry_score(rot, axis), rot

    scores: dict[float, float] = {}
    for a in _grid(params.angle_min, params.angle_max, params.coarse_step):
        scores[a] = trial(a)[0]
    best = min(scores, key=lambda a: (scores[a], abs(a), a))
    lo = max(params.angle_min, best - params.coarse_step)
    hi = min(params.angle_max, best + params.coarse_step)
    for a in _grid(lo, hi, params.fine_step):
        if a not in scores:
            scores[a] = trial(a)[0]
    best = min(scores, key=lambda a: (scores[a], abs(a), a))
    score, rotated = trial(best)
    return AlignmentResult(mask=rotated, angle=best, score=score)


def normalize_views(
    back: np.ndarray, side: np.ndarray, rows: int
) -> tuple[np.ndarray, np.ndarray]:
    """Crop both masks to their bounding rectangles and resample each to
    exactly `rows` rows (nearest neighbor along the vertical axis; horizontal
    scale untouched). Row i of each output sits at body height i/(rows-1).
    """
    if rows < 2:
        raise ValueError("rows must be >= 2")

    def norm(mask: np.ndarray) -> np.ndarray:
        r = bounding_rect(mask)
        crop = np.asarray(mask, dtype=bool)[
            r.y_min : r.y_max + 1, r.x_min : r.x_max + 1
        ]
        src = np.rint(np.arange(rows) * (crop.shape[0] - 1) / (rows - 1)).astype(int)
        return crop[src]

    return norm(back), norm(side)
