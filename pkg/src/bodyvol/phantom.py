"""Synthetic green-screen phantoms with known volumes.

A phantom is an analytic solid (elliptic cylinder, ellipsoid, or a vertical
stack of elliptical levels) rendered as a flat red body on a flat green
field, in two orthographic views: the back view projects widths, the side
view projects depths. Optional abducted arms (vertical circular cylinders)
appear in the back view only, attached to the body by short shoulder bridges
so the silhouette stays one 4-connected component.

Two independent volume oracles are provided: closed forms
(``analytic_volume``) and sub-voxel center counting (``voxel_volume``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .alignment import rotate_mask
from .errors import SpecOutOfBounds

BODY_RGB = (255, 0, 0)
SCREEN_RGB = (0, 255, 0)

KINDS = ("elliptic_cylinder", "ellipsoid", "humanoid_stack")


@dataclass(frozen=True)
class ArmSpec:
    """A pair of abducted circular arms, back view only.

    ``top`` is the body row at which the arms (and their shoulder bridges)
    start, ``gap`` the horizontal clearance between body and arm.
    """

    width: float
    length: int
    gap: float = 4.0
    top: int = 0
    bridge_rows: int = 1

    def __post_init__(self):
        if self.width <= 0 or self.length < 1:
            raise SpecOutOfBounds("arm width and length must be positive")
        if self.gap <= 0 or self.top < 0 or not 1 <= self.bridge_rows <= self.length:
            raise SpecOutOfBounds("bad arm gap/top/bridge_rows")


@dataclass(frozen=True)
class PhantomSpec:
    kind: str
    params: dict
    rotation: float = 0.0
    arms: ArmSpec | None = None
    canvas: tuple[int, int] = (600, 800)  # (width, height)
    noise: int = 0  # +- per-channel uniform render noise
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecOutOfBounds(f"unknown phantom kind {self.kind!r}")
        _profile(self)  # validates params

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "params": self.params,
            "rotation": self.rotation,
            "canvas": list(self.canvas),
            "noise": self.noise,
            "seed": self.seed,
        }
        if self.arms is not None:
            d["arms"] = {
                "width": self.arms.width,
                "length": self.arms.length,
                "gap": self.arms.gap,
                "top": self.arms.top,
                "bridge_rows": self.arms.bridge_rows,
            }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PhantomSpec":
        arms = ArmSpec(**d["arms"]) if d.get("arms") else None
        return cls(
            kind=d["kind"],
            params=d["params"],
            rotation=float(d.get("rotation", 0.0)),
            arms=arms,
            canvas=tuple(d.get("canvas", (600, 800))),
            noise=int(d.get("noise", 0)),
            seed=int(d.get("seed", 0)),
        )


@dataclass
class PhantomTruth:
    analytic_px3: float
    voxel_px3: float | None
    rotation: float


def _require(params: dict, keys: tuple[str, ...], kind: str) -> None:
    missing = [k for k in keys if k not in params]
    if missing:
        raise SpecOutOfBounds(f"{kind} params missing {missing}")


def _profile(spec: PhantomSpec):
    """Return (total body rows, f(y) -> (half_width, half_depth)) for y in [0, rows]."""
    p = spec.params
    if spec.kind == "elliptic_cylinder":
        _require(p, ("half_width", "half_depth", "rows"), spec.kind)
        a, b, n = float(p["half_width"]), float(p["half_depth"]), int(p["rows"])
        if min(a, b) <= 0 or n < 1:
            raise SpecOutOfBounds("elliptic_cylinder dimensions must be positive")
        return n, lambda y: (a, b)
    if spec.kind == "ellipsoid":
        _require(p, ("half_width", "half_depth", "half_height"), spec.kind)
        a, b, c = (float(p[k]) for k in ("half_width", "half_depth", "half_height"))
        if min(a, b, c) <= 0:
            raise SpecOutOfBounds("ellipsoid semi-axes must be positive")
        n = int(round(2 * c))

        def prof(y, a=a, b=b, c=c):
            t = (y - c) / c
            f = math.sqrt(max(0.0, 1.0 - t * t))
            return a * f, b * f

        return n, prof
    # humanoid_stack
    _require(p, ("levels",), spec.kind)
    levels = [(float(hw), float(hd), int(rows)) for hw, hd, rows in p["levels"]]
    if not levels or any(min(hw, hd) <= 0 or rows < 1 for hw, hd, rows in levels):
        raise SpecOutOfBounds("humanoid_stack needs positive levels")
    bounds = np.cumsum([rows for _, _, rows in levels])

    def prof(y, levels=levels, bounds=bounds):
        i = int(np.searchsorted(bounds, y, side="right"))
        i = min(i, len(levels) - 1)
        return levels[i][0], levels[i][1]

    return int(bounds[-1]), prof


def _arm_offset(spec: PhantomSpec) -> float:
    """Horizontal distance from body centerline to the arm's inner edge."""
    n, prof = _profile(spec)
    arms = spec.arms
    span = range(arms.top, min(arms.top + arms.length, n))
    if not span:
        raise SpecOutOfBounds("arms lie entirely below the body")
    return max(prof(j + 0.5)[0] for j in span) + arms.gap


def render_masks(spec: PhantomSpec) -> tuple[np.ndarray, np.ndarray]:
    """Ground-truth binary body masks (back, side), rotation applied."""
    W, H = spec.canvas
    n, prof = _profile(spec)
    if n > H:
        raise SpecOutOfBounds(f"body of {n} rows does not fit canvas height {H}")
    top = (H - n) // 2
    cx = W / 2.0
    xc = np.arange(W) + 0.5
    back = np.zeros((H, W), dtype=bool)
    side = np.zeros((H, W), dtype=bool)
    for j in range(n):
        hw, hd = prof(j + 0.5)
        back[top + j] = (xc >= cx - hw) & (xc < cx + hw)
        side[top + j] = (xc >= cx - hd) & (xc < cx + hd)
    if spec.arms is not None:
        arms = spec.arms
        off = _arm_offset(spec)
        if cx + off + arms.width > W:
            raise SpecOutOfBounds("arms do not fit canvas width")
        for j in range(arms.top, min(arms.top + arms.length, n)):
            right = (xc >= cx + off) & (xc < cx + off + arms.width)
            left = (xc > cx - off - arms.width) & (xc <= cx - off)
            back[top + j] |= right | left
        for j in range(arms.top, arms.top + arms.bridge_rows):
            hw = prof(j + 0.5)[0]
            back[top + j] |= (xc >= cx + hw) & (xc < cx + off)
            back[top + j] |= (xc > cx - off) & (xc <= cx - hw)
    if spec.rotation != 0.0:
        center = ((W - 1) / 2.0, (H - 1) / 2.0)
        for m in (back, side):
            _check_rotation_fits(m, spec.rotation, center, W, H)
        back = rotate_mask(back, spec.rotation, center, expand=False)
        side = rotate_mask(side, spec.rotation, center, expand=False)
    return back, side


def _check_rotation_fits(mask, angle, center, W, H):
    ys, xs = np.nonzero(mask)
    corners = [(xs.min(), ys.min()), (xs.max(), ys.min()), (xs.min(), ys.max()), (xs.max(), ys.max())]
    th = math.radians(angle)
    c, s = math.cos(th), math.sin(th)
    for x, y in corners:
        dx, dy = x - center[0], y - center[1]
        rx, ry = center[0] + c * dx - s * dy, center[1] + s * dx + c * dy
        if not (-0.5 <= rx <= W - 0.5 and -0.5 <= ry <= H - 0.5):
            raise SpecOutOfBounds(f"rotation {angle} deg pushes content off canvas")


def render_phantom(spec: PhantomSpec) -> tuple[np.ndarray, np.ndarray]:
    """Render (back, side) RGB images: red body on green screen."""
    back, side = render_masks(spec)
    rng = np.random.default_rng(spec.seed)
    images = []
    for m in (back, side):
        rgb = np.empty(m.shape + (3,), dtype=np.uint8)
        rgb[...] = SCREEN_RGB
        rgb[m] = BODY_RGB
        if spec.noise > 0:
            jitter = rng.integers(-spec.noise, spec.noise + 1, size=rgb.shape)
            rgb = np.clip(rgb.astype(np.int16) + jitter, 0, 255).astype(np.uint8)
        images.append(rgb)
    return images[0], images[1]


def analytic_volume(spec: PhantomSpec) -> float:
    """Closed-form volume of the phantom solid (rotation-invariant)."""
    p = spec.params
    if spec.kind == "elliptic_cylinder":
        v = math.pi * p["half_width"] * p["half_depth"] * p["rows"]
    elif spec.kind == "ellipsoid":
        v = 4.0 / 3.0 * math.pi * p["half_width"] * p["half_depth"] * p["half_height"]
    else:
        v = sum(math.pi * hw * hd * rows for hw, hd, rows in p["levels"])
    if spec.arms is not None:
        arms = spec.arms
        n, prof = _profile(spec)
        length = min(arms.length, n - arms.top)
        v += 2.0 * math.pi * (arms.width / 2.0) ** 2 * length
        off = _arm_offset(spec)
        for j in range(arms.top, arms.top + arms.bridge_rows):
            v += 2.0 * (off - prof(j + 0.5)[0]) * arms.width  # bridge slabs, depth = arm width
    return v


def voxel_volume(spec: PhantomSpec, resolution: int = 2) -> float:
    """Brute-force volume: count sub-voxel centers inside the implicit solid.

    ``resolution`` is the number of subdivisions per pixel along each axis.
    Rotation is ignored (volume-invariant).
    """
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    res = resolution
    n, prof = _profile(spec)
    vol = 0.0
    inv3 = 1.0 / res**3
    for k in range(n * res):
        hw, hd = prof((k + 0.5) / res)
        if hw <= 0 or hd <= 0:
            continue
        xs = _centered_grid(hw, res)
        zs = _centered_grid(hd, res)
        inside = (xs[:, None] / hw) ** 2 + (zs[None, :] / hd) ** 2 <= 1.0
        vol += int(inside.sum()) * inv3
    if spec.arms is not None:
        arms = spec.arms
        r = arms.width / 2.0
        xs = _centered_grid(r, res)
        circle = int(((xs[:, None]) ** 2 + (xs[None, :]) ** 2 <= r * r).sum())
        length = min(arms.length, n - arms.top)
        vol += 2.0 * circle / res**2 * length
        off = _arm_offset(spec)
        for j in range(arms.top, arms.top + arms.bridge_rows):
            vol += 2.0 * (off - prof(j + 0.5)[0]) * arms.width
    return vol


def _centered_grid(half_extent: float, res: int) -> np.ndarray:
    """Sub-voxel center coordinates covering [-half_extent, half_extent]."""
    m = math.ceil(2.0 * half_extent * res)
    return (np.arange(m) + 0.5) / res - m / (2.0 * res)


def fixture_specs() -> dict[str, PhantomSpec]:
    """The shipped phantom set used by the verification suite."""
    return {
        "cylinder": PhantomSpec(
            kind="elliptic_cylinder",
            params={"half_width": 20, "half_depth": 20, "rows": 100},
        ),
        "ellipsoid": PhantomSpec(
            kind="ellipsoid",
            params={"half_width": 30, "half_depth": 20, "half_height": 50},
        ),
        # Levels: head, trunk, legs, feet. The wide feet level keeps the
        # left-right balance single-signed across the whole +-15 deg search
        # window, so the symmetry minimum is the true upright angle.
        "humanoid": PhantomSpec(
            kind="humanoid_stack",
            params={
                "levels": [
                    [20, 24, 70],
                    [44, 36, 180],
                    [36, 32, 220],
                    [60, 24, 32],
                ]
            },
        ),
        "humanoid_arms": PhantomSpec(
            kind="humanoid_stack",
            params={
                "levels": [
                    [20, 24, 70],
                    [44, 36, 180],
                    [36, 32, 220],
                    [60, 24, 32],
                ]
            },
            arms=ArmSpec(width=12, length=160, gap=6, top=80, bridge_rows=2),
        ),
        "tall_cylinder": PhantomSpec(
            kind="elliptic_cylinder",
            params={"half_width": 25, "half_depth": 15, "rows": 300},
        ),
        "squat_ellipsoid": PhantomSpec(
            kind="ellipsoid",
            params={"half_width": 45, "half_depth": 35, "half_height": 80},
        ),
    }
