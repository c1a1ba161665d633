"""Raster I/O: RGB images in (PNG, binary PPM), binary masks out (PNG, binary PGM).

Images are numpy arrays: RGB images are ``(H, W, 3) uint8``, masks are
``(H, W) bool`` with True = body. PPM/PGM are handled without any imaging
library; PNG goes through Pillow.
"""

from __future__ import annotations

import os

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import BadImage


def read_image(path: str | os.PathLike) -> np.ndarray:
    """Load an RGB image from a PNG or binary (P6) PPM file."""
    path = os.fspath(path)
    if path.lower().endswith((".ppm", ".pnm")):
        return _read_ppm(path)
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (FileNotFoundError, UnidentifiedImageError, OSError) as exc:
        raise BadImage(f"cannot read image {path!r}: {exc}") from exc


def write_image(path: str | os.PathLike, rgb: np.ndarray) -> None:
    """Write an RGB image as PNG or binary PPM, chosen by extension."""
    path = os.fspath(path)
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise BadImage(f"expected (H, W, 3) array, got shape {rgb.shape}")
    if path.lower().endswith((".ppm", ".pnm")):
        h, w = rgb.shape[:2]
        with open(path, "wb") as f:
            f.write(b"P6\n%d %d\n255\n" % (w, h))
            f.write(rgb.tobytes())
    else:
        Image.fromarray(rgb, mode="RGB").save(path)


def read_mask(path: str | os.PathLike) -> np.ndarray:
    """Load a binary mask (nonzero = body) from a grayscale PNG or P5 PGM."""
    path = os.fspath(path)
    if path.lower().endswith(".pgm"):
        return _read_pgm(path) > 0
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("L")) > 0
    except (FileNotFoundError, UnidentifiedImageError, OSError) as exc:
        raise BadImage(f"cannot read mask {path!r}: {exc}") from exc


def write_mask(path: str | os.PathLike, mask: np.ndarray) -> None:
    """Write a binary mask as 0/255 grayscale PNG or binary PGM."""
    path = os.fspath(path)
    mask = np.asarray(mask, dtype=bool)
    gray = np.where(mask, np.uint8(255), np.uint8(0))
    if path.lower().endswith(".pgm"):
        h, w = gray.shape
        with open(path, "wb") as f:
            f.write(b"P5\n%d %d\n255\n" % (w, h))
            f.write(gray.tobytes())
    else:
        Image.fromarray(gray, mode="L").save(path)


def _tokenize_pnm_header(data: bytes, n_tokens: int) -> tuple[list[bytes], int]:
    """Read `n_tokens` whitespace-separated header tokens, skipping # comments.

    Returns the tokens and the offset of the first raster byte (one whitespace
    char after the last token, per the PNM spec).
    """
    tokens: list[bytes] = []
    i = 0
    while len(tokens) < n_tokens:
        if i >= len(data):
            raise BadImage("truncated PNM header")
        c = data[i : i + 1]
        if c == b"#":
            while i < len(data) and data[i : i + 1] != b"\n":
                i += 1
        elif c.isspace():
            i += 1
        else:
            start = i
            while i < len(data) and not data[i : i + 1].isspace():
                i += 1
            tokens.append(data[start:i])
    return tokens, i + 1


def _read_pnm(path: str, magic: bytes, channels: int) -> np.ndarray:
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as exc:
        raise BadImage(f"cannot read {path!r}: {exc}") from exc
    tokens, offset = _tokenize_pnm_header(data, 4)
    if tokens[0] != magic:
        raise BadImage(f"{path!r}: expected {magic.decode()} file, got {tokens[0]!r}")
    try:
        w, h, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise BadImage(f"{path!r}: malformed PNM header") from exc
    if maxval != 255:
        raise BadImage(f"{path!r}: only maxval 255 supported, got {maxval}")
    n = w * h * channels
    raster = data[offset : offset + n]
    if len(raster) != n:
        raise BadImage(f"{path!r}: raster truncated ({len(raster)} of {n} bytes)")
    arr = np.frombuffer(raster, dtype=np.uint8)
    return arr.reshape((h, w, channels) if channels > 1 else (h, w))


def _read_ppm(path: str) -> np.ndarray:
    return _read_pnm(path, b"P6", 3)


def _read_pgm(path: str) -> np.ndarray:
    return _read_pnm(path, b"P5", 1)
