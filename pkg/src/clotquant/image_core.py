"""Image representation, decoding and preprocessing.

Images are plain numpy arrays: a GrayImage is a ``(height, width)`` uint8
array, an RgbImage a ``(height, width, 3)`` uint8 array. Pixel centers sit
at integer coordinates ``(col, row)`` with the origin at the top-left.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from .errors import (
    ImageIOError,
    MalformedHeader,
    TruncatedData,
    UnsupportedFormat,
    UnsupportedMaxval,
)

BACKGROUND_WHITE = 255

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_WHITESPACE = b" \t\r\n\v\f"


def as_gray(data, width: int | None = None, height: int | None = None) -> np.ndarray:
    """Build a validated GrayImage from a 2-D array or a flat row-major list."""
    arr = np.asarray(data)
    if arr.ndim == 1:
        if width is None or height is None:
            raise ValueError("flat pixel data needs width and height")
        if arr.size != width * height:
            raise ValueError(f"expected {width * height} samples, got {arr.size}")
        arr = arr.reshape(height, width)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"GrayImage must be a nonempty 2-D grid, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        if arr.size and (arr.min() < 0 or arr.max() > 255):
            raise ValueError("GrayImage values must lie in [0, 255]")
        arr = arr.astype(np.uint8)
    return arr


# --------------------------------------------------------------------- PGM


def _read_header_tokens(buf: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace separated header tokens, skipping comments.

    Returns the tokens and the offset of the single whitespace byte that
    terminates the last token.
    """
    tokens: list[bytes] = []
    pos = 0
    n = len(buf)
    while len(tokens) < count:
        while pos < n and buf[pos] in _WHITESPACE:
            pos += 1
        if pos >= n:
            raise MalformedHeader("header ended early")
        if buf[pos] == ord("#"):
            while pos < n and buf[pos] not in b"\r\n":
                pos += 1
            continue
        start = pos
        while pos < n and buf[pos] not in _WHITESPACE and buf[pos] != ord("#"):
            pos += 1
        tokens.append(buf[start:pos])
    return tokens, pos


def decode_pgm(data: bytes) -> np.ndarray:
    """Decode a binary (P5) or ASCII (P2) PGM file with maxval <= 255."""
    if len(data) < 2 or data[:2] not in (b"P5", b"P2"):
        raise MalformedHeader("not a P5/P2 PGM file")
    magic = data[:2]
    tokens, pos = _read_header_tokens(data, 4)
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise MalformedHeader(f"non-numeric header fields: {tokens[1:]!r}") from None
    if width < 1 or height < 1:
        raise MalformedHeader(f"bad dimensions {width}x{height}")
    if maxval < 1:
        raise MalformedHeader(f"bad maxval {maxval}")
    if maxval > 255:
        raise UnsupportedMaxval(f"maxval {maxval} > 255")
    n = width * height

    if magic == b"P5":
        if pos >= len(data):
            raise TruncatedData(f"expected {n} samples, got 0")
        raster = data[pos + 1 : pos + 1 + n]
        if len(raster) < n:
            raise TruncatedData(f"expected {n} samples, got {len(raster)}")
        arr = np.frombuffer(raster, dtype=np.uint8)
    else:
        body = re.sub(rb"#[^\r\n]*", b" ", data[pos:])
        fields = body.split()
        if len(fields) < n:
            raise TruncatedData(f"expected {n} samples, got {len(fields)}")
        try:
            values = [int(f) for f in fields[:n]]
        except ValueError:
            raise MalformedHeader("non-numeric sample in ASCII raster") from None
        if min(values) < 0 or max(values) > maxval:
            raise MalformedHeader(f"sample outside [0, {maxval}]")
        arr = np.array(values, dtype=np.uint8)
    return arr.reshape(height, width).copy()


def encode_pgm(img: np.ndarray) -> bytes:
    """Encode a GrayImage as P5 with maxval 255 and no comments."""
    img = as_gray(img)
    h, w = img.shape
    return b"P5 %d %d 255\n" % (w, h) + np.ascontiguousarray(img).tobytes()


def decode_image(path) -> np.ndarray:
    """Load a PGM (P2/P5) or 8-bit gray/RGB PNG file as a GrayImage."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ImageIOError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if data[:2] in (b"P5", b"P2"):
        return decode_pgm(data)
    if data.startswith(_PNG_SIGNATURE):
        return _decode_png(data)
    raise UnsupportedFormat(f"{path}: neither PGM nor PNG")


def _decode_png(data: bytes) -> np.ndarray:
    import io

    from PIL import Image

    try:
        with Image.open(io.BytesIO(data)) as im:
            im.load()
            mode = im.mode
            if mode == "L":
                return as_gray(np.array(im, dtype=np.uint8))
            if mode == "RGB":
                return to_gray(np.array(im, dtype=np.uint8))
    except OSError as exc:
        raise TruncatedData(f"corrupt PNG: {exc}") from exc
    raise UnsupportedFormat(f"PNG mode {mode!r} is not 8-bit gray or RGB")


def write_pgm(path, img: np.ndarray) -> None:
    Path(path).write_bytes(encode_pgm(img))


# ------------------------------------------------------------ color / ROI


def round_half_away(values: np.ndarray) -> np.ndarray:
    return np.sign(values) * np.floor(np.abs(values) + 0.5)


def to_gray(img: np.ndarray) -> np.ndarray:
    """Rec.601 luminance, rounded half away from zero."""
    rgb = np.asarray(img, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"RgbImage must have shape (h, w, 3), got {rgb.shape}")
    lum = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return np.clip(round_half_away(lum), 0, 255).astype(np.uint8)


@dataclass(frozen=True)
class RoiMask:
    """Region of the frame that belongs to the filter face.

    ``kind`` is ``"full"`` (whole frame) or ``"disk"``. Disk centers may be
    fractional and may lie outside the image.
    """

    kind: Literal["full", "disk"] = "full"
    center_x: float = 0.0
    center_y: float = 0.0
    radius: float = 0.0

    def __post_init__(self):
        if self.kind not in ("full", "disk"):
            raise ValueError(f"unknown ROI kind {self.kind!r}")
        if self.kind == "disk" and not self.radius > 0:
            raise ValueError("disk ROI radius must be > 0")

    @classmethod
    def full(cls) -> RoiMask:
        return cls("full")

    @classmethod
    def disk(cls, center_x: float, center_y: float, radius: float) -> RoiMask:
        return cls("disk", float(center_x), float(center_y), float(radius))

    @classmethod
    def parse(cls, text: str) -> RoiMask:
        """Parse ``full`` or ``disk:cx,cy,r``."""
        text = text.strip()
        if text == "full":
            return cls.full()
        if text.startswith("disk:"):
            parts = text[5:].split(",")
            if len(parts) == 3:
                try:
                    return cls.disk(*(float(p) for p in parts))
                except ValueError:
                    pass
        raise ValueError(f"invalid ROI {text!r}; expected 'full' or 'disk:cx,cy,r'")

    def to_dict(self) -> dict:
        if self.kind == "full":
            return {"kind": "full"}
        return {
            "kind": "disk",
            "center_x": self.center_x,
            "center_y": self.center_y,
            "radius": self.radius,
        }

    def __str__(self) -> str:
        if self.kind == "full":
            return "full"
        return f"disk:{self.center_x!r},{self.center_y!r},{self.radius!r}"


def disk_membership(cx: float, cy: float, radius: float, width: int, height: int) -> np.ndarray:
    """Boolean ``(height, width)`` grid of pixel centers inside a closed disk."""
    cols = np.arange(width, dtype=np.float64) - cx
    rows = np.arange(height, dtype=np.float64) - cy
    return rows[:, None] ** 2 + cols[None, :] ** 2 <= radius * radius


def roi_membership(mask: RoiMask, width: int, height: int) -> np.ndarray:
    if mask.kind == "full":
        return np.ones((height, width), dtype=bool)
    return disk_membership(mask.center_x, mask.center_y, mask.radius, width, height)


def roi_area(mask: RoiMask, width: int, height: int) -> int:
    """Number of pixel centers inside both the mask and the image bounds."""
    if width < 1 or height < 1:
        raise ValueError("image dimensions must be >= 1")
    if mask.kind == "full":
        return width * height
    return int(roi_membership(mask, width, height).sum())


def apply_roi(img: np.ndarray, mask: RoiMask) -> np.ndarray:
    """Paint pixels outside the mask white; inside pixels are unchanged."""
    img = as_gray(img)
    if mask.kind == "full":
        return img.copy()
    h, w = img.shape
    out = img.copy()
    out[~roi_membership(mask, w, h)] = BACKGROUND_WHITE
    return out


# ------------------------------------------------------------- denoising

_MEDIAN_CHUNK_ELEMS = 1 << 22


def median_filter(img: np.ndarray, radius: int) -> np.ndarray:
    """Square-window median with windows clipped at the image border.

    Clipped windows may hold an even number of samples; the lower median is
    taken in that case.
    """
    img = as_gray(img)
    if radius < 1:
        raise ValueError("median radius must be >= 1")
    h, w = img.shape
    side = 2 * radius + 1
    # 256 sorts after every real sample and marks out-of-bounds window slots.
    padded = np.pad(img.astype(np.uint16), radius, constant_values=256)
    windows = np.lib.stride_tricks.sliding_window_view(padded, (side, side))
    out = np.empty_like(img)
    rows_per_chunk = max(1, _MEDIAN_CHUNK_ELEMS // (w * side * side))
    for r0 in range(0, h, rows_per_chunk):
        block = windows[r0 : r0 + rows_per_chunk].reshape(-1, w, side * side)
        block = np.sort(block, axis=-1)
        valid = (block < 256).sum(axis=-1)
        idx = (valid - 1) // 2
        out[r0 : r0 + rows_per_chunk] = np.take_along_axis(block, idx[..., None], axis=-1)[..., 0]
    return out
