"""RGB-D capture bundle and PNG (de)serialization.

Depth images are 16-bit grayscale PNG, value = depth along the camera axis in
millimeters, 0 = invalid.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image

from xract.context3d.camera import CameraParams
from xract.errors import XractError
from xract.uad.records import RealityType


class DegenerateSize(XractError):
    """Requested resize collapses an axis below one pixel."""


class DimensionMismatch(XractError):
    """Image dimensions disagree with the camera parameters."""


def encode_rgb_png(rgb: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(rgb.astype(np.uint8)), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def decode_rgb_png(data: bytes) -> np.ndarray:
    img = Image.open(io.BytesIO(data)).convert("RGB")
    return np.asarray(img, dtype=np.uint8)


def encode_depth_png(depth_mm: np.ndarray) -> bytes:
    depth_mm = np.ascontiguousarray(depth_mm.astype(np.uint16))
    h, w = depth_mm.shape
    img = Image.frombytes("I;16", (w, h), depth_mm.tobytes())
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def decode_depth_png(data: bytes) -> np.ndarray:
    img = Image.open(io.BytesIO(data))
    arr = np.asarray(img)
    if arr.dtype not in (np.uint16, np.int32, np.uint8):
        raise XractError(f"unexpected depth PNG dtype {arr.dtype}")
    return arr.astype(np.uint16)


@dataclass(frozen=True)
class ContextCapture:
    """One RGB-D snapshot with its camera; dimensions must agree."""

    rgb: np.ndarray  # (H,W,3) uint8
    depth_mm: np.ndarray  # (H,W) uint16, 0 = invalid
    params: CameraParams
    source_reality: RealityType = RealityType.PHYSICAL

    def __post_init__(self) -> None:
        h, w = self.depth_mm.shape
        if self.rgb.shape[:2] != (h, w):
            raise DimensionMismatch(
                f"rgb {self.rgb.shape[:2]} vs depth {(h, w)}"
            )
        if (w, h) != (self.params.width, self.params.height):
            raise DimensionMismatch(
                f"images are {w}x{h} but camera says {self.params.width}x{self.params.height}"
            )


def _nearest_indices(src: int, dst: int) -> np.ndarray:
    # Pixel-center mapping; never interpolates, so invalid zeros stay intact.
    return np.minimum((np.floor((np.arange(dst) + 0.5) * src / dst)).astype(np.int64), src - 1)


def downsample_capture(capture: ContextCapture, reduction: float = 0.75) -> ContextCapture:
    """Shrink a capture by the given reduction fraction (0.75 -> quarter size).

    RGB is area-averaged; depth is nearest-neighbor so the invalid value 0 is
    never blended into real ranges.  Intrinsics rescale with the exact pixel
    ratio, keeping reprojection consistent.
    """
    if not (0.0 <= reduction < 1.0):
        raise DegenerateSize(f"reduction must be in [0,1): {reduction}")
    if reduction == 0.0:
        return capture
    keep = 1.0 - reduction
    w, h = capture.params.width, capture.params.height
    new_w = int(round(w * keep))
    new_h = int(round(h * keep))
    if new_w < 1 or new_h < 1:
        raise DegenerateSize(f"{w}x{h} reduced by {reduction} collapses to {new_w}x{new_h}")

    rgb_img = Image.fromarray(capture.rgb, mode="RGB").resize((new_w, new_h), Image.BOX)
    rgb = np.asarray(rgb_img, dtype=np.uint8)

    yi = _nearest_indices(h, new_h)
    xi = _nearest_indices(w, new_w)
    depth = capture.depth_mm[np.ix_(yi, xi)]

    return ContextCapture(
        rgb=rgb,
        depth_mm=depth,
        params=capture.params.rescaled(new_w, new_h),
        source_reality=capture.source_reality,
    )
