"""RGB-D back-projection, point-cloud merging, and GLB encoding."""

from xract.context3d.camera import BadCameraParams, CameraParams, look_at
from xract.context3d.cloud import (
    ContextCloud,
    backproject,
    backproject_points,
    empty_cloud,
    merge_clouds,
    project_points,
)
from xract.context3d.glb import (
    MalformedGlb,
    UnsupportedPrimitive,
    check_glb_container,
    decode_glb,
    encode_glb,
)
from xract.context3d.images import (
    ContextCapture,
    DegenerateSize,
    DimensionMismatch,
    decode_depth_png,
    decode_rgb_png,
    downsample_capture,
    encode_depth_png,
    encode_rgb_png,
)
from xract.context3d.reconstruct import (
    ReconstructionResult,
    capture_label,
    reconstruct_context,
)

__all__ = [
    "BadCameraParams",
    "CameraParams",
    "ContextCapture",
    "ContextCloud",
    "DegenerateSize",
    "DimensionMismatch",
    "MalformedGlb",
    "ReconstructionResult",
    "UnsupportedPrimitive",
    "backproject",
    "backproject_points",
    "capture_label",
    "check_glb_container",
    "decode_depth_png",
    "decode_glb",
    "decode_rgb_png",
    "downsample_capture",
    "empty_cloud",
    "encode_depth_png",
    "encode_glb",
    "encode_rgb_png",
    "look_at",
    "merge_clouds",
    "project_points",
    "reconstruct_context",
]
