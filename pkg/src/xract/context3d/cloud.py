"""Semi-dense colored point clouds from RGB-D captures."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from xract.context3d.camera import CameraParams
from xract.context3d.images import ContextCapture
from xract.errors import XractError


class EmptyMergeInput(XractError):
    pass


@dataclass
class ContextCloud:
    """Points in world meters (float32) with 8-bit RGB."""

    points: np.ndarray  # (N,3) float32
    colors: np.ndarray  # (N,3) uint8
    source_action_id: str = ""

    def __post_init__(self) -> None:
        self.points = np.asarray(self.points, dtype=np.float32).reshape(-1, 3)
        self.colors = np.asarray(self.colors, dtype=np.uint8).reshape(-1, 3)
        if len(self.points) != len(self.colors):
            raise XractError(
                f"point/color count mismatch: {len(self.points)} vs {len(self.colors)}"
            )

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ContextCloud):
            return NotImplemented
        return (
            self.source_action_id == other.source_action_id
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.colors, other.colors)
        )


def empty_cloud(source_action_id: str = "") -> ContextCloud:
    return ContextCloud(
        points=np.zeros((0, 3), np.float32),
        colors=np.zeros((0, 3), np.uint8),
        source_action_id=source_action_id,
    )


def backproject_points(
    us: np.ndarray, vs: np.ndarray, depth_m: np.ndarray, params: CameraParams
) -> np.ndarray:
    """Lift pixel coordinates + metric depth to world points (float64).

    Depth is the camera-axis coordinate: p_cam = (d*(u-cx)/fx, d*(v-cy)/fy, d).
    """
    us = np.asarray(us, dtype=np.float64)
    vs = np.asarray(vs, dtype=np.float64)
    d = np.asarray(depth_m, dtype=np.float64)
    x = d * (us - params.cx) / params.fx
    y = d * (vs - params.cy) / params.fy
    cam = np.stack([x, y, d], axis=-1)
    return cam @ params.rotation.T + params.position


def project_points(world: np.ndarray, params: CameraParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """World points -> (u, v, camera-axis depth). Callers filter depth <= 0."""
    world = np.asarray(world, dtype=np.float64).reshape(-1, 3)
    cam = (world - params.position) @ params.rotation
    z = cam[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = params.fx * cam[:, 0] / z + params.cx
        v = params.fy * cam[:, 1] / z + params.cy
    return u, v, z


def backproject(capture: ContextCapture, stride: int = 2, source_action_id: str = "") -> ContextCloud:
    """Back-project every stride-th pixel with nonzero depth.

    Output point count equals the number of sampled valid-depth pixels,
    exactly.
    """
    if stride < 1:
        raise XractError(f"stride must be >= 1: {stride}")
    depth = capture.depth_mm[::stride, ::stride]
    rgb = capture.rgb[::stride, ::stride]
    h, w = depth.shape
    vs, us = np.mgrid[0:h, 0:w]
    valid = depth > 0
    us = (us[valid] * stride).astype(np.float64)
    vs = (vs[valid] * stride).astype(np.float64)
    d_m = depth[valid].astype(np.float64) / 1000.0
    world = backproject_points(us, vs, d_m, capture.params)
    return ContextCloud(
        points=world.astype(np.float32),
        colors=rgb[valid].astype(np.uint8),
        source_action_id=source_action_id,
    )


def merge_clouds(clouds: list[ContextCloud], voxel: float = 0.02) -> ContextCloud:
    """Union of clouds deduplicated to one point per occupied voxel.

    First writer wins in input order, so merging is deterministic and
    idempotent.
    """
    if voxel <= 0:
        raise XractError(f"voxel size must be positive: {voxel}")
    if not clouds:
        raise EmptyMergeInput("nothing to merge")
    points = np.concatenate([c.points for c in clouds], axis=0)
    colors = np.concatenate([c.colors for c in clouds], axis=0)
    if len(points) == 0:
        return empty_cloud(clouds[0].source_action_id)
    keys = np.floor(points.astype(np.float64) / voxel).astype(np.int64)
    _, first = np.unique(keys, axis=0, return_index=True)
    keep = np.sort(first)
    return ContextCloud(
        points=points[keep],
        colors=colors[keep],
        source_action_id=clouds[0].source_action_id,
    )
