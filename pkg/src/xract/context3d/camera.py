"""Pinhole camera parameters.

Camera frame is +X right, +Y down, +Z forward; world frame is right-handed
Y-up.  ``cam_to_world`` is a rigid 4x4 (row-major in JSON), translation in
meters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Union

import numpy as np

from xract.errors import XractError


class BadCameraParams(XractError):
    pass


#: Proper rotation (180 degrees about X) mapping a Y-down world to Y-up.
Y_DOWN_TO_Y_UP = np.diag([1.0, -1.0, -1.0, 1.0])


@dataclass(frozen=True)
class CameraParams:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    cam_to_world: np.ndarray  # (4,4) float64

    def __post_init__(self) -> None:
        m = np.asarray(self.cam_to_world, dtype=np.float64).reshape(4, 4)
        object.__setattr__(self, "cam_to_world", m)
        if self.fx <= 0 or self.fy <= 0:
            raise BadCameraParams(f"focal lengths must be positive: fx={self.fx} fy={self.fy}")
        if not (0 <= self.cx < self.width) or not (0 <= self.cy < self.height):
            raise BadCameraParams(
                f"principal point ({self.cx},{self.cy}) outside {self.width}x{self.height}"
            )
        r = m[:3, :3]
        if np.max(np.abs(r.T @ r - np.eye(3))) > 1e-6:
            raise BadCameraParams("rotation block is not orthonormal within 1e-6")
        if np.max(np.abs(m[3] - np.array([0.0, 0.0, 0.0, 1.0]))) > 1e-9:
            raise BadCameraParams("last row must be [0,0,0,1]")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CameraParams):
            return NotImplemented
        return (
            (self.fx, self.fy, self.cx, self.cy, self.width, self.height)
            == (other.fx, other.fy, other.cx, other.cy, other.width, other.height)
            and np.array_equal(self.cam_to_world, other.cam_to_world)
        )

    @property
    def rotation(self) -> np.ndarray:
        return self.cam_to_world[:3, :3]

    @property
    def position(self) -> np.ndarray:
        return self.cam_to_world[:3, 3]

    def world_to_cam(self) -> np.ndarray:
        r = self.rotation
        t = self.position
        inv = np.eye(4)
        inv[:3, :3] = r.T
        inv[:3, 3] = -r.T @ t
        return inv

    def rescaled(self, new_width: int, new_height: int) -> "CameraParams":
        sx = new_width / self.width
        sy = new_height / self.height
        return CameraParams(
            fx=self.fx * sx,
            fy=self.fy * sy,
            cx=self.cx * sx,
            cy=self.cy * sy,
            width=new_width,
            height=new_height,
            cam_to_world=self.cam_to_world.copy(),
        )

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
            "width": self.width,
            "height": self.height,
            "cam_to_world": [float(v) for v in self.cam_to_world.reshape(-1)],
        }

    @classmethod
    def from_json_dict(cls, d: dict[str, Any], world_y_down: bool = False) -> "CameraParams":
        """``world_y_down`` is the import shim for producers whose world frame
        is Y-down: poses are rotated 180 degrees about X into the Y-up frame
        used everywhere here."""
        pose = np.array(d["cam_to_world"], dtype=np.float64).reshape(4, 4)
        if world_y_down:
            pose = Y_DOWN_TO_Y_UP @ pose
        return cls(
            fx=float(d["fx"]),
            fy=float(d["fy"]),
            cx=float(d["cx"]),
            cy=float(d["cy"]),
            width=int(d["width"]),
            height=int(d["height"]),
            cam_to_world=pose,
        )

    @classmethod
    def from_json_bytes(cls, data: Union[bytes, str]) -> "CameraParams":
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        return cls.from_json_dict(json.loads(data))


def look_at(eye, target, world_up=(0.0, 1.0, 0.0)) -> np.ndarray:
    """cam_to_world for a +Y-down camera at ``eye`` looking at ``target``.

    Proper rotation (det +1): image-down is aligned with -world_up as closely
    as the view direction allows.
    """
    eye = np.asarray(eye, dtype=np.float64)
    fwd = np.asarray(target, dtype=np.float64) - eye
    norm = np.linalg.norm(fwd)
    if norm == 0:
        raise BadCameraParams("eye and target coincide")
    fwd = fwd / norm
    down = -np.asarray(world_up, dtype=np.float64)
    right = np.cross(down, fwd)
    rnorm = np.linalg.norm(right)
    if rnorm < 1e-12:
        # Looking straight up/down: pick a stable right axis.
        right = np.cross(np.array([0.0, 0.0, 1.0]), fwd)
        rnorm = np.linalg.norm(right)
    right = right / rnorm
    down = np.cross(fwd, right)
    m = np.eye(4)
    m[:3, 0] = right
    m[:3, 1] = down
    m[:3, 2] = fwd
    m[:3, 3] = eye
    return m
