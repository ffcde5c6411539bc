"""Analytic scenes and the exact ray-cast renderer.

No rasterization: every depth value is a closed-form ray/primitive
intersection, so rendered captures can serve as a trustworthy geometry oracle
for the reconstruction pipeline.  Depth is the camera-axis coordinate of the
hit in millimeters (0 on miss).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np

from xract.context3d.camera import CameraParams
from xract.context3d.images import ContextCapture
from xract.errors import XractError
from xract.uad.records import RealityType

_INF = np.inf
_EPS = 1e-9

MAX_DEPTH_MM = 65535


class BadScene(XractError):
    pass


@dataclass(frozen=True)
class Plane:
    """Infinite plane or, when extents are given, a finite rectangle."""

    name: str
    point: np.ndarray
    normal: np.ndarray
    color: tuple[int, int, int]
    u_axis: Optional[np.ndarray] = None
    v_axis: Optional[np.ndarray] = None
    half_u: float = 0.0
    half_v: float = 0.0

    def intersect(self, origin: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        denom = dirs @ self.normal
        with np.errstate(divide="ignore", invalid="ignore"):
            t = ((self.point - origin) @ self.normal) / denom
        t = np.where((np.abs(denom) > _EPS) & (t > _EPS), t, _INF)
        if self.u_axis is not None:
            hits = origin + t[:, None] * dirs
            rel = hits - self.point
            inside = (np.abs(rel @ self.u_axis) <= self.half_u + _EPS) & (
                np.abs(rel @ self.v_axis) <= self.half_v + _EPS
            )
            t = np.where(inside, t, _INF)
        return t

    def surface_distance(self, points: np.ndarray) -> np.ndarray:
        return np.abs((points - self.point) @ self.normal)

    def sample_surface(self, n: int, rng: np.random.RandomState) -> np.ndarray:
        hu = self.half_u if self.u_axis is not None else 1.0
        hv = self.half_v if self.v_axis is not None else 1.0
        u = self.u_axis if self.u_axis is not None else _any_perp(self.normal)
        v = self.v_axis if self.v_axis is not None else np.cross(self.normal, u)
        a = rng.uniform(-hu, hu, n)
        b = rng.uniform(-hv, hv, n)
        return self.point + a[:, None] * u + b[:, None] * v


@dataclass(frozen=True)
class Sphere:
    name: str
    center: np.ndarray
    radius: float
    color: tuple[int, int, int]

    def intersect(self, origin: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        oc = origin - self.center
        a = np.sum(dirs * dirs, axis=1)
        b = 2.0 * (dirs @ oc)
        c = oc @ oc - self.radius**2
        disc = b * b - 4 * a * c
        sq = np.sqrt(np.maximum(disc, 0.0))
        t0 = (-b - sq) / (2 * a)
        t1 = (-b + sq) / (2 * a)
        t = np.where(t0 > _EPS, t0, t1)
        return np.where((disc >= 0) & (t > _EPS), t, _INF)

    def surface_distance(self, points: np.ndarray) -> np.ndarray:
        return np.abs(np.linalg.norm(points - self.center, axis=1) - self.radius)

    def sample_surface(self, n: int, rng: np.random.RandomState) -> np.ndarray:
        v = rng.normal(size=(n, 3))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        return self.center + self.radius * v


@dataclass(frozen=True)
class Box:
    """Axis-aligned box given by center and full size."""

    name: str
    center: np.ndarray
    size: np.ndarray
    color: tuple[int, int, int]

    @property
    def half(self) -> np.ndarray:
        return np.asarray(self.size, dtype=np.float64) / 2.0

    def intersect(self, origin: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        lo = self.center - self.half
        hi = self.center + self.half
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / dirs
        t1 = (lo - origin) * inv
        t2 = (hi - origin) * inv
        tnear = np.max(np.minimum(t1, t2), axis=1)
        tfar = np.min(np.maximum(t1, t2), axis=1)
        hit = (tnear <= tfar + _EPS) & (tfar > _EPS)
        t = np.where(tnear > _EPS, tnear, tfar)
        return np.where(hit, t, _INF)

    def surface_distance(self, points: np.ndarray) -> np.ndarray:
        q = np.abs(points - self.center) - self.half
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
        inside = np.minimum(np.max(q, axis=1), 0.0)
        return np.abs(outside + inside)

    def sample_surface(self, n: int, rng: np.random.RandomState) -> np.ndarray:
        h = self.half
        areas = np.array([h[1] * h[2], h[1] * h[2], h[0] * h[2], h[0] * h[2], h[0] * h[1], h[0] * h[1]])
        faces = rng.choice(6, size=n, p=areas / areas.sum())
        pts = rng.uniform(-1.0, 1.0, (n, 3)) * h
        axis = faces // 2
        sign = np.where(faces % 2 == 0, 1.0, -1.0)
        pts[np.arange(n), axis] = sign * h[axis]
        return self.center + pts


Primitive = Any  # Plane | Sphere | Box


def _any_perp(n: np.ndarray) -> np.ndarray:
    ref = np.array([0.0, 1.0, 0.0]) if abs(n[1]) < 0.9 else np.array([1.0, 0.0, 0.0])
    v = np.cross(n, ref)
    return v / np.linalg.norm(v)


def _vec(x: Sequence[float]) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def primitive_from_json(d: dict[str, Any]) -> Primitive:
    kind = d["type"]
    color = tuple(int(c) for c in d.get("color", (200, 200, 200)))
    if kind == "plane":
        u = _vec(d["u_axis"]) if "u_axis" in d else None
        v = _vec(d["v_axis"]) if "v_axis" in d else None
        n = _vec(d["normal"])
        n = n / np.linalg.norm(n)
        return Plane(
            name=d["name"],
            point=_vec(d["point"]),
            normal=n,
            color=color,
            u_axis=u,
            v_axis=v,
            half_u=float(d.get("half_u", 0.0)),
            half_v=float(d.get("half_v", 0.0)),
        )
    if kind == "sphere":
        return Sphere(name=d["name"], center=_vec(d["center"]), radius=float(d["radius"]), color=color)
    if kind == "box":
        return Box(name=d["name"], center=_vec(d["center"]), size=_vec(d["size"]), color=color)
    raise BadScene(f"unknown primitive type {kind!r}")


@dataclass
class Scene:
    primitives: list[Primitive]
    miss_color: tuple[int, int, int] = (0, 0, 0)

    def __post_init__(self) -> None:
        if not self.primitives:
            raise BadScene("scene must contain at least one primitive")
        names = [p.name for p in self.primitives]
        if len(set(names)) != len(names):
            raise BadScene(f"duplicate primitive names: {names}")

    @classmethod
    def from_json(cls, spec: dict[str, Any]) -> "Scene":
        return cls(
            primitives=[primitive_from_json(p) for p in spec["primitives"]],
            miss_color=tuple(int(c) for c in spec.get("missColor", (0, 0, 0))),
        )

    def find(self, name: str) -> Primitive:
        for p in self.primitives:
            if p.name == name:
                return p
        raise BadScene(f"no primitive named {name!r}")

    def raycast(self, origin: np.ndarray, dirs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Nearest intersection parameter and primitive index (-1 = miss)."""
        best_t = np.full(len(dirs), _INF)
        best_i = np.full(len(dirs), -1, dtype=np.int64)
        for i, prim in enumerate(self.primitives):
            t = prim.intersect(origin, dirs)
            closer = t < best_t
            best_t = np.where(closer, t, best_t)
            best_i = np.where(closer, i, best_i)
        return best_t, best_i

    def surface_distance(self, points: np.ndarray) -> np.ndarray:
        """Distance from each point to the nearest primitive surface."""
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        dists = np.stack([p.surface_distance(points) for p in self.primitives])
        return dists.min(axis=0)


def render_capture(
    scene: Scene, params: CameraParams, source_reality: RealityType = RealityType.PHYSICAL
) -> ContextCapture:
    """Ray-cast the scene through a pinhole camera.

    Ray directions carry camera-axis component 1, so the intersection
    parameter is the camera-axis depth directly.
    """
    w, h = params.width, params.height
    vs, us = np.mgrid[0:h, 0:w]
    dirs_cam = np.stack(
        [
            (us.ravel() - params.cx) / params.fx,
            (vs.ravel() - params.cy) / params.fy,
            np.ones(w * h),
        ],
        axis=1,
    )
    dirs_world = dirs_cam @ params.rotation.T
    t, idx = scene.raycast(params.position, dirs_world)

    depth_mm = np.where(np.isfinite(t), np.round(t * 1000.0), 0.0)
    depth_mm = np.where((depth_mm >= 1) & (depth_mm <= MAX_DEPTH_MM), depth_mm, 0.0)

    palette = np.array([p.color for p in scene.primitives] + [scene.miss_color], dtype=np.uint8)
    rgb = palette[np.where(idx >= 0, idx, len(scene.primitives))]
    rgb = np.where(depth_mm[:, None] > 0, rgb, np.asarray(scene.miss_color, dtype=np.uint8))

    return ContextCapture(
        rgb=rgb.reshape(h, w, 3).astype(np.uint8),
        depth_mm=depth_mm.reshape(h, w).astype(np.uint16),
        params=params,
        source_reality=source_reality,
    )
