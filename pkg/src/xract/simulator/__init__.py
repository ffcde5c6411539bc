"""Deterministic synthetic XR sessions with analytic ground truth."""

from xract.simulator.scene import Box, Plane, Scene, Sphere, render_capture
from xract.simulator.scenarios import (
    PRESET_NAMES,
    ScenarioSpec,
    generate_session,
    load_preset,
    manifest_path_for,
    write_manifest,
)

__all__ = [
    "Box",
    "PRESET_NAMES",
    "Plane",
    "ScenarioSpec",
    "Scene",
    "Sphere",
    "generate_session",
    "load_preset",
    "manifest_path_for",
    "render_capture",
    "write_manifest",
]
