"""Logging-overhead microbenchmark.

Measures the recorder's log call in three configurations (bare record,
record + virtual-context capture as a PNG pair + camera, record + referent
model GLB) on both the synchronous lane and the deferred lane where only the
enqueue cost is perceived.  Protocol: K calls per run, R independent runs,
statistics aggregated across all calls and per run.

The scratch directory is RAM-backed when available; the report records which,
because the storage medium dominates absolute numbers.
"""

from __future__ import annotations

import os
import platform
import shutil
import statistics
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from xract.context3d.cloud import ContextCloud
from xract.context3d.glb import encode_glb
from xract.context3d.images import encode_depth_png, encode_rgb_png
from xract.errors import XractError
from xract.jsonio import dumps_pretty
from xract.uad.records import ActionType, AssetKind, RealityType, Transform, Virtuality
from xract.uad.recorder import AssetPayload, RecorderHandle
from xract.uad.times import TimeDelta, Timestamp

MODES = ("base", "virtualContext", "referent")
LANES = ("sync", "async")

DEFAULT_IMAGE_SIZE = (480, 270)
DEFAULT_REFERENT_POINTS = 400_000


@dataclass
class ModeStats:
    mean_ms: float
    median_ms: float
    p95_ms: float
    per_run_means: list[float]

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "meanMs": self.mean_ms,
            "medianMs": self.median_ms,
            "p95Ms": self.p95_ms,
            "perRunMeans": list(self.per_run_means),
        }


@dataclass
class BenchReport:
    iterations: int
    runs: int
    stats: dict[str, ModeStats] = field(default_factory=dict)  # "<mode>.<lane>"
    environment: dict[str, Any] = field(default_factory=dict)

    def get(self, mode: str, lane: str) -> ModeStats:
        return self.stats[f"{mode}.{lane}"]

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "iterations": self.iterations,
            "runs": self.runs,
            "stats": {k: v.to_json_dict() for k, v in self.stats.items()},
            "environment": self.environment,
        }

    def render_table(self) -> str:
        header = f"{'Configuration':<22}{'Sync mean':>12}{'Async mean':>12}{'Sync p95':>12}"
        lines = [
            f"Log overhead, ms ({self.iterations} calls x {self.runs} runs, "
            f"{self.environment.get('scratchKind', '?')} scratch)",
            header,
            "-" * len(header),
        ]
        labels = {"base": "Log (base)", "virtualContext": "Log+VC", "referent": "Log+R"}
        for mode in MODES:
            sync = self.get(mode, "sync")
            async_ = self.get(mode, "async")
            lines.append(
                f"{labels[mode]:<22}{sync.mean_ms:>12.3f}{async_.mean_ms:>12.3f}{sync.p95_ms:>12.3f}"
            )
        return "\n".join(lines)


def pick_scratch_dir() -> tuple[Path, str]:
    shm = Path("/dev/shm")
    if shm.is_dir() and os.access(shm, os.W_OK):
        return Path(tempfile.mkdtemp(prefix="xract-bench-", dir=shm)), "ram"
    return Path(tempfile.mkdtemp(prefix="xract-bench-")), "disk"


def _vc_payloads(rgb_base: np.ndarray, depth_base: np.ndarray, cam_json: bytes, i: int):
    def render_rgb() -> bytes:
        arr = rgb_base.copy()
        arr[0, 0] = (i & 255, (i >> 8) & 255, 1)
        return encode_rgb_png(arr)

    def render_depth() -> bytes:
        arr = depth_base.copy()
        arr[0, 0] = 1 + (i % 60000)
        return encode_depth_png(arr)

    return [
        AssetPayload(AssetKind.CONTEXT_RGB, "c0-rgb", render_rgb),
        AssetPayload(AssetKind.CONTEXT_DEPTH, "c0-depth", render_depth),
        AssetPayload(AssetKind.CAMERA_PARAMS, "c0-cam", cam_json),
    ]


def _referent_payload(points: np.ndarray, colors_base: np.ndarray, i: int):
    def render() -> bytes:
        colors = colors_base.copy()
        colors[0] = (i & 255, (i >> 8) & 255, 1)
        return encode_glb(ContextCloud(points=points, colors=colors))

    return [AssetPayload(AssetKind.REFERENT_MODEL, "bench-model", render)]


def bench_log(
    iterations: int = 100,
    runs: int = 10,
    referent_points: int = DEFAULT_REFERENT_POINTS,
    image_size: tuple[int, int] = DEFAULT_IMAGE_SIZE,
    scratch: Optional[Path] = None,
    progress: Optional[Callable[[str], None]] = None,
) -> BenchReport:
    """Measure log_action overhead in all mode/lane combinations.

    Each run gets a fresh recorder and session directory; payload content is
    perturbed per call so asset writes are never deduplicated away.
    """
    if iterations < 10:
        raise XractError(f"need at least 10 iterations, got {iterations}")
    if runs < 1:
        raise XractError(f"need at least 1 run, got {runs}")

    own_scratch = scratch is None
    scratch_kind = "given"
    if own_scratch:
        scratch, scratch_kind = pick_scratch_dir()

    w, h = image_size
    rng = np.random.RandomState(7)
    # Structured content like a real capture (smooth regions), not noise:
    # PNG cost on white noise is wildly unrepresentative.
    xs = np.linspace(0, 255, w, dtype=np.float64)
    ys = np.linspace(0, 255, h, dtype=np.float64)
    rgb_base = np.stack(
        [np.add.outer(ys * 0.5, xs * 0.5), np.tile(xs, (h, 1)), np.tile(ys[:, None], (1, w))],
        axis=2,
    ).astype(np.uint8)
    rgb_base[h // 3 : h // 2, w // 4 : w // 2] = (200, 60, 40)
    depth_base = (2000 + np.add.outer(ys * 4, xs * 2)).astype(np.uint16)
    cam_json = dumps_pretty(
        {"fx": 410.0, "fy": 410.0, "cx": w / 2, "cy": h / 2, "width": w, "height": h,
         "cam_to_world": [1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1]}
    ).encode("utf-8")
    points = (rng.uniform(-3, 3, (referent_points, 3))).astype(np.float32)
    colors_base = rng.randint(0, 255, (referent_points, 3)).astype(np.uint8)

    base_time = Timestamp.parse("240801:090000:000")
    samples: dict[str, list[list[float]]] = {f"{m}.{l}": [] for m in MODES for l in LANES}

    try:
        for run in range(runs):
            for lane in LANES:
                for mode in MODES:
                    run_dir = Path(scratch) / f"run{run}_{lane}_{mode}"
                    recorder = RecorderHandle(
                        run_dir,
                        app_name="bench",
                        virtuality=Virtuality.VR,
                        asynchronous=(lane == "async"),
                    )
                    durations: list[float] = []
                    for i in range(iterations):
                        referent: list[AssetPayload] = []
                        context: list[AssetPayload] = []
                        if mode == "virtualContext":
                            context = _vc_payloads(rgb_base, depth_base, cam_json, i)
                        elif mode == "referent":
                            referent = _referent_payload(points, colors_base, i)
                        t0 = time.perf_counter()
                        recorder.log(
                            name="BenchAction",
                            action_type=ActionType.DISCRETE,
                            intent="Measure logging overhead",
                            user="bench-user",
                            location=[Transform(pos=(0.0, 0.0, 0.0))],
                            trigger_source="XRController",
                            start_time=base_time + TimeDelta.from_seconds(i),
                            referent=referent,
                            referent_name="BenchModel" if referent else "",
                            referent_type=RealityType.VIRTUAL,
                            context=context,
                            context_type=RealityType.VIRTUAL,
                        )
                        durations.append((time.perf_counter() - t0) * 1000.0)
                    recorder.finalize()
                    shutil.rmtree(run_dir, ignore_errors=True)
                    samples[f"{mode}.{lane}"].append(durations)
                    if progress:
                        mean = statistics.fmean(durations)
                        progress(f"run {run + 1}/{runs} {mode}.{lane}: mean {mean:.3f} ms")
    finally:
        if own_scratch:
            shutil.rmtree(scratch, ignore_errors=True)

    report = BenchReport(iterations=iterations, runs=runs)
    for key, per_run in samples.items():
        flat = [d for run_samples in per_run for d in run_samples]
        flat_sorted = sorted(flat)
        p95 = flat_sorted[min(len(flat_sorted) - 1, int(round(0.95 * (len(flat_sorted) - 1))))]
        report.stats[key] = ModeStats(
            mean_ms=statistics.fmean(flat),
            median_ms=statistics.median(flat),
            p95_ms=p95,
            per_run_means=[statistics.fmean(r) for r in per_run],
        )
    report.environment = {
        "platform": platform.platform(),
        "python": sys.version.split()[0],
        "scratchKind": scratch_kind,
        "imageSize": f"{w}x{h}",
        "referentPoints": referent_points,
    }
    return report
