"""Scripted multi-user scenario presets and the session generator.

Presets are data files (JSON) interpreted here: each user template is a list
of step entries that expand into logged action records, complete with
referent models/snapshots, RGB-D context captures, and audio-transcript
fixtures for the mock pipelines.  Output is deterministic in the seed; a
ground-truth manifest is produced alongside and re-checked against the
emitted directory before returning.
"""

from __future__ import annotations

import io
import json
import math
import wave
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from xract.context3d.camera import CameraParams, look_at
from xract.context3d.cloud import backproject
from xract.context3d.glb import encode_glb
from xract.context3d.images import encode_depth_png, encode_rgb_png
from xract.context3d.reconstruct import capture_label
from xract.context3d.cloud import ContextCloud
from xract.errors import XractError
from xract.ingest import compute_alias_order
from xract.jsonio import dumps_pretty
from xract.simulator.scene import Scene, render_capture
from xract.uad.records import (
    ActionType,
    AssetKind,
    RealityType,
    Transform,
    Virtuality,
    format_classification,
)
from xract.uad.recorder import AssetPayload, RecorderHandle
from xract.uad.store import SessionStore, read_session, validate_store
from xract.uad.times import TimeDelta, Timestamp

PRESET_NAMES = (
    "a1_vr_game",
    "a2_mr_selection",
    "a3_ar_markers",
    "a4_ar_collab",
    "a5_ar_inspection",
)

_PRESET_DIR = Path(__file__).parent / "presets"

#: Residual bound enforced on every rendered capture at generation time.
GENERATION_RESIDUAL = 5e-5


class BadScenario(XractError):
    pass


@dataclass(frozen=True)
class ScenarioSpec:
    """Fully determines one synthetic session: preset + seed (+ user count)."""

    preset: str
    seed: int = 42
    users: Optional[int] = None
    script: Optional[dict[str, Any]] = None  # inline preset data for "custom"

    def __post_init__(self) -> None:
        if self.preset == "custom":
            if not self.script:
                raise BadScenario("custom preset requires inline script data")
        elif self.preset not in PRESET_NAMES:
            raise BadScenario(f"unknown preset {self.preset!r}; use one of {PRESET_NAMES}")
        if self.users is not None and self.users < 1:
            raise BadScenario("users must be >= 1")

    @classmethod
    def from_json_dict(cls, d: dict[str, Any]) -> "ScenarioSpec":
        return cls(
            preset=d["preset"],
            seed=int(d.get("seed", 42)),
            users=d.get("users"),
            script=d.get("script"),
        )

    def to_json_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"preset": self.preset, "seed": self.seed}
        if self.users is not None:
            out["users"] = self.users
        if self.script is not None:
            out["script"] = self.script
        return out


def load_preset(name: str) -> dict[str, Any]:
    path = _PRESET_DIR / f"{name}.json"
    if not path.exists():
        raise BadScenario(f"no preset data file for {name!r}")
    return json.loads(path.read_text(encoding="utf-8"))


def _wav_bytes(text: str) -> bytes:
    """Tiny deterministic mono WAV derived from the transcript text."""
    h = 2166136261
    for ch in text.encode("utf-8"):
        h = (h ^ ch) * 16777619 % (1 << 32)
    freq = 220 + h % 440
    rate, n = 8000, 800
    t = np.arange(n) / rate
    samples = (np.sin(2 * math.pi * freq * t) * 12000).astype("<i2")
    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(rate)
        w.writeframes(samples.tobytes())
    return buf.getvalue()


def _model_points(scene: Scene, name: str, fallback_center, rng: np.random.RandomState) -> ContextCloud:
    try:
        prim = scene.find(name)
        pts = prim.sample_surface(300, rng)
        color = prim.color
    except XractError:
        center = np.asarray(fallback_center, dtype=np.float64)
        pts = center + rng.uniform(-0.15, 0.15, (300, 3))
        color = (180, 180, 190)
    colors = np.tile(np.asarray(color, np.uint8), (len(pts), 1))
    return ContextCloud(points=pts.astype(np.float32), colors=colors)


def _jittered(pos, jitter: float, rng: np.random.RandomState, shift_x: float) -> tuple[float, float, float]:
    dx = rng.uniform(-jitter, jitter) if jitter else 0.0
    dz = rng.uniform(-jitter, jitter) if jitter else 0.0
    return (float(pos[0]) + shift_x + dx, float(pos[1]), float(pos[2]) + dz)


def _path_yaw(frm, to) -> float:
    return math.degrees(math.atan2(to[0] - frm[0], to[2] - frm[2]))


def _sample_locations(
    step: dict[str, Any], duration_ms: int, rng: np.random.RandomState, shift_x: float
) -> list[Transform]:
    jitter = float(step.get("jitter", 0.0))
    if step.get("path"):
        frm, to = step["path"]["from"], step["path"]["to"]
        sample_ms = int(step.get("sampleMs", 100))
        n = duration_ms // sample_ms + 1
        yaw = _path_yaw(frm, to)
        out = []
        for i in range(n):
            f = i / (n - 1) if n > 1 else 0.0
            base = [frm[k] + f * (to[k] - frm[k]) for k in range(3)]
            out.append(Transform(pos=_jittered(base, jitter, rng, shift_x), rot=(0.0, yaw, 0.0)))
        return out
    pos = step["pos"]
    rot = tuple(step.get("rot", (0.0, 0.0, 0.0)))
    if step.get("type") == "Continuous":
        sample_ms = int(step.get("sampleMs", 100))
        n = duration_ms // sample_ms + 1
        return [Transform(pos=_jittered(pos, jitter, rng, shift_x), rot=rot) for _ in range(n)]
    return [Transform(pos=_jittered(pos, jitter, rng, shift_x), rot=rot)]


def _expand_steps(script: list[dict[str, Any]], shift_ms: int) -> list[dict[str, Any]]:
    out = []
    for step in script:
        repeat = int(step.get("repeat", 1))
        every = int(step.get("every", 0))
        cycle = (step.get("referent") or {}).get("cycle")
        for i in range(repeat):
            inst = dict(step)
            inst["at"] = int(step["at"]) + shift_ms + i * every
            if step.get("referent"):
                ref = dict(step["referent"])
                ref.pop("cycle", None)
                if cycle:
                    ref["object"] = cycle[i % len(cycle)]
                inst["referent"] = ref
            if i > 0:
                inst.pop("captures", None)  # captures only on the first instance
            out.append(inst)
    return out


def generate_session(
    spec: ScenarioSpec, out_dir: Union[str, Path]
) -> tuple[SessionStore, dict[str, Any]]:
    """Emit a recorded (pre-ingest) session directory plus its ground-truth
    manifest.  Identical spec+seed produces byte-identical output."""
    data = spec.script if spec.preset == "custom" else load_preset(spec.preset)
    rng = np.random.RandomState(spec.seed)
    scene = Scene.from_json(data["scene"])
    cam_defaults = data["camera"]
    base = Timestamp.parse(data["baseTime"])
    ctx_reality = RealityType(data.get("contextReality", "Physical"))
    virtuality = Virtuality(data["virtuality"])

    templates = data["users"]
    n_users = spec.users or len(templates)
    out_dir = Path(out_dir)
    session_id = f"{data.get('preset', spec.preset)}-seed{spec.seed}"
    recorder = RecorderHandle(
        out_dir,
        app_name=data["appName"],
        virtuality=virtuality,
        session_id=session_id,
        asynchronous=False,
    )

    manifest_users: dict[str, dict[str, Any]] = {}
    manifest_captures: list[dict[str, Any]] = []
    original_order: list[str] = []
    firsts: list[tuple[str, Optional[Timestamp]]] = []
    max_end = base

    for k in range(n_users):
        tpl = templates[k % len(templates)]
        rep = k // len(templates)
        original = tpl["originalId"] if rep == 0 else f"{tpl['originalId']}-{rep + 1}"
        shift_ms = rep * int(data.get("extraUserOffsetMs", 1500))
        shift_x = rep * float(data.get("extraUserShiftX", 0.3))
        original_order.append(original)

        instances = []
        first_start: Optional[Timestamp] = None
        for step in _expand_steps(tpl["script"], shift_ms):
            action_type = ActionType(step["type"])
            duration_ms = int(step.get("duration", 0))
            start = base + TimeDelta.from_seconds(step["at"] / 1000.0)
            duration = TimeDelta.from_seconds(duration_ms / 1000.0)
            locations = _sample_locations(step, duration_ms, rng, shift_x)

            referent_payloads: list[AssetPayload] = []
            referent_name = ""
            referent_reality = RealityType.VIRTUAL
            referent_location: list[Transform] = []
            referent_key: Optional[str] = None
            expected_referent: Optional[str] = None
            ref = step.get("referent")
            if ref:
                referent_reality = RealityType(ref.get("reality", "Virtual"))
                if ref.get("location"):
                    loc = ref["location"]
                    referent_location = [Transform(pos=tuple(loc[0]), rot=tuple(loc[1]))]
                if referent_reality is RealityType.VIRTUAL:
                    referent_name = ref["object"]
                    referent_key = ref["object"]
                    expected_referent = ref["object"]
                    if ref.get("model"):
                        center = referent_location[0].pos if referent_location else locations[0].pos
                        cloud = _model_points(scene, ref["object"], center, rng)
                        referent_payloads.append(
                            AssetPayload(
                                kind=AssetKind.REFERENT_MODEL,
                                label=f"{ref['object']}-model",
                                data=encode_glb(cloud),
                            )
                        )
                else:
                    label = ref["label"]
                    conf = float(ref.get("confidence", 0.9))
                    referent_key = label
                    expected_referent = format_classification(label, conf)
                    if ref.get("image", True):
                        target = referent_location[0].pos if referent_location else locations[0].pos
                        eye = (target[0] + 0.35, target[1] + 0.25, target[2] - 1.2)
                        snap_params = CameraParams(
                            fx=70.0, fy=70.0, cx=48.0, cy=27.0, width=96, height=54,
                            cam_to_world=look_at(eye, target),
                        )
                        snap = render_capture(scene, snap_params, referent_reality)
                        fixture = dumps_pretty({"label": label, "confidence": conf}).encode("utf-8")
                        referent_payloads.append(
                            AssetPayload(
                                kind=AssetKind.REFERENT_IMAGE,
                                label=f"{label}-snapshot",
                                data=encode_rgb_png(snap.rgb),
                                fixtures={".expected.json": fixture},
                            )
                        )

            context_payloads: list[AssetPayload] = []
            transcript = step.get("transcript")
            if transcript is not None:
                context_payloads.append(
                    AssetPayload(
                        kind=AssetKind.AUDIO_CAPTURE,
                        label="memo",
                        data=_wav_bytes(transcript),
                        fixtures={".expected.txt": transcript.encode("utf-8")},
                    )
                )
            capture_cams: list[CameraParams] = []
            for g, cap in enumerate(step.get("captures", [])):
                params = CameraParams(
                    fx=float(cam_defaults["fx"]),
                    fy=float(cam_defaults["fy"]),
                    cx=float(cam_defaults["cx"]),
                    cy=float(cam_defaults["cy"]),
                    width=int(cam_defaults["width"]),
                    height=int(cam_defaults["height"]),
                    cam_to_world=look_at(cap["eye"], cap["look"]),
                )
                capture = render_capture(scene, params, ctx_reality)
                residual = float(
                    np.max(scene.surface_distance(backproject(capture, stride=4).points))
                ) if capture.depth_mm.any() else 0.0
                if residual > GENERATION_RESIDUAL:
                    raise BadScenario(
                        f"capture at {cap['eye']} off the analytic surfaces ({residual:.2e} m); "
                        "preset geometry must stay fronto-parallel on the mm grid"
                    )
                capture_cams.append(params)
                context_payloads.extend(
                    [
                        AssetPayload(AssetKind.CONTEXT_RGB, capture_label(g, "rgb"), encode_rgb_png(capture.rgb)),
                        AssetPayload(AssetKind.CONTEXT_DEPTH, capture_label(g, "depth"), encode_depth_png(capture.depth_mm)),
                        AssetPayload(
                            AssetKind.CAMERA_PARAMS,
                            capture_label(g, "cam"),
                            dumps_pretty(params.to_json_dict()).encode("utf-8"),
                        ),
                    ]
                )

            record_id = recorder.log(
                name=step["action"],
                action_type=action_type,
                intent=step["intent"],
                user=original,
                location=locations,
                trigger_source=step["trigger"],
                start_time=start,
                duration=duration,
                referent=referent_payloads,
                referent_name=referent_name,
                referent_type=referent_reality,
                referent_location=referent_location,
                context=context_payloads,
                context_type=ctx_reality,
            )
            end = start + duration
            if max_end < end:
                max_end = end
            if first_start is None or start < first_start:
                first_start = start
            for g, params in enumerate(capture_cams):
                manifest_captures.append(
                    {"recordId": record_id, "originalUser": original, "group": g, "camera": params.to_json_dict()}
                )
            instances.append(
                {
                    "id": record_id,
                    "name": step["action"],
                    "type": step["type"],
                    "start": start.format(),
                    "durationMs": duration_ms,
                    "locationCount": len(locations),
                    "referentKey": referent_key,
                    "expectedReferentName": expected_referent,
                    "referentReality": referent_reality.value if ref else None,
                    "captureGroups": len(capture_cams),
                    "transcript": transcript,
                    "postDefined": step["intent"] == "PostDefined",
                }
            )
        firsts.append((original, first_start))
        manifest_users[original] = {"instances": instances}

    # Pad the recording end so trailing instant actions stay strictly inside
    # the half-open session range used by views and bins.
    max_end = max_end + TimeDelta.from_seconds(1.0)
    recorder.finalize(recording_start=base, recording_end=max_end)

    alias_by_original = compute_alias_order(firsts)
    users_manifest: dict[str, dict[str, Any]] = {}
    total_samples = 0
    total_records = 0
    for original in original_order:
        alias = alias_by_original[original]
        instances = manifest_users[original]["instances"]
        by_action: Counter = Counter()
        by_referent: Counter = Counter()
        by_action_referent: Counter = Counter()
        samples: Counter = Counter()
        for inst in instances:
            by_action[inst["name"]] += 1
            samples[inst["name"]] += inst["locationCount"]
            if inst["referentKey"]:
                by_referent[inst["referentKey"]] += 1
                by_action_referent[f"{inst['name']}|{inst['referentKey']}"] += 1
        total_samples += sum(samples.values())
        total_records += len(instances)
        users_manifest[alias] = {
            "originalId": original,
            "instances": instances,
            "counts": {
                "byAction": dict(sorted(by_action.items())),
                "byReferent": dict(sorted(by_referent.items())),
                "byActionReferent": dict(sorted(by_action_referent.items())),
            },
            "locationSamples": dict(sorted(samples.items())),
        }
    users_manifest = dict(sorted(users_manifest.items(), key=lambda kv: (len(kv[0]), kv[0])))

    manifest = {
        "preset": spec.preset,
        "seed": spec.seed,
        "sessionId": session_id,
        "appName": data["appName"],
        "virtuality": virtuality.value,
        "recordingStart": base.format(),
        "recordingEnd": max_end.format(),
        "scene": data["scene"],
        "originalUsers": original_order,
        "aliasByOriginal": alias_by_original,
        "users": users_manifest,
        "captures": manifest_captures,
        "totals": {
            "records": total_records,
            "locationSamples": total_samples,
            "captures": len(manifest_captures),
            "speak": sum(
                1
                for u in users_manifest.values()
                for i in u["instances"]
                if i["transcript"] is not None
            ),
        },
    }

    store = read_session(out_dir)
    _check_manifest(store, manifest)
    return store, manifest


def _check_manifest(store: SessionStore, manifest: dict[str, Any]) -> None:
    """Generation-time consistency: the emitted directory must agree with the
    manifest, record for record."""
    report = validate_store(store)
    if not report.ok:
        raise BadScenario(f"emitted session fails validation: {report.violations[:3]}")
    by_user: dict[str, int] = {u: len(rs) for u, rs in store.users.items()}
    for alias, udata in manifest["users"].items():
        original = udata["originalId"]
        if by_user.get(original) != len(udata["instances"]):
            raise BadScenario(
                f"manifest count mismatch for {original}: "
                f"{by_user.get(original)} vs {len(udata['instances'])}"
            )
        recs = {r.id: r for r in store.users[original]}
        for inst in udata["instances"]:
            r = recs.get(inst["id"])
            if r is None or r.name != inst["name"] or len(r.location) != inst["locationCount"]:
                raise BadScenario(f"manifest instance mismatch for {inst['id']}")
    if store.record_count() != manifest["totals"]["records"]:
        raise BadScenario("manifest total mismatch")


def manifest_path_for(out_dir: Union[str, Path]) -> Path:
    return Path(str(out_dir).rstrip("/") + ".manifest.json")


def write_manifest(manifest: dict[str, Any], path: Union[str, Path]) -> None:
    Path(path).write_text(dumps_pretty(manifest), encoding="utf-8")
