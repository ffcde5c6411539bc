"""Rebuild a record's 3D context from its logged captures."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from xract.context3d.camera import CameraParams
from xract.context3d.cloud import ContextCloud, backproject, merge_clouds
from xract.context3d.glb import encode_glb
from xract.context3d.images import ContextCapture, decode_depth_png, decode_rgb_png
from xract.uad.records import ActionRecord, AssetKind, AssetRef
from xract.uad.store import ASSETS_DIR, SessionStore, asset_filename, sha256_hex

#: Suffix convention tying the three files of one capture together.
CAPTURE_ROLES = ("rgb", "depth", "cam")

_GROUP_RE = re.compile(r"_c(\d+)-(rgb|depth|cam)\.")

DEFAULT_STRIDE = 2
DEFAULT_VOXEL = 0.02


def capture_label(group: int, role: str) -> str:
    return f"c{group}-{role}"


def parse_capture_group(path: str) -> tuple[int, str] | None:
    m = _GROUP_RE.search(path)
    if m is None:
        return None
    return int(m.group(1)), m.group(2)


@dataclass
class ReconstructionResult:
    record: ActionRecord
    new_assets: dict[str, bytes] = field(default_factory=dict)
    diagnostics: list[str] = field(default_factory=list)
    changed: bool = False


def load_capture(store: SessionStore, record: ActionRecord, group: int) -> ContextCapture:
    refs = {
        parse_capture_group(a.path)[1]: a
        for a in record.context
        if parse_capture_group(a.path) and parse_capture_group(a.path)[0] == group
    }
    missing = [r for r in CAPTURE_ROLES if r not in refs]
    if missing:
        raise KeyError(f"capture c{group} missing roles {missing}")
    rgb = decode_rgb_png(store.asset_bytes(refs["rgb"]))
    depth = decode_depth_png(store.asset_bytes(refs["depth"]))
    params = CameraParams.from_json_bytes(store.asset_bytes(refs["cam"]))
    return ContextCapture(rgb=rgb, depth_mm=depth, params=params, source_reality=record.context_type)


def capture_groups(record: ActionRecord) -> list[int]:
    groups = set()
    for a in record.context:
        parsed = parse_capture_group(a.path)
        if parsed is not None:
            groups.add(parsed[0])
    return sorted(groups)


def reconstruct_context(
    record: ActionRecord,
    store: SessionStore,
    stride: int = DEFAULT_STRIDE,
    voxel: float = DEFAULT_VOXEL,
) -> ReconstructionResult:
    """Back-project all of a record's captures into one merged cloud asset.

    Original captures are retained; partial capture failures degrade to
    diagnostics.  A record that already carries a cloud, or has no captures,
    is returned unchanged.
    """
    result = ReconstructionResult(record=record)
    if any(a.kind is AssetKind.CONTEXT_CLOUD for a in record.context):
        result.diagnostics.append(f"{record.id}: context cloud already present")
        return result
    groups = capture_groups(record)
    if not groups:
        result.diagnostics.append(f"{record.id}: no context captures, nothing to do")
        return result

    clouds: list[ContextCloud] = []
    for g in groups:
        try:
            capture = load_capture(store, record, g)
            clouds.append(backproject(capture, stride=stride, source_action_id=record.id))
        except Exception as e:
            result.diagnostics.append(f"{record.id}: capture c{g} failed: {e}")
    if not clouds:
        result.diagnostics.append(f"{record.id}: all captures failed, no cloud written")
        return result

    merged = merge_clouds(clouds, voxel=voxel)
    data = encode_glb(merged)
    digest = sha256_hex(data)
    rel = f"{ASSETS_DIR}/{asset_filename(digest, f'{record.id}-cloud', '.glb')}"
    ref = AssetRef(kind=AssetKind.CONTEXT_CLOUD, path=rel, sha256=digest)
    result.new_assets[rel] = data
    result.record = record.replace(context=record.context + (ref,))
    result.changed = True
    return result
