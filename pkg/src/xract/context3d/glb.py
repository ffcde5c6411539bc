"""GLB (binary glTF 2.0) encoding of point clouds.

One mesh, one primitive in POINTS mode, POSITION as float32 and COLOR_0 as
normalized unsigned bytes.  Container rules: ``glTF`` magic, version 2,
declared length equal to file size, chunks 4-byte aligned (JSON padded with
spaces, BIN with zeros).
"""

from __future__ import annotations

import json
import struct

import numpy as np

from xract.context3d.cloud import ContextCloud
from xract.errors import XractError
from xract.jsonio import dumps_compact

GLB_MAGIC = 0x46546C67  # 'glTF'
CHUNK_JSON = 0x4E4F534A  # 'JSON'
CHUNK_BIN = 0x004E4942  # 'BIN\0'

_FLOAT32 = 5126
_UBYTE = 5121
_MODE_POINTS = 0


class MalformedGlb(XractError):
    """Bytes violate the GLB container or reference layout."""


class UnsupportedPrimitive(XractError):
    """GLB decodes but its mesh is not a POINTS primitive."""


def _pad(data: bytes, fill: bytes) -> bytes:
    rem = len(data) % 4
    return data + fill * ((4 - rem) % 4)


def encode_glb(cloud: ContextCloud) -> bytes:
    positions = np.ascontiguousarray(cloud.points, dtype="<f4")
    colors = np.ascontiguousarray(cloud.colors, dtype=np.uint8)
    count = len(positions)
    pos_bytes = positions.tobytes()
    col_bytes = colors.tobytes()
    bin_payload = _pad(pos_bytes + col_bytes, b"\x00")

    pos_accessor: dict = {
        "bufferView": 0,
        "componentType": _FLOAT32,
        "count": count,
        "type": "VEC3",
    }
    if count:
        pos_accessor["min"] = [float(v) for v in positions.min(axis=0)]
        pos_accessor["max"] = [float(v) for v in positions.max(axis=0)]

    doc = {
        "asset": {"version": "2.0", "generator": "xract"},
        "scene": 0,
        "scenes": [{"nodes": [0]}],
        "nodes": [{"mesh": 0, "name": "context"}],
        "meshes": [
            {
                "primitives": [
                    {"attributes": {"POSITION": 0, "COLOR_0": 1}, "mode": _MODE_POINTS}
                ],
                "extras": {"sourceActionId": cloud.source_action_id},
            }
        ],
        "accessors": [
            pos_accessor,
            {
                "bufferView": 1,
                "componentType": _UBYTE,
                "normalized": True,
                "count": count,
                "type": "VEC3",
            },
        ],
        "bufferViews": [
            {"buffer": 0, "byteOffset": 0, "byteLength": len(pos_bytes)},
            {"buffer": 0, "byteOffset": len(pos_bytes), "byteLength": len(col_bytes)},
        ],
        "buffers": [{"byteLength": len(bin_payload)}],
    }
    json_payload = _pad(dumps_compact(doc).encode("utf-8"), b" ")

    total = 12 + 8 + len(json_payload) + 8 + len(bin_payload)
    out = bytearray()
    out += struct.pack("<III", GLB_MAGIC, 2, total)
    out += struct.pack("<II", len(json_payload), CHUNK_JSON)
    out += json_payload
    out += struct.pack("<II", len(bin_payload), CHUNK_BIN)
    out += bin_payload
    return bytes(out)


def _read_chunks(data: bytes) -> list[tuple[int, bytes]]:
    chunks = []
    offset = 12
    while offset < len(data):
        if offset + 8 > len(data):
            raise MalformedGlb("truncated chunk header")
        length, ctype = struct.unpack_from("<II", data, offset)
        offset += 8
        if offset + length > len(data):
            raise MalformedGlb("chunk payload exceeds file")
        chunks.append((ctype, data[offset : offset + length]))
        offset += length
    return chunks


def decode_glb(data: bytes) -> ContextCloud:
    """Decode a point-cloud GLB produced by :func:`encode_glb` (or compatible).

    Raises ``UnsupportedPrimitive`` when the first mesh primitive is not in
    POINTS mode.
    """
    if len(data) < 12:
        raise MalformedGlb("shorter than GLB header")
    magic, version, length = struct.unpack_from("<III", data, 0)
    if magic != GLB_MAGIC:
        raise MalformedGlb("bad magic")
    if version != 2:
        raise MalformedGlb(f"unsupported container version {version}")
    if length != len(data):
        raise MalformedGlb(f"declared length {length} != file size {len(data)}")

    chunks = _read_chunks(data)
    if not chunks or chunks[0][0] != CHUNK_JSON:
        raise MalformedGlb("first chunk is not JSON")
    try:
        doc = json.loads(chunks[0][1].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise MalformedGlb(f"JSON chunk unreadable: {e}") from None
    binary = chunks[1][1] if len(chunks) > 1 and chunks[1][0] == CHUNK_BIN else b""

    meshes = doc.get("meshes") or []
    if not meshes or not meshes[0].get("primitives"):
        raise MalformedGlb("no mesh primitive")
    prim = meshes[0]["primitives"][0]
    if prim.get("mode", 4) != _MODE_POINTS:
        raise UnsupportedPrimitive(f"mesh mode {prim.get('mode', 4)} is not POINTS")

    def read_accessor(index: int, expect_component: int, dtype: str) -> np.ndarray:
        acc = doc["accessors"][index]
        if acc["componentType"] != expect_component:
            raise MalformedGlb(
                f"accessor {index}: componentType {acc['componentType']}, wanted {expect_component}"
            )
        view = doc["bufferViews"][acc["bufferView"]]
        start = view.get("byteOffset", 0) + acc.get("byteOffset", 0)
        n = acc["count"] * 3
        arr = np.frombuffer(binary, dtype=dtype, count=n, offset=start)
        return arr.reshape(acc["count"], 3)

    attrs = prim.get("attributes", {})
    if "POSITION" not in attrs:
        raise MalformedGlb("primitive has no POSITION attribute")
    points = read_accessor(attrs["POSITION"], _FLOAT32, "<f4")
    if "COLOR_0" in attrs:
        colors = read_accessor(attrs["COLOR_0"], _UBYTE, np.uint8)
    else:
        colors = np.zeros((len(points), 3), np.uint8)

    source = ""
    extras = meshes[0].get("extras")
    if isinstance(extras, dict):
        source = str(extras.get("sourceActionId", ""))
    return ContextCloud(points=points.copy(), colors=colors.copy(), source_action_id=source)


def check_glb_container(data: bytes) -> list[str]:
    """Byte-level container-rule check, independent of the decoder.

    Returns a list of violations (empty = conformant): magic, version 2,
    declared length == file size, 4-byte aligned chunks, JSON-first chunk
    order, and a parseable glTF 2.0 asset header.
    """
    problems: list[str] = []
    if len(data) < 12:
        return ["file shorter than 12-byte header"]
    magic, version, length = struct.unpack_from("<III", data, 0)
    if magic != GLB_MAGIC:
        problems.append(f"magic 0x{magic:08X} != glTF")
    if version != 2:
        problems.append(f"version {version} != 2")
    if length != len(data):
        problems.append(f"declared length {length} != file size {len(data)}")
    if len(data) % 4 != 0:
        problems.append("file size not 4-byte aligned")

    offset = 12
    index = 0
    while offset < len(data):
        if offset + 8 > len(data):
            problems.append(f"chunk {index}: truncated header")
            break
        clen, ctype = struct.unpack_from("<II", data, offset)
        if clen % 4 != 0:
            problems.append(f"chunk {index}: length {clen} not 4-byte aligned")
        if offset + 8 + clen > len(data):
            problems.append(f"chunk {index}: payload exceeds file")
            break
        if index == 0:
            if ctype != CHUNK_JSON:
                problems.append("first chunk is not JSON")
            else:
                try:
                    doc = json.loads(data[offset + 8 : offset + 8 + clen].decode("utf-8"))
                    if doc.get("asset", {}).get("version") != "2.0":
                        problems.append("asset.version != 2.0")
                except (UnicodeDecodeError, json.JSONDecodeError):
                    problems.append("JSON chunk does not parse")
        elif index == 1 and ctype != CHUNK_BIN:
            problems.append("second chunk is not BIN")
        offset += 8 + clen
        index += 1
    if index == 0:
        problems.append("no chunks present")
    return problems
