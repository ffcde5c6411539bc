"""Session directory layout and the immutable in-memory session store.

On-disk layout (bit-exact contract):

    <session>/meta.json
    <session>/users/user_<N>.jsonl        one record per line, append order
    <session>/assets/<sha16>_<label>.<ext>
    <session>/alias_map.json              private; never served

Record files round-trip byte-identically through read/write; asset files are
content-addressed and verified by digest.
"""

from __future__ import annotations

import hashlib
import json
import re
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional, Union

from xract.errors import XractError
from xract.jsonio import atomic_write_bytes, atomic_write_text, dumps_compact, dumps_pretty
from xract.uad.records import (
    ActionRecord,
    AssetRef,
    SessionMeta,
    ValidationReport,
    validate_record,
)

META_FILE = "meta.json"
USERS_DIR = "users"
ASSETS_DIR = "assets"
ALIAS_MAP_FILE = "alias_map.json"

#: Sidecar suffixes carrying mock-transcriber / mock-classifier fixture text.
FIXTURE_SUFFIXES = (".expected.txt", ".expected.json")

_SLUG_RE = re.compile(r"[^A-Za-z0-9_-]+")


class CorruptAsset(XractError):
    """Asset bytes do not match the digest recorded in the session."""


class SchemaVersionUnsupported(XractError):
    """Session was written with a record schema this build cannot read."""


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def asset_filename(digest: str, label: str, ext: str) -> str:
    slug = _SLUG_RE.sub("-", label).strip("-") or "asset"
    return f"{digest[:16]}_{slug}{ext}"


def user_file_name(index: int) -> str:
    return f"user_{index}.jsonl"


def record_to_line(record: ActionRecord) -> str:
    return dumps_compact(record.to_json_dict())


@dataclass
class SessionStore:
    """Immutable, indexed collection of one session's records and assets.

    ``asset_sources`` maps session-relative asset paths to either the root
    directory holding the file or raw bytes pending a write (used by ingest
    and merge before their output directory exists).
    """

    meta: SessionMeta
    users: dict[str, list[ActionRecord]]
    root: Optional[Path] = None
    alias_map: Optional[dict[str, str]] = None
    asset_sources: dict[str, Union[Path, bytes]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self._by_id: dict[str, ActionRecord] = {}
        for records in self.users.values():
            for r in records:
                self._by_id[r.id] = r

    # -- record access ---------------------------------------------------

    def all_records(self) -> list[ActionRecord]:
        out: list[ActionRecord] = []
        for user in self.meta.users:
            out.extend(self.users.get(user, []))
        return out

    def record_count(self) -> int:
        return sum(len(v) for v in self.users.values())

    def get_record(self, record_id: str) -> ActionRecord:
        return self._by_id[record_id]

    def has_record(self, record_id: str) -> bool:
        return record_id in self._by_id

    # -- asset access ----------------------------------------------------

    def asset_index(self) -> dict[str, str]:
        """Session-relative path -> sha256 over every referenced asset."""
        index: dict[str, str] = {}
        for r in self.all_records():
            for ref in r.assets():
                prev = index.get(ref.path)
                if prev is not None and prev != ref.sha256:
                    raise CorruptAsset(f"conflicting digests recorded for {ref.path}")
                index[ref.path] = ref.sha256
        return index

    def asset_bytes(self, ref: AssetRef, verify: bool = True) -> bytes:
        src = self.asset_sources.get(ref.path)
        if isinstance(src, bytes):
            data = src
        else:
            root = src if isinstance(src, Path) else self.root
            if root is None:
                raise CorruptAsset(f"no source for asset {ref.path}")
            data = (root / ref.path).read_bytes()
        if verify and sha256_hex(data) != ref.sha256:
            raise CorruptAsset(f"digest mismatch for {ref.path}")
        return data

    def with_users(
        self,
        meta: SessionMeta,
        users: dict[str, list[ActionRecord]],
        alias_map: Optional[dict[str, str]] = None,
        asset_sources: Optional[dict[str, Union[Path, bytes]]] = None,
    ) -> "SessionStore":
        return SessionStore(
            meta=meta,
            users=users,
            root=self.root,
            alias_map=alias_map if alias_map is not None else self.alias_map,
            asset_sources=asset_sources if asset_sources is not None else dict(self.asset_sources),
        )


def _check_version(version: str) -> None:
    if version.split(".")[0] != "1":
        raise SchemaVersionUnsupported(f"uadVersion {version!r} unsupported (wants 1.x)")


def _parse_user_file(path: Path) -> list[ActionRecord]:
    records = []
    with path.open("r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as e:
                raise XractError(f"{path.name}:{lineno}: bad record line: {e}") from None
            _check_version(d.get("uadVersion", "1.0"))
            records.append(ActionRecord.from_json_dict(d))
    return records


def read_session(session_dir: Union[str, Path], verify_assets: bool = True) -> SessionStore:
    """Load a session directory into an immutable store.

    Raises ``CorruptAsset`` when a referenced asset file is missing or fails
    its digest check, ``SchemaVersionUnsupported`` on a foreign uadVersion.
    """
    root = Path(session_dir)
    meta = SessionMeta.from_json_dict(json.loads((root / META_FILE).read_text(encoding="utf-8")))
    _check_version(meta.uad_version)

    users_dir = root / USERS_DIR
    files = sorted(users_dir.glob("user_*.jsonl"), key=lambda p: int(p.stem.split("_")[1])) if users_dir.exists() else []
    with ThreadPoolExecutor(max_workers=4) as pool:
        parsed = list(pool.map(_parse_user_file, files))

    users: dict[str, list[ActionRecord]] = {u: [] for u in meta.users}
    for path, records in zip(files, parsed):
        if not records:
            continue
        owner = records[0].user
        for r in records:
            if r.user != owner:
                raise XractError(f"{path.name}: mixed users in one per-subject file")
        users.setdefault(owner, []).extend(records)

    alias_path = root / ALIAS_MAP_FILE
    alias_map = (
        json.loads(alias_path.read_text(encoding="utf-8")) if alias_path.exists() else None
    )

    store = SessionStore(meta=meta, users=users, root=root, alias_map=alias_map)
    if verify_assets:
        for path, digest in sorted(store.asset_index().items()):
            file = root / path
            if not file.exists():
                raise CorruptAsset(f"missing asset {path}")
            if sha256_hex(file.read_bytes()) != digest:
                raise CorruptAsset(f"digest mismatch for {path}")
    return store


def write_session(store: SessionStore, out_dir: Union[str, Path]) -> SessionStore:
    """Write a store to a session directory and return it re-rooted there.

    Only assets referenced by records are materialized; mock-fixture sidecar
    files riding next to a copied asset are carried along.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out / META_FILE, dumps_pretty(store.meta.to_json_dict()))

    (out / USERS_DIR).mkdir(exist_ok=True)
    for i, user in enumerate(store.meta.users, start=1):
        lines = "".join(record_to_line(r) + "\n" for r in store.users.get(user, []))
        atomic_write_text(out / USERS_DIR / user_file_name(i), lines)

    if store.alias_map is not None:
        atomic_write_text(out / ALIAS_MAP_FILE, dumps_pretty(store.alias_map))

    (out / ASSETS_DIR).mkdir(exist_ok=True)
    for path, digest in sorted(store.asset_index().items()):
        dst = out / path
        src = store.asset_sources.get(path)
        if isinstance(src, bytes):
            data = src
            if sha256_hex(data) != digest:
                raise CorruptAsset(f"pending bytes do not match digest for {path}")
            atomic_write_bytes(dst, data)
        else:
            src_root = src if isinstance(src, Path) else store.root
            if src_root is None:
                raise CorruptAsset(f"no source for asset {path}")
            src_file = src_root / path
            data = src_file.read_bytes()
            if sha256_hex(data) != digest:
                raise CorruptAsset(f"digest mismatch for {path}")
            if src_file.resolve() != dst.resolve():
                atomic_write_bytes(dst, data)
                for suffix in FIXTURE_SUFFIXES:
                    fixture = Path(str(src_file) + suffix)
                    if fixture.exists():
                        shutil.copyfile(fixture, str(dst) + suffix)

    return read_session(out, verify_assets=False)


def validate_store(store: SessionStore) -> ValidationReport:
    """Session-level validation: per-record invariants plus id uniqueness and
    meta time bounds."""
    report = ValidationReport()
    seen: set[str] = set()
    for r in store.all_records():
        sub = validate_record(r, require_alias=store.meta.anonymized)
        report.violations.extend(sub.violations)
        if r.id in seen:
            report.add("id", "unique", f"duplicate record id {r.id}")
        seen.add(r.id)
        if r.start_time < store.meta.recording_start:
            report.add("startTime", "bounds", f"{r.id} starts before recordingStart")
        if store.meta.recording_end < r.end_time():
            report.add("startTime", "bounds", f"{r.id} ends after recordingEnd")
    return report


def store_hash(session_dir: Union[str, Path]) -> str:
    """Content hash of a session directory (dot-prefixed bookkeeping excluded)."""
    root = Path(session_dir)
    h = hashlib.sha256()
    for path in sorted(root.rglob("*")):
        rel = path.relative_to(root)
        if any(part.startswith(".") for part in rel.parts):
            continue
        if path.is_file():
            h.update(str(rel).encode())
            h.update(b"\0")
            h.update(path.read_bytes())
            h.update(b"\0")
    return h.hexdigest()


def iter_jsonl(path: Path) -> Iterator[dict]:
    with path.open("r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                yield json.loads(line)


def collect_records(stores: Iterable[SessionStore]) -> list[ActionRecord]:
    out: list[ActionRecord] = []
    for s in stores:
        out.extend(s.all_records())
    return out
