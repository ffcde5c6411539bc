"""Post-hoc session preparation: grouping, anonymization, transcription,
merging, and filtered views.

This is the seam between raw recorder output and everything analytic: all
downstream code consumes the immutable ``SessionStore`` produced here.
"""

from __future__ import annotations

import hashlib
import re
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import timedelta
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, Union

from xract.errors import XractError
from xract.uad.records import (
    ActionRecord,
    ActionType,
    AssetKind,
    AssetRef,
    SessionMeta,
    Transform,
)
from xract.uad.store import ASSETS_DIR, SessionStore, asset_filename, read_session, sha256_hex
from xract.uad.times import TimeDelta, Timestamp

_ALIAS_RE = re.compile(r"^User\d+$")


class TranscriberUnavailable(XractError):
    """Speech-to-text backend could not produce a transcript."""


class VersionMismatch(XractError):
    """Sessions with different schema versions cannot be merged."""


class Transcriber(ABC):
    """One request/response pair: audio asset path in, text out."""

    @abstractmethod
    def transcribe(self, audio_path: Path) -> str: ...


class MockTranscriber(Transcriber):
    """Reads the ``<asset>.expected.txt`` fixture next to the audio file."""

    def transcribe(self, audio_path: Path) -> str:
        fixture = Path(str(audio_path) + ".expected.txt")
        if not fixture.exists():
            raise TranscriberUnavailable(f"no fixture for {audio_path.name}")
        return fixture.read_text(encoding="utf-8")


@dataclass
class IngestConfig:
    anonymize: bool = True
    transcriber: Optional[Transcriber] = None
    # Optional fixed resample interval (seconds) for continuous actions.
    resample_interval: Optional[float] = None
    # Raw audio is transcribed then dropped from the served store; transcripts
    # are the only verbal data kept.
    drop_audio: bool = True
    max_parallel: int = 4

    def __post_init__(self) -> None:
        if self.resample_interval is not None and self.resample_interval <= 0:
            raise XractError(f"resample interval must be positive: {self.resample_interval}")
        if self.transcriber is None:
            self.transcriber = MockTranscriber()


def compute_alias_order(firsts: Sequence[tuple[str, Optional[Timestamp]]]) -> dict[str, str]:
    """Assign ``User<N>`` aliases by first-appearance order of startTime.

    Input order breaks ties (and places users with no records last), so the
    numbering is deterministic and reproducible.
    """
    keyed = [
        (first is None, first.format() if first else "", index, original)
        for index, (original, first) in enumerate(firsts)
    ]
    keyed.sort()
    return {original: f"User{i}" for i, (_, _, _, original) in enumerate(keyed, start=1)}


def compute_alias_map(users_in_file_order: Sequence[tuple[str, Sequence[ActionRecord]]]) -> dict[str, str]:
    firsts = [
        (original, min((r.start_time for r in records), default=None))
        for original, records in users_in_file_order
    ]
    return compute_alias_order(firsts)


def _resample_continuous(record: ActionRecord, interval_s: float) -> ActionRecord:
    if record.type is not ActionType.CONTINUOUS or len(record.location) < 2:
        return record
    dur = record.duration.as_seconds(strict=False)
    n = int(dur // interval_s) + 1
    src = record.location
    src_times = [i * dur / (len(src) - 1) for i in range(len(src))]
    out = []
    for i in range(n):
        t = min(i * interval_s, dur)
        j = max(1, min(len(src) - 1, next((k for k, st in enumerate(src_times) if st >= t), len(src) - 1)))
        t0, t1 = src_times[j - 1], src_times[j]
        w = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
        a, b = src[j - 1], src[j]
        pos = tuple(a.pos[k] + w * (b.pos[k] - a.pos[k]) for k in range(3))
        rot = tuple(a.rot[k] + w * (b.rot[k] - a.rot[k]) for k in range(3))
        out.append(Transform(pos=pos, rot=rot))
    return record.replace(location=tuple(out))


def _transcript_ref(record_id: str, text: str) -> tuple[AssetRef, bytes]:
    data = text.encode("utf-8")
    digest = sha256_hex(data)
    rel = f"{ASSETS_DIR}/{asset_filename(digest, f'{record_id}-transcript', '.txt')}"
    return AssetRef(kind=AssetKind.AUDIO_TRANSCRIPT, path=rel, sha256=digest), data


def ingest_directory(session_dir: Union[str, Path], cfg: Optional[IngestConfig] = None) -> SessionStore:
    """Produce the immutable analytic store from a recorded session directory.

    Records are grouped per user and sorted chronologically (stable for ties),
    identities are replaced with ``User<N>`` aliases, and records carrying raw
    audio gain transcript assets.  Transcription failures degrade to a
    diagnostic: the record is kept, its transcript marked missing.
    """
    cfg = cfg or IngestConfig()
    raw = read_session(session_dir)
    diagnostics: list[str] = []

    ordered: list[tuple[str, list[ActionRecord]]] = [
        (user, sorted(raw.users.get(user, []), key=lambda r: r.start_time))
        for user in raw.meta.users
    ]

    # Transcribe any record that still carries raw audio, in parallel, with
    # results attached in record-id order for determinism.
    audio_jobs: list[tuple[str, AssetRef]] = []
    for _, records in ordered:
        for r in records:
            for ref in r.context + r.referent:
                if ref.kind is AssetKind.AUDIO_CAPTURE:
                    audio_jobs.append((r.id, ref))
    transcripts: dict[str, str] = {}
    if audio_jobs:
        root = Path(session_dir)

        def run(job: tuple[str, AssetRef]) -> tuple[str, Optional[str], Optional[str]]:
            rid, ref = job
            try:
                return rid, cfg.transcriber.transcribe(root / ref.path), None
            except TranscriberUnavailable as e:
                return rid, None, str(e)

        with ThreadPoolExecutor(max_workers=cfg.max_parallel) as pool:
            for rid, text, err in sorted(pool.map(run, audio_jobs), key=lambda t: t[0]):
                if text is not None:
                    transcripts[rid] = text
                else:
                    diagnostics.append(f"{rid}: transcript missing ({err})")

    alias_map = (
        compute_alias_map(ordered)
        if cfg.anonymize
        else {user: user for user, _ in ordered}
    )

    pending_assets: dict[str, Union[Path, bytes]] = {}
    users_out: dict[str, list[ActionRecord]] = {}
    ordered_aliases = sorted((alias_map[u] for u, _ in ordered), key=lambda a: (len(a), a))
    for user, records in ordered:
        alias = alias_map[user]
        out = []
        for r in records:
            if cfg.resample_interval:
                r = _resample_continuous(r, cfg.resample_interval)
            if r.id in transcripts:
                tref, data = _transcript_ref(r.id, transcripts[r.id])
                pending_assets[tref.path] = data
                context = tuple(
                    a for a in r.context
                    if not (cfg.drop_audio and a.kind is AssetKind.AUDIO_CAPTURE)
                ) + (tref,)
                referent = tuple(
                    a for a in r.referent
                    if not (cfg.drop_audio and a.kind is AssetKind.AUDIO_CAPTURE)
                )
                r = r.replace(context=context, referent=referent)
            out.append(r.replace(user=alias))
        users_out[alias] = out
    users_out = {a: users_out[a] for a in ordered_aliases}

    meta = SessionMeta(
        session_id=raw.meta.session_id,
        users=tuple(ordered_aliases),
        app_name=raw.meta.app_name,
        virtuality=raw.meta.virtuality,
        recording_start=raw.meta.recording_start,
        recording_end=raw.meta.recording_end,
        anonymized=cfg.anonymize or raw.meta.anonymized,
        uad_version=raw.meta.uad_version,
    )
    sources: dict[str, Union[Path, bytes]] = dict(pending_assets)
    store = SessionStore(
        meta=meta, users=users_out, root=raw.root, alias_map=dict(alias_map), asset_sources=sources
    )
    store.diagnostics = diagnostics
    return store


def _shift_timestamp(ts: Timestamp, offset: timedelta) -> Timestamp:
    return Timestamp(ts.dt - offset)


def merge_sessions(stores: Sequence[SessionStore], rebase: bool = False) -> SessionStore:
    """Combine sessions into one store with users renumbered in input order.

    Timestamps are preserved verbatim unless ``rebase`` shifts every session
    to the earliest common recording start.  The alias map records provenance
    as ``<sessionId>/<alias> -> <new alias>``.
    """
    if not stores:
        raise XractError("nothing to merge")
    version = stores[0].meta.uad_version
    for s in stores[1:]:
        if s.meta.uad_version != version:
            raise VersionMismatch(f"{s.meta.uad_version} != {version}")

    offsets = [timedelta(0)] * len(stores)
    if rebase:
        earliest = min(s.meta.recording_start for s in stores)
        offsets = [s.meta.recording_start.dt - earliest.dt for s in stores]

    users_out: dict[str, list[ActionRecord]] = {}
    alias_map: dict[str, str] = {}
    sources: dict[str, Union[Path, bytes]] = {}
    n = 0
    for i, s in enumerate(stores):
        for user in s.meta.users:
            n += 1
            new_alias = f"User{n}"
            alias_map[f"{s.meta.session_id}/{user}"] = new_alias
            out = []
            for r in s.users.get(user, []):
                shifted = r.replace(
                    id=f"s{i + 1}-{r.id}",
                    user=new_alias,
                    start_time=_shift_timestamp(r.start_time, offsets[i]),
                )
                out.append(shifted)
            users_out[new_alias] = out
        for path in s.asset_index():
            src = s.asset_sources.get(path)
            sources[path] = src if src is not None else s.root
    digest = hashlib.sha256(
        ("|".join(s.meta.session_id for s in stores) + f"|rebase={rebase}").encode()
    ).hexdigest()[:8]

    all_records = [r for recs in users_out.values() for r in recs]
    starts = [r.start_time for r in all_records]
    ends = [r.end_time() for r in all_records]
    rec_start = min([_shift_timestamp(s.meta.recording_start, o) for s, o in zip(stores, offsets)] + starts)
    rec_end = max([_shift_timestamp(s.meta.recording_end, o) for s, o in zip(stores, offsets)] + ends)

    meta = SessionMeta(
        session_id=f"merged-{digest}",
        users=tuple(users_out.keys()),
        app_name="+".join(dict.fromkeys(s.meta.app_name for s in stores)),
        virtuality=stores[0].meta.virtuality,
        recording_start=rec_start,
        recording_end=rec_end,
        anonymized=all(s.meta.anonymized for s in stores),
        uad_version=version,
    )
    return SessionStore(meta=meta, users=users_out, root=None, alias_map=alias_map, asset_sources=sources)


def record_overlaps(record: ActionRecord, t0: Optional[Timestamp], t1: Optional[Timestamp]) -> bool:
    """Interval-overlap semantics on [start, start+duration) vs [t0, t1).

    Zero-duration (discrete) records are treated as the closed instant
    ``{start}`` so they stay selectable; an empty range matches nothing.
    """
    if t0 is not None and t1 is not None and not (t0 < t1):
        return False
    start = record.start_time
    end = record.end_time()
    if start == end:
        # Instant: t0 <= start < t1.
        if t0 is not None and start < t0:
            return False
        if t1 is not None and not (start < t1):
            return False
        return True
    # Non-empty intervals: start < t1 and t0 < end.
    if t0 is not None and not (t0 < end):
        return False
    if t1 is not None and not (start < t1):
        return False
    return True


@dataclass(frozen=True)
class SessionView:
    """A filtered, zero-copy window over a store's records."""

    store: SessionStore
    users: Optional[frozenset[str]] = None
    actions: Optional[frozenset[str]] = None
    t0: Optional[Timestamp] = None
    t1: Optional[Timestamp] = None

    def matches(self, r: ActionRecord) -> bool:
        if self.users is not None and r.user not in self.users:
            return False
        if self.actions is not None and r.name not in self.actions:
            return False
        return record_overlaps(r, self.t0, self.t1)

    def records(self) -> list[ActionRecord]:
        return [r for r in self.store.all_records() if self.matches(r)]

    def record_ids(self) -> list[str]:
        return [r.id for r in self.records()]

    def count(self) -> int:
        return len(self.records())

    def time_bounds(self) -> tuple[Timestamp, Timestamp]:
        start = self.t0 or self.store.meta.recording_start
        end = self.t1 or self.store.meta.recording_end
        return start, end


def make_view(
    store: SessionStore,
    users: Optional[Iterable[str]] = None,
    actions: Optional[Iterable[str]] = None,
    t0: Optional[Timestamp] = None,
    t1: Optional[Timestamp] = None,
) -> SessionView:
    """Filter a store; unknown user/action names yield an empty dimension
    rather than an error."""
    if t0 is not None and t1 is not None and t1 < t0:
        raise XractError(f"time range inverted: {t0} > {t1}")
    return SessionView(
        store=store,
        users=frozenset(users) if users is not None else None,
        actions=frozenset(actions) if actions is not None else None,
        t0=t0,
        t1=t1,
    )


def view_from_filter_spec(store: SessionStore, spec: dict[str, Any]) -> SessionView:
    """FilterSpec JSON: users/actions lists or null, from/to timestamps or null."""
    return make_view(
        store,
        users=spec.get("users"),
        actions=spec.get("actions"),
        t0=Timestamp.parse(spec["from"]) if spec.get("from") else None,
        t1=Timestamp.parse(spec["to"]) if spec.get("to") else None,
    )
