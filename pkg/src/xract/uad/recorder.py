"""Append-only action logger.

The synchronous cost of a log call is meant to stay negligible next to frame
budgets, so asset bytes (referent models, context captures) can be rendered
and written on a background lane: each user gets a FIFO worker that renders
pending assets, writes them content-addressed, then appends the completed
record line.  ``finalize`` blocks until every lane has drained.
"""

from __future__ import annotations

import errno
import itertools
import queue
import threading
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

from xract.errors import XractError
from xract.jsonio import dumps_pretty
from xract.uad.records import (
    ActionRecord,
    ActionType,
    AssetKind,
    AssetRef,
    ASSET_EXTENSIONS,
    RealityType,
    SessionMeta,
    Transform,
    Virtuality,
)
from xract.uad.store import (
    ASSETS_DIR,
    META_FILE,
    USERS_DIR,
    asset_filename,
    record_to_line,
    sha256_hex,
    user_file_name,
)
from xract.uad.times import TimeDelta, Timestamp, ZERO_DELTA


class UninitializedLogger(XractError):
    """Log call before init or after finalize."""


class StorageFull(XractError):
    """Underlying filesystem ran out of space."""


class SerializationFailure(XractError):
    """Asset payload could not be rendered to bytes."""


@dataclass
class AssetPayload:
    """Asset bytes for one attachment, possibly rendered lazily.

    ``render`` runs on the recorder lane (or inline in synchronous mode);
    ``fixtures`` maps sidecar suffixes (e.g. ``.expected.txt``) to bytes
    written next to the asset for mock pipelines.
    """

    kind: AssetKind
    label: str
    data: Union[bytes, Callable[[], bytes]]
    fixtures: dict[str, bytes] = field(default_factory=dict)

    def render(self) -> bytes:
        if callable(self.data):
            try:
                return self.data()
            except Exception as e:
                raise SerializationFailure(f"{self.kind.value} payload failed: {e}") from e
        return self.data


def now_timestamp() -> Timestamp:
    return Timestamp(datetime.now())


class _UserLane:
    def __init__(self, index: int, path: Path, asynchronous: bool):
        self.index = index
        self.path = path
        self.asynchronous = asynchronous
        self.queue: "queue.Queue[Optional[Callable[[], None]]]" = queue.Queue()
        self.worker: Optional[threading.Thread] = None
        self.file = path.open("a", encoding="utf-8")
        if asynchronous:
            self.worker = threading.Thread(target=self._run, daemon=True)
            self.worker.start()

    def _run(self) -> None:
        while True:
            task = self.queue.get()
            if task is None:
                return
            task()

    def submit(self, task: Callable[[], None]) -> None:
        if self.asynchronous:
            self.queue.put(task)
        else:
            task()

    def close(self) -> None:
        if self.worker is not None:
            self.queue.put(None)
            self.worker.join()
            self.worker = None
        self.file.flush()
        self.file.close()


class RecorderHandle:
    """Writes one session directory; one append-only record file per user."""

    def __init__(
        self,
        session_dir: Union[str, Path],
        app_name: str,
        virtuality: Virtuality,
        session_id: Optional[str] = None,
        asynchronous: bool = True,
    ):
        self.root = Path(session_dir)
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / USERS_DIR).mkdir(exist_ok=True)
        (self.root / ASSETS_DIR).mkdir(exist_ok=True)
        self.app_name = app_name
        self.virtuality = virtuality
        self.session_id = session_id or self.root.name
        self.asynchronous = asynchronous
        self._lanes: dict[str, _UserLane] = {}
        self._seq = itertools.count(1)
        self._lock = threading.Lock()
        self._errors: list[Exception] = []
        self._bounds_lock = threading.Lock()
        self._first_start: Optional[Timestamp] = None
        self._last_end: Optional[Timestamp] = None
        self._finalized = False

    # -- internals ---------------------------------------------------------

    def _lane(self, user: str) -> _UserLane:
        with self._lock:
            lane = self._lanes.get(user)
            if lane is None:
                index = len(self._lanes) + 1
                path = self.root / USERS_DIR / user_file_name(index)
                lane = _UserLane(index, path, self.asynchronous)
                self._lanes[user] = lane
            return lane

    def _write_asset(self, payload: AssetPayload) -> AssetRef:
        data = payload.render()
        digest = sha256_hex(data)
        ext = ASSET_EXTENSIONS[payload.kind]
        name = asset_filename(digest, payload.label, ext)
        rel = f"{ASSETS_DIR}/{name}"
        target = self.root / rel
        try:
            if not target.exists():
                target.write_bytes(data)
                for suffix, fixture in payload.fixtures.items():
                    Path(str(target) + suffix).write_bytes(fixture)
        except OSError as e:
            if e.errno == errno.ENOSPC:
                raise StorageFull(str(e)) from e
            raise
        return AssetRef(kind=payload.kind, path=rel, sha256=digest)

    def _note_bounds(self, start: Timestamp, end: Timestamp) -> None:
        with self._bounds_lock:
            if self._first_start is None or start < self._first_start:
                self._first_start = start
            if self._last_end is None or self._last_end < end:
                self._last_end = end

    # -- public API ----------------------------------------------------------

    def log(
        self,
        name: str,
        action_type: ActionType,
        intent: str,
        user: str,
        location: Sequence[Transform],
        trigger_source: str,
        start_time: Optional[Timestamp] = None,
        duration: TimeDelta = ZERO_DELTA,
        referent: Sequence[AssetPayload] = (),
        referent_name: str = "",
        referent_type: RealityType = RealityType.VIRTUAL,
        referent_location: Sequence[Transform] = (),
        context: Sequence[AssetPayload] = (),
        context_type: RealityType = RealityType.VIRTUAL,
    ) -> str:
        """Record one action; returns its id immediately.

        In asynchronous mode asset serialization and the line append run on
        the user's lane; the call itself only enqueues.
        """
        if self._finalized:
            raise UninitializedLogger("recorder already finalized")
        start = start_time or now_timestamp()
        lane = self._lane(user)
        record_id = f"u{lane.index}-{next(self._seq):05d}"
        self._note_bounds(start, start + duration)

        def task() -> None:
            try:
                referent_refs = tuple(self._write_asset(p) for p in referent)
                context_refs = tuple(self._write_asset(p) for p in context)
                record = ActionRecord(
                    id=record_id,
                    name=name,
                    type=action_type,
                    intent=intent,
                    user=user,
                    location=tuple(location),
                    trigger_source=trigger_source,
                    start_time=start,
                    duration=duration,
                    referent=referent_refs,
                    referent_name=referent_name,
                    referent_type=referent_type,
                    referent_location=tuple(referent_location),
                    context=context_refs,
                    context_type=context_type,
                )
                lane.file.write(record_to_line(record) + "\n")
                lane.file.flush()
            except Exception as e:  # surfaced at finalize
                self._errors.append(e)
                if not self.asynchronous:
                    raise

        lane.submit(task)
        return record_id

    def finalize(
        self,
        recording_start: Optional[Timestamp] = None,
        recording_end: Optional[Timestamp] = None,
    ) -> Path:
        """Drain all lanes, write meta.json, and seal the recorder."""
        if self._finalized:
            return self.root
        for lane in self._lanes.values():
            lane.close()
        self._finalized = True
        if self._errors:
            raise self._errors[0]
        start = recording_start or self._first_start or Timestamp.parse("000101:000000:000")
        end = recording_end or self._last_end or start
        meta = SessionMeta(
            session_id=self.session_id,
            users=tuple(self._lanes.keys()),
            app_name=self.app_name,
            virtuality=self.virtuality,
            recording_start=start,
            recording_end=end,
            anonymized=False,
        )
        (self.root / META_FILE).write_text(dumps_pretty(meta.to_json_dict()), encoding="utf-8")
        return self.root
