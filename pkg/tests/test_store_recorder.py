from __future__ import annotations

import json
import threading

import pytest

from xract.uad.records import ActionType, AssetKind, RealityType, Transform, Virtuality
from xract.uad.recorder import (
    AssetPayload,
    RecorderHandle,
    SerializationFailure,
    UninitializedLogger,
)
from xract.uad.store import (
    CorruptAsset,
    SchemaVersionUnsupported,
    read_session,
    store_hash,
    validate_store,
    write_session,
)
from xract.uad.times import TimeDelta, Timestamp

T0 = Timestamp.parse("240801:090000:000")


def make_recorder(tmp_path, name="sess", asynchronous=False) -> RecorderHandle:
    return RecorderHandle(
        tmp_path / name, app_name="TestApp", virtuality=Virtuality.VR,
        asynchronous=asynchronous,
    )


def log_simple(rec: RecorderHandle, user="alice", at=0.0, **kw) -> str:
    defaults = dict(
        name="Touch",
        action_type=ActionType.DISCRETE,
        intent="Press",
        user=user,
        location=[Transform(pos=(0.0, 0.0, 0.0))],
        trigger_source="XRController",
        start_time=T0 + TimeDelta.from_seconds(at),
    )
    defaults.update(kw)
    return rec.log(**defaults)


class TestRecorder:
    def test_base_log_appends_record(self, tmp_path):
        rec = make_recorder(tmp_path)
        rid = log_simple(rec)
        rec.finalize()
        store = read_session(tmp_path / "sess")
        assert store.record_count() == 1
        assert store.get_record(rid).name == "Touch"

    def test_identical_start_times_both_retained(self, tmp_path):
        rec = make_recorder(tmp_path)
        a = log_simple(rec, at=1.0)
        b = log_simple(rec, at=1.0)
        rec.finalize()
        store = read_session(tmp_path / "sess")
        assert store.record_count() == 2
        assert a != b

    def test_referent_payload_written_with_digest(self, tmp_path):
        rec = make_recorder(tmp_path)
        payload = AssetPayload(AssetKind.REFERENT_MODEL, "cube-model", b"fake-glb-bytes")
        rid = log_simple(rec, referent=[payload], referent_name="Cube1")
        rec.finalize()
        store = read_session(tmp_path / "sess")  # digest verification happens here
        ref = store.get_record(rid).referent[0]
        assert ref.kind is AssetKind.REFERENT_MODEL
        assert store.asset_bytes(ref) == b"fake-glb-bytes"

    def test_broken_payload_surfaces_as_serialization_failure(self, tmp_path):
        rec = make_recorder(tmp_path)

        def boom() -> bytes:
            raise RuntimeError("encoder exploded")

        with pytest.raises(SerializationFailure):
            log_simple(rec, referent=[AssetPayload(AssetKind.REFERENT_MODEL, "m", boom)])

    def test_async_payload_failure_surfaces_at_finalize(self, tmp_path):
        rec = make_recorder(tmp_path, asynchronous=True)

        def boom() -> bytes:
            raise RuntimeError("encoder exploded")

        log_simple(rec, referent=[AssetPayload(AssetKind.REFERENT_MODEL, "m", boom)])
        with pytest.raises(SerializationFailure):
            rec.finalize()

    def test_log_after_finalize_rejected(self, tmp_path):
        rec = make_recorder(tmp_path)
        rec.finalize()
        with pytest.raises(UninitializedLogger):
            log_simple(rec)

    def test_async_lane_drains_on_finalize(self, tmp_path):
        rec = make_recorder(tmp_path, asynchronous=True)
        for i in range(20):
            log_simple(rec, at=float(i), context=[
                AssetPayload(AssetKind.CAMERA_PARAMS, "c0-cam", f"data{i}".encode())
            ])
        rec.finalize()
        store = read_session(tmp_path / "sess")
        assert store.record_count() == 20
        assert len(store.asset_index()) == 20

    def test_append_only_under_interleavings(self, tmp_path):
        # Concurrent writers on distinct users; per-user prefixes must be
        # stable snapshots (no rewriting of earlier lines).
        rec = make_recorder(tmp_path, asynchronous=True)
        users = ["alice", "bob", "carol"]

        def worker(user, n):
            for i in range(n):
                log_simple(rec, user=user, at=float(i))

        threads = [threading.Thread(target=worker, args=(u, 30)) for u in users]
        for t in threads:
            t.start()
        prefix_snapshots = {}
        for u_index in (1, 2, 3):
            path = tmp_path / "sess" / "users" / f"user_{u_index}.jsonl"
            prefix_snapshots[u_index] = path.read_text() if path.exists() else ""
        for t in threads:
            t.join()
        rec.finalize()
        for u_index, before in prefix_snapshots.items():
            after = (tmp_path / "sess" / "users" / f"user_{u_index}.jsonl").read_text()
            assert after.startswith(before)
        store = read_session(tmp_path / "sess")
        assert store.record_count() == 90
        assert validate_store(store).ok


class TestSessionIO:
    def test_empty_session(self, tmp_path):
        rec = make_recorder(tmp_path)
        rec.finalize()
        store = read_session(tmp_path / "sess")
        assert store.record_count() == 0
        assert store.meta.app_name == "TestApp"

    def test_write_read_byte_identical(self, tmp_path):
        rec = make_recorder(tmp_path)
        log_simple(rec, user="alice", at=0.0)
        log_simple(rec, user="bob", at=1.0, referent=[
            AssetPayload(AssetKind.REFERENT_MODEL, "m", b"bytes-a")
        ])
        rec.finalize()
        src = tmp_path / "sess"
        store = read_session(src)
        write_session(store, tmp_path / "copy")
        copy_store = read_session(tmp_path / "copy")
        for i in (1, 2):
            a = (src / "users" / f"user_{i}.jsonl").read_bytes()
            b = (tmp_path / "copy" / "users" / f"user_{i}.jsonl").read_bytes()
            assert a == b
        assert copy_store.asset_index() == store.asset_index()
        # Second copy of the copy is byte-stable end to end.
        write_session(copy_store, tmp_path / "copy2")
        assert store_hash(tmp_path / "copy") == store_hash(tmp_path / "copy2")

    def test_tampered_asset_detected(self, tmp_path):
        rec = make_recorder(tmp_path)
        log_simple(rec, context=[AssetPayload(AssetKind.CONTEXT_DEPTH, "c0-depth", b"depth")])
        rec.finalize()
        store = read_session(tmp_path / "sess")
        path = next(iter(store.asset_index()))
        (tmp_path / "sess" / path).write_bytes(b"tampered")
        with pytest.raises(CorruptAsset) as err:
            read_session(tmp_path / "sess")
        assert path in str(err.value)

    def test_unsupported_schema_version(self, tmp_path):
        rec = make_recorder(tmp_path)
        log_simple(rec)
        rec.finalize()
        meta_path = tmp_path / "sess" / "meta.json"
        meta = json.loads(meta_path.read_text())
        meta["uadVersion"] = "2.0"
        meta_path.write_text(json.dumps(meta))
        with pytest.raises(SchemaVersionUnsupported):
            read_session(tmp_path / "sess")

    def test_store_hash_ignores_bookkeeping(self, tmp_path):
        rec = make_recorder(tmp_path)
        log_simple(rec)
        rec.finalize()
        h0 = store_hash(tmp_path / "sess")
        state = tmp_path / "sess" / ".process"
        state.mkdir()
        (state / "state.json").write_text("{}")
        assert store_hash(tmp_path / "sess") == h0
