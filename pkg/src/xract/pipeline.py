"""The `process` pipeline: context reconstruction, referent classification,
context description, and intent estimation over a session directory.

Steps run in a fixed order and are resumable: per-record done-markers live in
``.process/state.json`` (bookkeeping, excluded from store hashing), every
file mutation is an atomic replace, and all step outputs are deterministic
under the mock client, so an interrupted run re-converges to the
uninterrupted result.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Union

from xract.context3d.reconstruct import reconstruct_context
from xract.insight.client import LlmClient
from xract.insight.processor import (
    StepResult,
    classify_referent,
    describe_context,
    estimate_intent,
    run_batch,
)
from xract.jsonio import atomic_write_bytes, atomic_write_text, clean_stale_tmp, dumps_pretty
from xract.uad.records import ActionRecord
from xract.uad.store import (
    SessionStore,
    USERS_DIR,
    read_session,
    record_to_line,
    user_file_name,
)

PROCESS_STEPS = ("context", "classify", "describe", "intent")

_STATE_DIR = ".process"
_STATE_FILE = "state.json"

#: Test seam: when this env var names a step, the process exits hard right
#: after that step's state is durable, emulating a crash between steps.
CRASH_ENV = "XRACT_CRASH_AFTER"


@dataclass
class ProcessReport:
    steps_run: list[str] = field(default_factory=list)
    changed: dict[str, int] = field(default_factory=dict)
    diagnostics: list[str] = field(default_factory=list)

    def summary(self) -> str:
        parts = [f"{s}: {self.changed.get(s, 0)} record(s) updated" for s in self.steps_run]
        return "; ".join(parts) if parts else "nothing to do"


def _state_path(root: Path) -> Path:
    return root / _STATE_DIR / _STATE_FILE


def _load_state(root: Path) -> dict:
    path = _state_path(root)
    if path.exists():
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError:
            pass  # half-written state: start the affected steps over
    return {"version": 1, "steps": {}}


def _save_state(root: Path, state: dict) -> None:
    atomic_write_text(_state_path(root), dumps_pretty(state))


def _write_user_files(root: Path, store: SessionStore) -> None:
    for i, user in enumerate(store.meta.users, start=1):
        lines = "".join(record_to_line(r) + "\n" for r in store.users.get(user, []))
        atomic_write_text(root / USERS_DIR / user_file_name(i), lines)


def _maybe_crash(step: str) -> None:
    if os.environ.get(CRASH_ENV) == step:
        os._exit(137)


def _apply_step(
    root: Path,
    store: SessionStore,
    step: str,
    state: dict,
    runner: Callable[[ActionRecord], StepResult],
    report: ProcessReport,
    parallel: int,
) -> SessionStore:
    done = set(state["steps"].get(step, []))
    pending = [r for r in store.all_records() if r.id not in done]
    report.steps_run.append(step)
    if not pending:
        report.changed[step] = 0
        _maybe_crash(step)
        return store
    results = run_batch(pending, runner, parallel=parallel)
    replaced = {res.record.id: res for res in results}
    changed = sum(1 for res in results if res.changed)
    for res in results:
        report.diagnostics.extend(res.diagnostics)

    users = {
        user: [replaced[r.id].record if r.id in replaced else r for r in records]
        for user, records in store.users.items()
    }
    new_store = store.with_users(store.meta, users)
    new_store.root = root
    if changed:
        _write_user_files(root, new_store)
    state["steps"][step] = sorted(done | {r.id for r in pending})
    _save_state(root, state)
    report.changed[step] = changed
    _maybe_crash(step)
    return new_store


def process_session(
    session_dir: Union[str, Path],
    client: LlmClient,
    stride: int = 2,
    voxel: float = 0.02,
    parallel: int = 4,
    steps: Optional[list[str]] = None,
) -> ProcessReport:
    """Run (or resume) the processing pipeline on one session directory.

    Idempotent: a second invocation finds every record marked done and writes
    nothing.
    """
    root = Path(session_dir)
    clean_stale_tmp(root)
    store = read_session(root)
    state = _load_state(root)
    report = ProcessReport()
    selected = steps or list(PROCESS_STEPS)

    if "context" in selected:
        done = set(state["steps"].get("context", []))
        pending = [r for r in store.all_records() if r.id not in done]
        report.steps_run.append("context")
        changed = 0
        if pending:
            updated: dict[str, ActionRecord] = {}
            for r in pending:
                result = reconstruct_context(r, store, stride=stride, voxel=voxel)
                report.diagnostics.extend(result.diagnostics)
                # Assets land before the records that reference them; orphans
                # from a crash are re-written identically on the next run.
                for rel, data in result.new_assets.items():
                    atomic_write_bytes(root / rel, data)
                if result.changed:
                    updated[r.id] = result.record
                    changed += 1
            users = {
                user: [updated.get(r.id, r) for r in records]
                for user, records in store.users.items()
            }
            store = store.with_users(store.meta, users)
            store.root = root
            if changed:
                _write_user_files(root, store)
            state["steps"]["context"] = sorted(done | {r.id for r in pending})
            _save_state(root, state)
        report.changed["context"] = changed
        _maybe_crash("context")

    if "classify" in selected:
        store = _apply_step(
            root, store, "classify", state,
            lambda r: classify_referent(r, store, client), report, parallel,
        )
    if "describe" in selected:
        store = _apply_step(
            root, store, "describe", state,
            lambda r: describe_context(r, store, client), report, parallel,
        )
    if "intent" in selected:
        store = _apply_step(
            root, store, "intent", state,
            lambda r: estimate_intent(r, store, client), report, parallel,
        )
    return report
