"""Per-record model inferences: referent classification, context description,
and post-defined intent estimation.

Each operation takes a record and returns a (possibly updated) record plus
diagnostics; nothing here touches disk.  Failures degrade per record, they
never abort a batch.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from xract.insight.client import ClientFailure, LlmClient, LlmRequest, UnparseableResponse
from xract.uad.records import (
    ActionRecord,
    AssetKind,
    POST_DEFINED,
    RealityType,
    format_classification,
)
from xract.uad.store import SessionStore

_PROMPT_DIR = Path(__file__).parent / "prompts"

DEFAULT_PARALLEL = 4


def load_prompt(name: str) -> str:
    return (_PROMPT_DIR / f"{name}.txt").read_text(encoding="utf-8")


@dataclass
class StepResult:
    record: ActionRecord
    changed: bool = False
    diagnostics: list[str] = field(default_factory=list)


def _asset_path(store: SessionStore, ref) -> Optional[Path]:
    if store.root is None:
        return None
    return store.root / ref.path


def _first_asset(record: ActionRecord, kind: AssetKind):
    for ref in record.assets():
        if ref.kind is kind:
            return ref
    return None


def classify_referent(record: ActionRecord, store: SessionStore, client: LlmClient) -> StepResult:
    """Label a physical referent from its logged snapshot.

    Updates ``referentName`` to ``<class>@<confidence>``; virtual referents
    and records without a snapshot are skipped.  An unparseable reply is
    retried once, then the record stays unclassified with a diagnostic.
    """
    result = StepResult(record=record)
    if record.referent_type is not RealityType.PHYSICAL:
        result.diagnostics.append(f"{record.id}: virtual referent, classification skipped")
        return result
    image = _first_asset(record, AssetKind.REFERENT_IMAGE)
    if image is None:
        result.diagnostics.append(f"{record.id}: no referent snapshot, classification skipped")
        return result
    if "@" in record.referent_name:
        result.diagnostics.append(f"{record.id}: already classified")
        return result
    path = _asset_path(store, image)
    request = LlmRequest(
        system=load_prompt("classify_referent"),
        user=(
            f"action: {record.name}\nintent: {record.intent}\n"
            f"snapshot: {image.path}\nClassify the physical object in the snapshot."
        ),
        images=(str(path),) if path else (),
        tag="classify",
    )
    for attempt in (1, 2):
        try:
            raw = client.complete(request)
            d = json.loads(raw)
            label = str(d["label"])
            conf = float(d["confidence"])
            if not (0.0 <= conf <= 1.0):
                raise UnparseableResponse(f"confidence out of range: {conf}")
            result.record = record.replace(referent_name=format_classification(label, conf))
            result.changed = True
            return result
        except ClientFailure as e:
            result.diagnostics.append(f"{record.id}: classifier unavailable ({e})")
            return result
        except (json.JSONDecodeError, KeyError, TypeError, ValueError, UnparseableResponse) as e:
            if attempt == 2:
                result.diagnostics.append(f"{record.id}: unclassified after retry ({e})")
    return result


def describe_context(record: ActionRecord, store: SessionStore, client: LlmClient) -> StepResult:
    """Generate the textual description of a record's captured surroundings."""
    result = StepResult(record=record)
    rgb = _first_asset(record, AssetKind.CONTEXT_RGB)
    if rgb is None:
        result.diagnostics.append(f"{record.id}: no context capture, description skipped")
        return result
    if record.context_description:
        result.diagnostics.append(f"{record.id}: description already present")
        return result
    path = _asset_path(store, rgb)
    request = LlmRequest(
        system=load_prompt("describe_context"),
        user=(
            f"action: {record.name}\nintent: {record.intent}\n"
            f"referent: {record.referent_name}\nreality: {record.context_type.value}\n"
            "Describe the subject's surroundings at this moment."
        ),
        images=(str(path),) if path else (),
        tag="describe",
    )
    try:
        text = client.complete(request).strip()
        if not text:
            raise UnparseableResponse("empty description")
        result.record = record.replace(context_description=text)
        result.changed = True
    except (ClientFailure, UnparseableResponse) as e:
        result.diagnostics.append(f"{record.id}: description missing ({e})")
    return result


def _transcript_text(record: ActionRecord, store: SessionStore) -> str:
    ref = _first_asset(record, AssetKind.AUDIO_TRANSCRIPT)
    if ref is None:
        return ""
    try:
        return store.asset_bytes(ref).decode("utf-8")
    except Exception:
        return ""


def estimate_intent(record: ActionRecord, store: SessionStore, client: LlmClient) -> StepResult:
    """Replace a ``PostDefined`` intent with a model-deduced one.

    Developer-defined intents are never touched; on failure the sentinel is
    kept and the record flagged in diagnostics.
    """
    result = StepResult(record=record)
    if record.intent != POST_DEFINED:
        return result
    transcript = _transcript_text(record, store)
    request = LlmRequest(
        system=load_prompt("estimate_intent"),
        user=(
            f"action: {record.name}\nuser: {record.user}\n"
            f"context: {record.context_description or 'not described'}\n"
            f"transcript: {transcript}\n"
            "State the most plausible intent."
        ),
        tag="intent",
    )
    try:
        text = client.complete(request).strip()
        if not text:
            raise UnparseableResponse("empty intent")
        result.record = record.replace(intent=text, intent_estimated=True)
        result.changed = True
    except (ClientFailure, UnparseableResponse) as e:
        result.diagnostics.append(f"{record.id}: intent stays post-defined ({e})")
    return result


def run_batch(
    records: list[ActionRecord],
    fn: Callable[[ActionRecord], StepResult],
    parallel: int = DEFAULT_PARALLEL,
) -> list[StepResult]:
    """Apply a per-record step with bounded parallelism.

    Results come back in input (record id) order regardless of scheduling, so
    batch output is deterministic.
    """
    if parallel <= 1 or len(records) <= 1:
        return [fn(r) for r in records]
    with ThreadPoolExecutor(max_workers=parallel) as pool:
        return list(pool.map(fn, records))
