"""Analytics insight generation: six specialized agents or one combined agent.

Multi mode decomposes the analysis into aspect-scoped sub-tasks (one agent
per aspect, each fed a compact text digest of the session), then a
deterministic coordinator validates citations, deduplicates near-identical
findings, caps the curated list at ten, and orders insights by the timestamp
of their first marker.  Single mode sends one combined digest to one agent
and shares the same curation path.
"""

from __future__ import annotations

import json
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

from xract.analytics import bin_timeline, referent_stats, trace_map
from xract.errors import XractError
from xract.ingest import make_view
from xract.insight.client import ClientFailure, LlmClient, LlmRequest
from xract.insight.processor import load_prompt
from xract.uad.records import AssetKind
from xract.uad.store import SessionStore
from xract.uad.times import TimeDelta, Timestamp

MAX_INSIGHTS = 10
DEDUP_JACCARD = 0.8


class AllAgentsFailed(XractError):
    """No analytical aspect produced findings."""


class AgentKind(str, Enum):
    SPACE = "Space"
    TIME = "Time"
    ACTION = "Action"
    INTENT = "Intent"
    CONTEXT = "Context"
    USER = "User"


@dataclass
class AoIMarker:
    """Time-anchored pointer from insights to a source action."""

    action_id: str
    timestamp: Timestamp
    insight_ids: list[str] = field(default_factory=list)

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "actionId": self.action_id,
            "timestamp": self.timestamp.format(),
            "insightIds": list(self.insight_ids),
        }


@dataclass
class Insight:
    id: str
    title: str
    body: str
    aspect: AgentKind
    markers: list[AoIMarker]
    source_agent: str  # "single" | "multi"
    # Reserved: per-insight confidence is intentionally never populated yet.
    confidence: Optional[float] = None

    def first_marker_time(self) -> Timestamp:
        return min(m.timestamp for m in self.markers)

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "title": self.title,
            "body": self.body,
            "aspect": self.aspect.value,
            "sourceAgent": self.source_agent,
            "confidence": self.confidence,
            "markerActionIds": [m.action_id for m in self.markers],
        }


@dataclass
class _Finding:
    title: str
    body: str
    aspect: AgentKind
    action_ids: list[str]


# -- aspect digests -----------------------------------------------------------


def _fmt_seconds(s: float) -> str:
    return f"{s:.1f}s"


def _space_digest(store: SessionStore) -> str:
    view = make_view(store)
    lines = ["Spatial trace summary (positions in meters):"]
    for tp in trace_map(view, grid=0.25):
        ids = ", ".join(f"id={i}" for i in dict.fromkeys(tp.action_ids[:3]))
        lines.append(
            f"- user={tp.user} action={tp.action_name} visits={tp.count} "
            f"at=({tp.pos[0]:.2f},{tp.pos[1]:.2f},{tp.pos[2]:.2f}) {ids}"
        )
    return "\n".join(lines)


def _time_digest(store: SessionStore) -> str:
    view = make_view(store)
    span = store.meta.recording_end.diff_seconds(store.meta.recording_start)
    tl = bin_timeline(view, TimeDelta.from_seconds(max(1.0, span / 24)))
    lines = [f"Temporal summary over {_fmt_seconds(span)} session:"]
    for row, (user, action) in enumerate(tl.rows):
        total = sum(tl.counts[row])
        busiest = max(range(len(tl.bins)), key=lambda b: tl.counts[row][b], default=0)
        rids = [r.id for r in view.records() if r.user == user and r.name == action]
        ids = ", ".join(f"id={i}" for i in rids[:3])
        lines.append(
            f"- user={user} action={action} bins-touched={total} "
            f"busiest-bin={busiest} {ids}"
        )
    return "\n".join(lines)


def _action_digest(store: SessionStore) -> str:
    lines = ["Action inventory:"]
    top: Counter = Counter()
    for user in store.meta.users:
        for r in store.users.get(user, []):
            top[r.name] += 1
    if top:
        lines.insert(0, f"top action: {top.most_common(1)[0][0]}")
    for user in store.meta.users:
        by_name: dict[str, list[str]] = {}
        for r in store.users.get(user, []):
            by_name.setdefault(r.name, []).append(r.id)
        for name, ids in by_name.items():
            first = store.get_record(ids[0])
            lines.append(
                f"- user={user} action={name} type={first.type.value} count={len(ids)} "
                f"trigger={first.trigger_source} id={ids[0]}"
            )
    return "\n".join(lines)


def _intent_digest(store: SessionStore) -> str:
    lines = ["Stated and estimated intents:"]
    for r in store.all_records():
        flag = " (estimated)" if r.intent_estimated else ""
        lines.append(f"- user={r.user} action={r.name} id={r.id} intent={r.intent}{flag}")
    return "\n".join(lines)


def _context_digest(store: SessionStore) -> str:
    lines = ["Context descriptions and referents:"]
    for r in store.all_records():
        if r.context_description:
            lines.append(f"- id={r.id} user={r.user} context: {r.context_description}")
        if r.referent_name:
            lines.append(f"- id={r.id} user={r.user} referent: {r.referent_name}")
    transcripts = [
        f"- id={r.id} said: {store.asset_bytes(a).decode('utf-8')}"
        for r in store.all_records()
        for a in r.context
        if a.kind is AssetKind.AUDIO_TRANSCRIPT and store.root is not None
    ]
    if transcripts:
        lines.append("Transcripts:")
        lines.extend(transcripts)
    return "\n".join(lines)


def _user_digest(store: SessionStore) -> str:
    lines = [f"top user: {store.meta.users[0] if store.meta.users else 'none'}",
             "Per-user activity and overlap:"]
    for user in store.meta.users:
        records = store.users.get(user, [])
        if not records:
            lines.append(f"- user={user} records=0")
            continue
        start = min(r.start_time for r in records)
        end = max(r.end_time() for r in records)
        lines.append(
            f"- user={user} records={len(records)} active={start.format()}..{end.format()} "
            f"id={records[0].id}"
        )
    return "\n".join(lines)


_DIGESTS = {
    AgentKind.SPACE: _space_digest,
    AgentKind.TIME: _time_digest,
    AgentKind.ACTION: _action_digest,
    AgentKind.INTENT: _intent_digest,
    AgentKind.CONTEXT: _context_digest,
    AgentKind.USER: _user_digest,
}


def build_aspect_digest(store: SessionStore, aspect: AgentKind) -> str:
    return _DIGESTS[aspect](store)


def build_combined_digest(store: SessionStore) -> str:
    return "\n\n".join(_DIGESTS[a](store) for a in AgentKind)


# -- generation ---------------------------------------------------------------


def _parse_findings(raw: str, default_aspect: AgentKind) -> list[_Finding]:
    data = json.loads(raw)
    if not isinstance(data, list):
        raise ValueError("findings must be a JSON list")
    out = []
    for item in data:
        aspect_name = str(item.get("aspect", default_aspect.value))
        try:
            aspect = AgentKind(aspect_name)
        except ValueError:
            aspect = default_aspect
        out.append(
            _Finding(
                title=str(item["title"]).strip(),
                body=str(item["body"]).strip(),
                aspect=aspect,
                action_ids=[str(i) for i in item.get("actionIds", [])],
            )
        )
    return out


def _tokens(title: str) -> frozenset[str]:
    return frozenset(t for t in title.casefold().split() if t)


def _jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def _dedup(findings: list[_Finding], threshold: float) -> list[_Finding]:
    """Merge near-identical titles (token Jaccard >= threshold); the first
    occurrence keeps its text, markers union."""
    kept: list[_Finding] = []
    for f in findings:
        toks = _tokens(f.title)
        merged = False
        for k in kept:
            if _jaccard(toks, _tokens(k.title)) >= threshold:
                k.action_ids.extend(i for i in f.action_ids if i not in k.action_ids)
                merged = True
                break
        if not merged:
            kept.append(_Finding(f.title, f.body, f.aspect, list(f.action_ids)))
    return kept


_ASPECT_ORDER = {a: i for i, a in enumerate(AgentKind)}


def generate_insights(
    store: SessionStore,
    aoi: str,
    mode: str,
    client: LlmClient,
    max_insights: int = MAX_INSIGHTS,
    dedup_threshold: float = DEDUP_JACCARD,
    parallel: int = 6,
) -> list[Insight]:
    """Produce the curated insight list (1..max) with validated AoI markers.

    The AoI prompt is optional; an empty string still yields insights across
    all aspects.  In multi mode a failing agent only removes its own aspect;
    ``AllAgentsFailed`` is raised when nothing survives.
    """
    if mode not in ("single", "multi"):
        raise XractError(f"mode must be single|multi: {mode!r}")
    aoi_line = f"\nAnalysis-of-interest: {aoi}" if aoi else "\nAnalysis-of-interest: (none given)"

    findings: list[_Finding] = []
    failures: list[str] = []
    if mode == "multi":
        def run(aspect: AgentKind) -> tuple[AgentKind, Optional[list[_Finding]], Optional[str]]:
            request = LlmRequest(
                system=load_prompt(f"agent_{aspect.value.lower()}"),
                user=build_aspect_digest(store, aspect) + aoi_line,
                tag=f"agent:{aspect.value}",
            )
            try:
                return aspect, _parse_findings(client.complete(request), aspect), None
            except (ClientFailure, ValueError, KeyError, json.JSONDecodeError) as e:
                return aspect, None, str(e)

        with ThreadPoolExecutor(max_workers=max(1, min(parallel, len(AgentKind)))) as pool:
            results = {a: (f, err) for a, f, err in pool.map(run, list(AgentKind))}
        for aspect in AgentKind:  # fixed merge order, independent of scheduling
            parsed, err = results[aspect]
            if parsed is None:
                failures.append(f"{aspect.value}: {err}")
            else:
                findings.extend(parsed)
    else:
        request = LlmRequest(
            system=load_prompt("agent_single"),
            user=build_combined_digest(store) + aoi_line,
            tag="agent:single",
        )
        try:
            findings.extend(_parse_findings(client.complete(request), AgentKind.ACTION))
        except (ClientFailure, ValueError, KeyError, json.JSONDecodeError) as e:
            failures.append(f"single: {e}")

    # Coordinator: validate citations against the store, then curate.
    # A usable finding cites at least one real action and reads as a short
    # title over a longer body.
    valid: list[_Finding] = []
    for f in findings:
        ids = [i for i in dict.fromkeys(f.action_ids) if store.has_record(i)]
        if ids and f.title and f.body and len(f.title) < len(f.body):
            valid.append(_Finding(f.title, f.body, f.aspect, ids))
    if not valid:
        raise AllAgentsFailed(
            "no usable findings" + (f" (failures: {'; '.join(failures)})" if failures else "")
        )

    curated = _dedup(valid, dedup_threshold)
    if len(curated) > max_insights:
        curated.sort(
            key=lambda f: (
                -len(f.action_ids),
                _ASPECT_ORDER[f.aspect],
                min(store.get_record(i).start_time for i in f.action_ids),
            )
        )
        curated = curated[:max_insights]
    curated.sort(
        key=lambda f: (
            min(store.get_record(i).start_time for i in f.action_ids),
            _ASPECT_ORDER[f.aspect],
        )
    )

    insights: list[Insight] = []
    markers_by_action: dict[str, AoIMarker] = {}
    for n, f in enumerate(curated, start=1):
        iid = f"ins-{n:02d}"
        markers = []
        for action_id in sorted(f.action_ids, key=lambda i: store.get_record(i).start_time):
            marker = markers_by_action.get(action_id)
            if marker is None:
                marker = AoIMarker(
                    action_id=action_id, timestamp=store.get_record(action_id).start_time
                )
                markers_by_action[action_id] = marker
            marker.insight_ids.append(iid)
            markers.append(marker)
        insights.append(
            Insight(id=iid, title=f.title, body=f.body, aspect=f.aspect, markers=markers,
                    source_agent=mode)
        )
    return insights


def collect_markers(insights: list[Insight]) -> list[AoIMarker]:
    """Unique markers across insights, sorted by (timestamp, actionId)."""
    seen: dict[str, AoIMarker] = {}
    for ins in insights:
        for m in ins.markers:
            seen.setdefault(m.action_id, m)
    return sorted(seen.values(), key=lambda m: (m.timestamp, m.action_id))


def insights_to_json(insights: list[Insight], aoi: str, mode: str) -> dict[str, Any]:
    return {
        "aoi": aoi,
        "mode": mode,
        "insights": [i.to_json_dict() for i in insights],
        "markers": [m.to_json_dict() for m in collect_markers(insights)],
    }
