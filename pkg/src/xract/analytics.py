"""Derived data behind the viewers: timeline bins, trace maps, referent and
duration statistics, and cross-linked selections.

Everything here is a deterministic pure function of (store, filter,
parameters); products carry a canonical JSON form consumed verbatim by the
HTTP layer so served numbers are the library's numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional

from xract.errors import XractError
from xract.ingest import SessionView, make_view, record_overlaps
from xract.jsonio import json_num
from xract.uad.records import ActionRecord, RealityType, classified_label
from xract.uad.times import TimeDelta, Timestamp

DEFAULT_TRACE_GRID = 0.05
DEFAULT_BIN_SECONDS = 1.0


@dataclass
class TimelineMatrix:
    rows: list[tuple[str, str]]  # (user, action name)
    bins: list[tuple[Timestamp, Timestamp]]
    counts: list[list[int]]
    bin_size: TimeDelta

    def row_max(self, row: int) -> int:
        """Default shading normalizer (per user-action row)."""
        return max(self.counts[row], default=0)

    def global_max(self) -> int:
        """Alternative normalizer for matrix-wide shading."""
        return max((c for row in self.counts for c in row), default=0)

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "rows": [{"user": u, "action": a} for u, a in self.rows],
            "bins": [{"start": b0.format(), "end": b1.format()} for b0, b1 in self.bins],
            "counts": [list(row) for row in self.counts],
            "binSize": self.bin_size.format(),
        }


@dataclass
class TracePoint:
    pos: tuple[float, float, float]
    user: str
    action_name: str
    count: int
    action_ids: list[str]  # one entry per contributing location sample

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "pos": [float(v) for v in self.pos],
            "user": self.user,
            "action": self.action_name,
            "count": self.count,
            "actionIds": list(self.action_ids),
        }


@dataclass
class ReferentStats:
    # (user, referent) -> [interaction count, total seconds]
    referents: dict[tuple[str, str], list[float]] = field(default_factory=dict)
    # (user, action) -> chronological durations in seconds
    durations: dict[tuple[str, str], list[float]] = field(default_factory=dict)
    approximate: bool = False  # set when a date-bearing duration was estimated

    def add(self, other: "ReferentStats") -> "ReferentStats":
        out = ReferentStats(approximate=self.approximate or other.approximate)
        for src in (self, other):
            for key, (count, secs) in src.referents.items():
                slot = out.referents.setdefault(key, [0, 0.0])
                slot[0] += count
                slot[1] += secs
            for key, ds in src.durations.items():
                out.durations.setdefault(key, []).extend(ds)
        return out

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "referents": [
                {"user": u, "referent": ref, "count": int(c), "totalSeconds": json_num(s)}
                for (u, ref), (c, s) in self.referents.items()
            ],
            "durations": [
                {"user": u, "action": a, "seconds": [json_num(v) for v in ds]}
                for (u, a), ds in self.durations.items()
            ],
            "approximate": self.approximate,
        }


def _span_ms(t0: Timestamp, t1: Timestamp) -> int:
    return round((t1.dt - t0.dt).total_seconds() * 1000)


def bin_timeline(view: SessionView, bin_size: TimeDelta) -> TimelineMatrix:
    """Per-(user, action) occurrence counts over contiguous bins.

    An instance increments every bin its interval intersects, so long
    continuous actions shade as unbroken spans.  Rows are ordered by user
    (store order) then first occurrence.
    """
    width_s = bin_size.as_seconds(strict=False)
    if width_s <= 0:
        raise XractError(f"bin size must be positive: {bin_size}")
    start, end = view.time_bounds()
    span = _span_ms(start, end)
    records = view.records()

    bins: list[tuple[Timestamp, Timestamp]] = []
    if span > 0:
        width_ms = max(1, round(width_s * 1000))
        n = math.ceil(span / width_ms)
        for i in range(n):
            b0 = start + TimeDelta.from_seconds(i * width_ms / 1000)
            b1 = start + TimeDelta.from_seconds(min((i + 1) * width_ms, span) / 1000)
            bins.append((b0, b1))

    user_order = {u: i for i, u in enumerate(view.store.meta.users)}
    row_index: dict[tuple[str, str], int] = {}
    rows: list[tuple[str, str]] = []
    ordered = sorted(records, key=lambda r: (user_order.get(r.user, len(user_order)), r.start_time))
    for r in ordered:
        key = (r.user, r.name)
        if key not in row_index:
            row_index[key] = len(rows)
            rows.append(key)
    counts = [[0] * len(bins) for _ in rows]
    for r in records:
        row = row_index[(r.user, r.name)]
        for b, (b0, b1) in enumerate(bins):
            if record_overlaps(r, b0, b1):
                counts[row][b] += 1
    return TimelineMatrix(rows=rows, bins=bins, counts=counts, bin_size=bin_size)


def colormap_intensity(count: int, row_max: int) -> float:
    """Linear shading weight: the row's max count maps to full intensity."""
    if count < 0 or row_max < count:
        raise XractError(f"count {count} outside [0, {row_max}]")
    if row_max == 0:
        return 0.0
    return count / row_max


def trace_map(view: SessionView, grid: float = DEFAULT_TRACE_GRID) -> list[TracePoint]:
    """Aggregate every location sample into per-(cell, user, action) points.

    The sum of counts always equals the number of location samples in the
    view; quantization only regroups, never drops.
    """
    if grid <= 0:
        raise XractError(f"trace grid must be positive: {grid}")
    points: dict[tuple, TracePoint] = {}
    for r in view.records():
        for t in r.location:
            cell = tuple(math.floor(c / grid) for c in t.pos)
            key = (r.user, r.name, cell)
            tp = points.get(key)
            if tp is None:
                points[key] = TracePoint(
                    pos=t.pos, user=r.user, action_name=r.name, count=1, action_ids=[r.id]
                )
            else:
                tp.count += 1
                tp.action_ids.append(r.id)
    return list(points.values())


def _referent_key(record: ActionRecord) -> Optional[str]:
    if not record.referent_name:
        return None
    if record.referent_type is RealityType.PHYSICAL:
        label, conf = classified_label(record.referent_name)
        return label if conf is not None else record.referent_name
    return record.referent_name


def referent_stats(view: SessionView) -> ReferentStats:
    """Interaction counts + total engagement time per (user, referent), and
    per-(user, action) duration lists.

    Physical referents are keyed by their classified label, virtual ones by
    the stored object name.
    """
    stats = ReferentStats()
    for r in sorted(view.records(), key=lambda r: r.start_time):
        strict_ok = not r.duration.has_date_part
        secs = r.duration.as_seconds(strict=False)
        if not strict_ok:
            stats.approximate = True
        key = _referent_key(r)
        if key is not None:
            slot = stats.referents.setdefault((r.user, key), [0, 0.0])
            slot[0] += 1
            slot[1] += secs
        stats.durations.setdefault((r.user, r.name), []).append(secs)
    return stats


@dataclass
class LinkedSelection:
    view: SessionView
    timeline: TimelineMatrix
    traces: list[TracePoint]
    stats: ReferentStats

    def record_ids(self) -> list[str]:
        return self.view.record_ids()

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "recordIds": self.record_ids(),
            "timeline": self.timeline.to_json_dict(),
            "traces": [t.to_json_dict() for t in self.traces],
            "stats": self.stats.to_json_dict(),
        }


def linked_selection(
    store,
    t0: Optional[Timestamp] = None,
    t1: Optional[Timestamp] = None,
    users: Optional[list[str]] = None,
    actions: Optional[list[str]] = None,
    bin_size: Optional[TimeDelta] = None,
    grid: float = DEFAULT_TRACE_GRID,
) -> LinkedSelection:
    """All four viewer products derived from one identical filtered view."""
    view = make_view(store, users=users, actions=actions, t0=t0, t1=t1)
    size = bin_size or TimeDelta.from_seconds(DEFAULT_BIN_SECONDS)
    return LinkedSelection(
        view=view,
        timeline=bin_timeline(view, size),
        traces=trace_map(view, grid=grid),
        stats=referent_stats(view),
    )
