from __future__ import annotations

import math
import random

import pytest

from xract.analytics import (
    LinkedSelection,
    bin_timeline,
    colormap_intensity,
    linked_selection,
    referent_stats,
    trace_map,
)
from xract.errors import XractError
from xract.ingest import ingest_directory, make_view, record_overlaps
from xract.simulator import ScenarioSpec, generate_session
from xract.uad.records import ActionType, Transform, Virtuality
from xract.uad.recorder import RecorderHandle
from xract.uad.store import write_session
from xract.uad.times import TimeDelta, Timestamp

T0 = Timestamp.parse("240801:090000:000")


def t(seconds: float) -> Timestamp:
    return T0 + TimeDelta.from_seconds(seconds)


def build_store(tmp_path, entries):
    """entries: (user, name, type, start_s, dur_s, positions)."""
    rec = RecorderHandle(tmp_path / "raw", app_name="A", virtuality=Virtuality.VR,
                         asynchronous=False)
    for user, name, typ, start_s, dur_s, positions in entries:
        rec.log(
            name=name, action_type=typ, intent="i", user=user,
            location=[Transform(pos=p) for p in positions],
            trigger_source="XRController",
            start_time=t(start_s), duration=TimeDelta.from_seconds(dur_s),
        )
    rec.finalize(recording_start=T0, recording_end=t(60))
    return write_session(ingest_directory(tmp_path / "raw"), tmp_path / "cooked")


def brute_force_bin_counts(records, bins):
    """Independent oracle: per-row counts via exhaustive (instance, bin) pairs."""
    counts = {}
    for r in records:
        for b, (b0, b1) in enumerate(bins):
            if record_overlaps(r, b0, b1):
                counts[(r.user, r.name, b)] = counts.get((r.user, r.name, b), 0) + 1
    return counts


class TestBinTimeline:
    def test_single_action_single_bin(self, tmp_path):
        store = build_store(tmp_path, [("u", "Tap", ActionType.DISCRETE, 5, 0, [(0, 0, 0)])])
        view = make_view(store)
        m = bin_timeline(view, TimeDelta.from_seconds(120))
        assert len(m.rows) == 1 and len(m.bins) == 1
        assert m.counts == [[1]]

    def test_span_hits_every_intersected_bin(self, tmp_path):
        # Action spanning seconds [20, 45) with 10 s bins -> bins 2, 3, 4.
        store = build_store(
            tmp_path, [("u", "Move", ActionType.CONTINUOUS, 20, 25, [(0, 0, 0), (1, 0, 0)])]
        )
        m = bin_timeline(make_view(store), TimeDelta.from_seconds(10))
        assert m.counts[0] == [0, 0, 1, 1, 1, 0]

    def test_rows_ordered_by_user_then_first_occurrence(self, tmp_path):
        store = build_store(tmp_path, [
            ("a", "Late", ActionType.DISCRETE, 30, 0, [(0, 0, 0)]),
            ("a", "Early", ActionType.DISCRETE, 1, 0, [(0, 0, 0)]),
            ("b", "Only", ActionType.DISCRETE, 2, 0, [(0, 0, 0)]),
        ])
        m = bin_timeline(make_view(store), TimeDelta.from_seconds(60))
        assert m.rows == [("User1", "Early"), ("User1", "Late"), ("User2", "Only")]

    def test_brute_force_oracle_on_simulator_data(self, a2):
        view = make_view(a2.store)
        m = bin_timeline(view, TimeDelta.from_seconds(1))
        oracle = brute_force_bin_counts(view.records(), m.bins)
        for ri, (user, name) in enumerate(m.rows):
            for b in range(len(m.bins)):
                assert m.counts[ri][b] == oracle.get((user, name, b), 0)

    def test_bin_refinement_preserves_coverage(self, a4):
        view = make_view(a4.store)
        wide = bin_timeline(view, TimeDelta.from_seconds(4))
        narrow = bin_timeline(view, TimeDelta.from_seconds(2))
        assert wide.rows == narrow.rows
        for ri in range(len(wide.rows)):
            assert (sum(wide.counts[ri]) > 0) == (sum(narrow.counts[ri]) > 0)
            assert sum(narrow.counts[ri]) >= 1  # every instance still lands somewhere

    def test_empty_view_zero_rows(self, a4):
        view = make_view(a4.store, users=["Ghost"])
        m = bin_timeline(view, TimeDelta.from_seconds(1))
        assert m.rows == [] and m.counts == []

    def test_zero_bin_size_rejected(self, a4):
        with pytest.raises(XractError):
            bin_timeline(make_view(a4.store), TimeDelta())


class TestColormap:
    def test_examples(self):
        assert colormap_intensity(0, 5) == 0.0
        assert colormap_intensity(5, 5) == 1.0
        assert colormap_intensity(2, 8) == 0.25  # linear-map oracle: 2/8

    def test_monotone(self):
        vals = [colormap_intensity(c, 10) for c in range(11)]
        assert vals == sorted(vals) and vals[-1] == 1.0

    def test_out_of_range_rejected(self):
        with pytest.raises(XractError):
            colormap_intensity(6, 5)

    def test_row_and_global_normalizers(self, a4):
        m = bin_timeline(make_view(a4.store), TimeDelta.from_seconds(2))
        gmax = m.global_max()
        assert gmax == max(m.row_max(i) for i in range(len(m.rows)))
        for i in range(len(m.rows)):
            assert colormap_intensity(m.row_max(i), gmax) <= 1.0


class TestTraceMap:
    def test_same_spot_groups(self, tmp_path):
        store = build_store(tmp_path, [
            ("u", "Tap", ActionType.DISCRETE, 1, 0, [(1.0, 2.0, 3.0)]),
            ("u", "Tap", ActionType.DISCRETE, 2, 0, [(1.0, 2.0, 3.0)]),
        ])
        points = trace_map(make_view(store))
        assert len(points) == 1
        assert points[0].count == 2
        assert len(points[0].action_ids) == 2
        assert points[0].pos == (1.0, 2.0, 3.0)

    def test_empty_view(self, a4):
        assert trace_map(make_view(a4.store, users=["Ghost"])) == []

    def test_count_conservation_vs_manifest(self, a4):
        points = trace_map(make_view(a4.store))
        assert sum(p.count for p in points) == a4.manifest["totals"]["locationSamples"]

    def test_quantization_only_regroups(self, a4):
        view = make_view(a4.store)
        for grid in (0.01, 0.05, 0.5, 10.0):
            points = trace_map(view, grid=grid)
            assert sum(p.count for p in points) == a4.manifest["totals"]["locationSamples"]

    def test_grouping_respects_user_and_action(self, tmp_path):
        store = build_store(tmp_path, [
            ("u", "Tap", ActionType.DISCRETE, 1, 0, [(0.0, 0.0, 0.0)]),
            ("v", "Tap", ActionType.DISCRETE, 2, 0, [(0.0, 0.0, 0.0)]),
            ("u", "Poke", ActionType.DISCRETE, 3, 0, [(0.0, 0.0, 0.0)]),
        ])
        assert len(trace_map(make_view(store))) == 3


class TestReferentStats:
    def test_single_touch(self, tmp_path):
        rec = RecorderHandle(tmp_path / "raw", app_name="A", virtuality=Virtuality.VR,
                             asynchronous=False)
        rec.log(name="Touch", action_type=ActionType.DISCRETE, intent="i", user="u",
                location=[Transform(pos=(0, 0, 0))], trigger_source="XRController",
                start_time=t(1), duration=TimeDelta.from_seconds(2),
                referent_name="Cube1")
        rec.finalize()
        store = write_session(ingest_directory(tmp_path / "raw"), tmp_path / "cooked")
        stats = referent_stats(make_view(store))
        assert stats.referents[("User1", "Cube1")] == [1, 2.0]
        assert stats.durations[("User1", "Touch")] == [2.0]

    def test_study_scale_262_cubes_27_spheres(self, tmp_path):
        # Scenario constructed with the published interaction counts; the
        # manifest is the counting oracle.
        script = {
            "preset": "custom",
            "appName": "ScaleCheck",
            "virtuality": "VR",
            "contextReality": "Virtual",
            "baseTime": "240801:120000:000",
            "camera": {"width": 64, "height": 48, "fx": 60.0, "fy": 60.0, "cx": 32.0, "cy": 24.0},
            "scene": {"primitives": [
                {"type": "plane", "name": "wall", "point": [0, 0, 4],
                 "normal": [0, 0, -1], "color": [50, 50, 50]}]},
            "users": [
                {"originalId": "subject-one", "script": [
                    {"action": "Touch", "type": "Discrete", "intent": "Grab",
                     "trigger": "XRController", "at": 0, "repeat": 40, "every": 500,
                     "pos": [0, 1, 0],
                     "referent": {"object": "Cube", "reality": "Virtual", "model": False}}]},
                {"originalId": "subject-two", "script": [
                    {"action": "GazeAt", "type": "Discrete", "intent": "Inspect",
                     "trigger": "XRHMD", "at": 100, "repeat": 262, "every": 400,
                     "pos": [0, 1, 0], "duration": 150,
                     "referent": {"object": "Cube", "reality": "Virtual", "model": False}},
                    {"action": "Touch", "type": "Discrete", "intent": "Grab",
                     "trigger": "XRController", "at": 300, "repeat": 27, "every": 900,
                     "pos": [1, 1, 0],
                     "referent": {"object": "Sphere", "reality": "Virtual", "model": False}}]},
            ],
        }
        _, manifest = generate_session(
            ScenarioSpec(preset="custom", seed=7, script=script), tmp_path / "raw"
        )
        store = write_session(ingest_directory(tmp_path / "raw"), tmp_path / "cooked")
        assert manifest["users"]["User2"]["counts"]["byReferent"] == {"Cube": 262, "Sphere": 27}
        stats = referent_stats(make_view(store))
        assert stats.referents[("User2", "Cube")][0] == 262
        assert stats.referents[("User2", "Sphere")][0] == 27
        assert stats.referents[("User1", "Cube")][0] == 40

    def test_empty_view(self, a4):
        stats = referent_stats(make_view(a4.store, users=["Ghost"]))
        assert stats.referents == {} and stats.durations == {}

    def test_physical_keyed_by_classified_label(self, a4):
        stats = referent_stats(make_view(a4.store))
        assert ("User2", "couch") in stats.referents
        assert not any("couch@" in key for _, key in stats.referents)

    def test_additivity(self, a4):
        full = referent_stats(make_view(a4.store))
        a = referent_stats(make_view(a4.store, users=["User1"]))
        b = referent_stats(make_view(a4.store, users=["User2"]))
        combined = a.add(b)
        assert combined.referents == full.referents
        assert combined.durations == full.durations

    def test_totals_equal_sum_of_contributions(self, a4):
        stats = referent_stats(make_view(a4.store))
        for (user, key), (count, total) in stats.referents.items():
            records = [
                r for r in a4.store.all_records()
                if r.user == user and r.referent_name.split("@")[0] == key
            ]
            assert count == len(records)
            assert total == pytest.approx(
                sum(r.duration.as_seconds(strict=False) for r in records)
            )


class TestLinkedSelection:
    def test_full_range_matches_unfiltered(self, a4):
        full = linked_selection(a4.store)
        assert set(full.record_ids()) == {r.id for r in a4.store.all_records()}
        assert sum(p.count for p in full.traces) == a4.manifest["totals"]["locationSamples"]

    def test_empty_range_all_empty(self, a4):
        t0 = a4.store.meta.recording_start
        sel = linked_selection(a4.store, t0=t0, t1=t0)
        assert sel.record_ids() == []
        assert sel.traces == [] and sel.stats.referents == {}
        assert all(all(c == 0 for c in row) for row in sel.timeline.counts)

    def test_products_share_identical_record_set(self, a4):
        start = a4.store.meta.recording_start
        sel = linked_selection(a4.store, t0=start, t1=t_mid(a4))
        ids = set(sel.record_ids())
        timeline_rows = {
            (u, a) for (u, a), row in zip(sel.timeline.rows, sel.timeline.counts)
            if any(row)
        }
        assert timeline_rows == {(r.user, r.name) for r in sel.view.records()}
        assert {(p.user, p.action_name) for p in sel.traces} <= {
            (r.user, r.name) for r in sel.view.records()
        }
        trace_ids = {i for p in sel.traces for i in p.action_ids}
        assert trace_ids <= ids

    def test_random_selections_match_brute_force(self, a4):
        rng = random.Random(99)
        records = a4.store.all_records()
        span = a4.store.meta.recording_end.diff_seconds(a4.store.meta.recording_start)
        for _ in range(50):
            lo = rng.uniform(0, span)
            hi = rng.uniform(lo, span)
            t0 = a4.store.meta.recording_start + TimeDelta.from_seconds(lo)
            t1 = a4.store.meta.recording_start + TimeDelta.from_seconds(hi)
            sel = linked_selection(a4.store, t0=t0, t1=t1)
            brute = {r.id for r in records if record_overlaps(r, t0, t1)}
            assert set(sel.record_ids()) == brute


def t_mid(bundle) -> Timestamp:
    span = bundle.store.meta.recording_end.diff_seconds(bundle.store.meta.recording_start)
    return bundle.store.meta.recording_start + TimeDelta.from_seconds(span / 2)

