from __future__ import annotations

import json
from dataclasses import dataclass, field

import pytest

from xract.insight.agents import (
    AgentKind,
    AllAgentsFailed,
    collect_markers,
    generate_insights,
    insights_to_json,
)
from xract.insight.client import ClientFailure, LlmClient, LlmRequest, MockLlmClient
from xract.insight.evaluate import (
    AllRunsFailed,
    EvalScores,
    REFERENCE_EVAL_FIXTURE,
    comparison_json,
    evaluate_insights,
    render_comparison,
)
from xract.insight.processor import classify_referent, describe_context, estimate_intent, run_batch
from xract.jsonio import dumps_compact
from xract.uad.records import POST_DEFINED, RealityType


@dataclass
class FakeClient(LlmClient):
    """Table-driven stand-in: responses per tag prefix, with a call ledger."""

    responses: dict[str, list[str]] = field(default_factory=dict)
    fail_tags: tuple[str, ...] = ()
    calls: list[str] = field(default_factory=list)

    def complete(self, request: LlmRequest) -> str:
        self.calls.append(request.tag)
        if any(request.tag.startswith(t) for t in self.fail_tags):
            raise ClientFailure(f"injected failure for {request.tag}")
        for prefix, queue in self.responses.items():
            if request.tag.startswith(prefix) and queue:
                return queue.pop(0) if len(queue) > 1 else queue[0]
        raise ClientFailure(f"no scripted response for {request.tag}")


class FailingAspects(LlmClient):
    """Delegates to an inner client except for the given tags."""

    def __init__(self, inner: LlmClient, fail_tags: tuple[str, ...]):
        self.inner = inner
        self.fail_tags = fail_tags

    def complete(self, request: LlmRequest) -> str:
        if any(request.tag.startswith(t) for t in self.fail_tags):
            raise ClientFailure(f"killed {request.tag}")
        return self.inner.complete(request)


class TestClassifyReferent:
    def test_fixture_pass_through(self, a3):
        # The a3 green-marker fixture carries the couch label at 0.92.
        record = next(
            r for r in a3.store.all_records()
            if r.name == "PlaceMarker" and "green" in r.intent
        )
        assert record.referent_name == "couch@0.92"

    def test_virtual_referent_skipped(self, a4):
        virtual = next(r for r in a4.store.all_records() if r.referent_name == "Bar3")
        result = classify_referent(virtual, a4.store, a4.client)
        assert not result.changed
        assert "skipped" in result.diagnostics[0]
        assert a4.client.call_count("classify") == 0

    def test_malformed_reply_retried_then_unclassified(self, a3):
        record = next(
            r for r in a3.store.all_records() if r.referent_type is RealityType.PHYSICAL
        ).replace(referent_name="")
        client = FakeClient(responses={"classify": ["???"]})
        result = classify_referent(record, a3.store, client)
        assert not result.changed
        assert "after retry" in result.diagnostics[-1]
        assert client.calls == ["classify", "classify"]

    def test_client_failure_leaves_unclassified(self, a3):
        record = next(
            r for r in a3.store.all_records() if r.referent_type is RealityType.PHYSICAL
        ).replace(referent_name="")
        client = FakeClient(fail_tags=("classify",))
        result = classify_referent(record, a3.store, client)
        assert not result.changed and "unavailable" in result.diagnostics[0]


class TestDescribeContext:
    def test_description_set_from_mock(self, a4):
        described = [r for r in a4.store.all_records() if r.context_description]
        assert described, "processing should have described capture-bearing records"
        for r in described:
            assert r.name in r.context_description

    def test_record_without_captures_skipped(self, a4):
        bare = next(r for r in a4.store.all_records() if not r.context)
        result = describe_context(bare, a4.store, a4.client)
        assert not result.changed and "skipped" in result.diagnostics[0]

    def test_batch_call_count_oracle(self, a4):
        # Exactly one describe call per capture-bearing record, none hidden.
        records = [
            r.replace(context_description=None)
            for r in a4.store.all_records()
            if any(a.kind.value == "ContextRGB" for a in r.context)
        ]
        client = MockLlmClient()
        results = run_batch(records, lambda r: describe_context(r, a4.store, client))
        assert client.call_count("describe") == len(records)
        assert [res.record.id for res in results] == [r.id for r in records]
        assert all(res.changed for res in results)


class TestEstimateIntent:
    def test_post_defined_replaced_and_flagged(self, a4):
        speaks = [r for r in a4.store.all_records() if r.name == "Speak"]
        assert speaks and all(r.intent_estimated for r in speaks)
        assert all(r.intent != POST_DEFINED for r in speaks)

    def test_developer_intent_untouched(self, a4):
        fixed = next(r for r in a4.store.all_records() if r.name == "Navigate")
        result = estimate_intent(fixed, a4.store, a4.client)
        assert not result.changed and result.record.intent == fixed.intent
        assert a4.client.call_count("intent") == 0

    def test_failure_keeps_sentinel(self, a4):
        speak = next(r for r in a4.store.all_records() if r.name == "Speak")
        reverted = speak.replace(intent=POST_DEFINED, intent_estimated=False)
        client = FakeClient(fail_tags=("intent",))
        result = estimate_intent(reverted, a4.store, client)
        assert result.record.intent == POST_DEFINED
        assert not result.record.intent_estimated
        assert result.diagnostics

    def test_ledger_all_post_defined_estimated_on_success(self, a4):
        # No sentinel survives a successful mock pass.
        assert all(r.intent != POST_DEFINED for r in a4.store.all_records())


class TestGenerateInsights:
    def test_multi_mode_bounds_and_markers(self, a4):
        insights = generate_insights(a4.store, "", "multi", a4.client)
        assert 1 <= len(insights) <= 10
        session_range = (a4.store.meta.recording_start, a4.store.meta.recording_end)
        for ins in insights:
            assert ins.markers, "every insight needs at least one marker"
            assert ins.title and len(ins.title) < len(ins.body)
            for m in ins.markers:
                assert a4.store.has_record(m.action_id)
                assert session_range[0] <= m.timestamp <= session_range[1]
                assert ins.id in m.insight_ids

    def test_ordered_by_first_marker_timestamp(self, a4):
        insights = generate_insights(a4.store, "", "multi", a4.client)
        firsts = [i.first_marker_time() for i in insights]
        assert firsts == sorted(firsts)

    def test_aoi_optional(self, a4):
        without = generate_insights(a4.store, "", "multi", a4.client)
        aspects = {i.aspect for i in without}
        assert aspects == set(AgentKind)

    def test_single_mode(self, a4):
        insights = generate_insights(a4.store, "anything", "single", a4.client)
        assert 1 <= len(insights) <= 10
        assert all(i.source_agent == "single" for i in insights)

    def test_deterministic_output(self, a4):
        a = insights_to_json(generate_insights(a4.store, "focus", "multi", MockLlmClient()), "focus", "multi")
        b = insights_to_json(generate_insights(a4.store, "focus", "multi", MockLlmClient()), "focus", "multi")
        assert dumps_compact(a) == dumps_compact(b)

    def test_agent_call_count_oracle(self, a4):
        client = MockLlmClient()
        generate_insights(a4.store, "", "multi", client)
        assert client.call_count("agent:") == 6
        client2 = MockLlmClient()
        generate_insights(a4.store, "", "single", client2)
        assert client2.call_count("agent:") == 1

    def test_dedup_fixture_14_findings_5_duplicates(self, a4):
        ids = [r.id for r in a4.store.all_records()]
        # 14 raw findings; five of them are near-duplicate titles of earlier
        # ones (Jaccard >= 0.8 after case folding), each citing extra actions.
        originals = [
            ("Gaze dwell on the tall bar", [ids[0]]),
            ("Speech follows every tap", [ids[1]]),
            ("Two users split the room", [ids[2]]),
            ("Markers cluster near the couch", [ids[3]]),
            ("Navigation converges on the chart", [ids[4]]),
            ("Intent shifts after discussion", [ids[5]]),
            ("Bars read left to right", [ids[6]]),
            ("Couch is the regroup anchor", [ids[7]]),
            ("Idle gaps between speeches", [ids[8]]),
        ]
        dupes = [
            ("Gaze Dwell on the TALL bar", [ids[9]]),
            ("speech follows every tap", [ids[10]]),
            ("two users split THE room", [ids[11]]),
            ("markers cluster near the couch", [ids[0]]),
            ("navigation converges on the chart", [ids[1]]),
        ]
        findings = [
            {"title": t, "body": f"body for {t} with detail", "aspect": "Action", "actionIds": a}
            for t, a in originals + dupes
        ]
        client = FakeClient(responses={"agent:single": [dumps_compact(findings)]})
        insights = generate_insights(a4.store, "", "single", client)
        assert len(insights) == 9 <= 10
        merged = {i.title.casefold(): {m.action_id for m in i.markers} for i in insights}
        assert merged["gaze dwell on the tall bar"] == {ids[0], ids[9]}
        assert merged["markers cluster near the couch"] == {ids[3], ids[0]}

    def test_cap_at_ten(self, a4):
        ids = [r.id for r in a4.store.all_records()]
        findings = [
            {"title": f"finding number {i} entirely distinct {chr(65 + i)}",
             "body": "a longer explanation body with enough words to pass the length check",
             "aspect": "Action",
             "actionIds": [ids[i % len(ids)]]}
            for i in range(14)
        ]
        client = FakeClient(responses={"agent:single": [dumps_compact(findings)]})
        insights = generate_insights(a4.store, "", "single", client)
        assert len(insights) == 10

    def test_title_must_be_shorter_than_body(self, a4):
        ids = [r.id for r in a4.store.all_records()]
        findings = [
            {"title": "an extremely long headline that rambles on and on",
             "body": "short body", "aspect": "Action", "actionIds": [ids[0]]},
            {"title": "tight title",
             "body": "a body that is clearly longer than its title", "aspect": "Action",
             "actionIds": [ids[1]]},
        ]
        client = FakeClient(responses={"agent:single": [dumps_compact(findings)]})
        insights = generate_insights(a4.store, "", "single", client)
        assert [i.title for i in insights] == ["tight title"]

    def test_dangling_citations_dropped(self, a4):
        ids = [r.id for r in a4.store.all_records()]
        findings = [
            {"title": "good one", "body": "body text here", "aspect": "Action",
             "actionIds": [ids[0], "ghost-id"]},
            {"title": "all ghosts", "body": "body text here", "aspect": "Action",
             "actionIds": ["ghost-1", "ghost-2"]},
        ]
        client = FakeClient(responses={"agent:single": [dumps_compact(findings)]})
        insights = generate_insights(a4.store, "", "single", client)
        assert len(insights) == 1
        assert {m.action_id for m in insights[0].markers} == {ids[0]}

    def test_agent_isolation(self, a4):
        baseline = generate_insights(a4.store, "", "multi", MockLlmClient())
        wounded = generate_insights(
            a4.store, "", "multi", FailingAspects(MockLlmClient(), ("agent:Space",))
        )
        assert {i.aspect for i in baseline} - {i.aspect for i in wounded} == {AgentKind.SPACE}
        base_by_aspect = {i.aspect: (i.title, i.body) for i in baseline}
        for ins in wounded:
            assert base_by_aspect[ins.aspect] == (ins.title, ins.body)

    def test_all_agents_failed(self, a4):
        with pytest.raises(AllAgentsFailed):
            generate_insights(a4.store, "", "multi", FakeClient(fail_tags=("agent:",)))

    def test_markers_may_link_multiple_insights(self, a4):
        ids = [r.id for r in a4.store.all_records()]
        findings = [
            {"title": "first angle on the tap",
             "body": "body one, spelled out at enough length to outgrow its title",
             "aspect": "Action", "actionIds": [ids[0]]},
            {"title": "completely different second view",
             "body": "body two, also spelled out at enough length to outgrow its title",
             "aspect": "Time", "actionIds": [ids[0]]},
        ]
        client = FakeClient(responses={"agent:single": [dumps_compact(findings)]})
        insights = generate_insights(a4.store, "", "single", client)
        markers = collect_markers(insights)
        assert len(markers) == 1
        assert markers[0].insight_ids == ["ins-01", "ins-02"]


class TestEvaluate:
    @staticmethod
    def some_insights(bundle):
        return generate_insights(bundle.store, "", "multi", MockLlmClient())

    def test_constant_seven_judge(self, a4):
        client = FakeClient(responses={"judge": [dumps_compact({c: 7 for c in
                                                                ("c1", "c2", "c3", "c4", "c5")})]})
        scores = evaluate_insights(self.some_insights(a4), "", client, runs=4)
        assert scores.as_tuple() == (7.0, 7.0, 7.0, 7.0, 7.0)
        assert scores.runs == 4

    def test_mean_of_six_and_eight(self, a4):
        six = dumps_compact({c: 6 for c in ("c1", "c2", "c3", "c4", "c5")})
        eight = dumps_compact({c: 8 for c in ("c1", "c2", "c3", "c4", "c5")})
        client = FakeClient(responses={"judge": [six, eight]})
        scores = evaluate_insights(self.some_insights(a4), "", client, runs=2)
        assert scores.as_tuple() == (7.0, 7.0, 7.0, 7.0, 7.0)

    def test_scores_always_in_range(self, a4):
        scores = evaluate_insights(self.some_insights(a4), "aoi", MockLlmClient(), runs=5)
        assert all(0.0 <= v <= 10.0 for v in scores.as_tuple())

    def test_out_of_range_run_excluded(self, a4):
        bad = dumps_compact({"c1": 15, "c2": 7, "c3": 7, "c4": 7, "c5": 7})
        client = FakeClient(responses={"judge": [bad]})
        with pytest.raises(AllRunsFailed):
            evaluate_insights(self.some_insights(a4), "", client, runs=2)

    def test_invalid_scores_rejected_at_construction(self):
        with pytest.raises(Exception):
            EvalScores(c1=11, c2=0, c3=0, c4=0, c5=0, method="multi")

    def test_reference_comparison_rendering(self):
        single = EvalScores.from_values(REFERENCE_EVAL_FIXTURE["single"], "single", runs=10)
        multi = EvalScores.from_values(REFERENCE_EVAL_FIXTURE["multi"], "multi", runs=10)
        table = render_comparison(single=single, multi=multi)
        for value in ("8.20", "7.64", "9.38", "8.72", "8.00",
                      "8.73", "8.78", "9.29", "9.35", "8.90"):
            assert value in table
        for header in ("C1", "C2", "C3", "C4", "C5", "Single-agent", "Multi-agent"):
            assert header in table
        payload = comparison_json(single=single, multi=multi)
        assert payload["single"]["c3"] == 9.38 and payload["multi"]["c5"] == 8.90
