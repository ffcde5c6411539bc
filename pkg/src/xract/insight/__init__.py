"""Model-backed processing and multi-agent analytics insight generation."""

from xract.insight.agents import (
    AgentKind,
    AllAgentsFailed,
    AoIMarker,
    Insight,
    collect_markers,
    generate_insights,
    insights_to_json,
)
from xract.insight.client import (
    ClientFailure,
    LlmClient,
    LlmRequest,
    MockLlmClient,
    RemoteLlmClient,
    UnparseableResponse,
    resolve_client,
)
from xract.insight.evaluate import (
    AllRunsFailed,
    CRITERIA,
    EvalScores,
    REFERENCE_EVAL_FIXTURE,
    comparison_json,
    evaluate_insights,
    render_comparison,
)
from xract.insight.processor import (
    StepResult,
    classify_referent,
    describe_context,
    estimate_intent,
    run_batch,
)

__all__ = [
    "AgentKind",
    "AllAgentsFailed",
    "AllRunsFailed",
    "AoIMarker",
    "CRITERIA",
    "ClientFailure",
    "EvalScores",
    "Insight",
    "LlmClient",
    "LlmRequest",
    "MockLlmClient",
    "REFERENCE_EVAL_FIXTURE",
    "RemoteLlmClient",
    "StepResult",
    "UnparseableResponse",
    "classify_referent",
    "collect_markers",
    "comparison_json",
    "describe_context",
    "estimate_intent",
    "evaluate_insights",
    "generate_insights",
    "insights_to_json",
    "render_comparison",
    "resolve_client",
    "run_batch",
]
