"""Self-evaluation of generated insights on the five 0-10 criteria, plus the
single- vs multi-agent comparison rendering."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Optional

from xract.errors import XractError
from xract.insight.agents import Insight
from xract.insight.client import ClientFailure, LlmClient, LlmRequest
from xract.insight.processor import load_prompt

CRITERIA = ("c1", "c2", "c3", "c4", "c5")

CRITERIA_LABELS = {
    "c1": "Relevance to type of analysis",
    "c2": "Compliance to analysis-of-interest",
    "c3": "Alignment of insight to the title",
    "c4": "Alignment of insight to action",
    "c5": "Overall diversity of insights",
}

#: Published reference comparison, kept as a display fixture for the report
#: renderer; not a reproduction target for any live backend.
REFERENCE_EVAL_FIXTURE = {
    "single": (8.20, 7.64, 9.38, 8.72, 8.00),
    "multi": (8.73, 8.78, 9.29, 9.35, 8.90),
}


class AllRunsFailed(XractError):
    """Every judging run errored; no scores available."""


@dataclass(frozen=True)
class EvalScores:
    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    method: str  # "single" | "multi"
    runs: int = 1

    def __post_init__(self) -> None:
        for c in CRITERIA:
            v = getattr(self, c)
            if not (0.0 <= v <= 10.0):
                raise XractError(f"{c}={v} outside [0,10]")

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, c) for c in CRITERIA)

    def to_json_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {c: getattr(self, c) for c in CRITERIA}
        out["method"] = self.method
        out["runs"] = self.runs
        return out

    @classmethod
    def from_values(cls, values, method: str, runs: int = 1) -> "EvalScores":
        v = list(values)
        return cls(c1=v[0], c2=v[1], c3=v[2], c4=v[3], c5=v[4], method=method, runs=runs)


def _insight_block(insights: list[Insight]) -> str:
    lines = []
    for i in insights:
        lines.append(f"[{i.id}] ({i.aspect.value}) {i.title}\n    {i.body}")
    return "\n".join(lines)


def evaluate_insights(
    insights: list[Insight], aoi: str, client: LlmClient, runs: int = 3, method: str = "multi"
) -> EvalScores:
    """Score an insight set, averaging each criterion over N judging runs.

    Failed runs are excluded from the mean; if every run fails the evaluation
    raises ``AllRunsFailed``.
    """
    if runs < 1:
        raise XractError(f"need at least one judging run, got {runs}")
    if not insights:
        raise XractError("nothing to evaluate")
    block = _insight_block(insights)
    collected: list[tuple[float, ...]] = []
    failures: list[str] = []
    for run in range(1, runs + 1):
        request = LlmRequest(
            system=load_prompt("judge"),
            user=(
                f"judging run: {run}\nanalysis-of-interest: {aoi or '(none)'}\n"
                f"insights:\n{block}\nScore the five criteria."
            ),
            seed=run,
            tag="judge",
        )
        try:
            d = json.loads(client.complete(request))
            scores = tuple(float(d[c]) for c in CRITERIA)
            if any(not (0.0 <= s <= 10.0) for s in scores):
                raise ValueError(f"scores out of range: {scores}")
            collected.append(scores)
        except (ClientFailure, ValueError, KeyError, json.JSONDecodeError) as e:
            failures.append(f"run {run}: {e}")
    if not collected:
        raise AllRunsFailed("; ".join(failures))
    means = tuple(sum(s[i] for s in collected) / len(collected) for i in range(len(CRITERIA)))
    return EvalScores.from_values(means, method=method, runs=len(collected))


def render_comparison(
    single: Optional[EvalScores] = None, multi: Optional[EvalScores] = None
) -> str:
    """Human-readable per-criterion comparison table of the two methods."""
    header = f"{'Method':<14}" + "".join(f"{c.upper():>8}" for c in CRITERIA)
    lines = [header, "-" * len(header)]
    for label, scores in (("Single-agent", single), ("Multi-agent", multi)):
        if scores is None:
            continue
        lines.append(f"{label:<14}" + "".join(f"{v:>8.2f}" for v in scores.as_tuple()))
    legend = "; ".join(f"{c.upper()}: {CRITERIA_LABELS[c]}" for c in CRITERIA)
    lines.append(f"(0-10 scale; {legend})")
    return "\n".join(lines)


def comparison_json(
    single: Optional[EvalScores] = None, multi: Optional[EvalScores] = None
) -> dict[str, Any]:
    out: dict[str, Any] = {"criteria": {c: CRITERIA_LABELS[c] for c in CRITERIA}}
    if single is not None:
        out["single"] = single.to_json_dict()
    if multi is not None:
        out["multi"] = multi.to_json_dict()
    out["table"] = render_comparison(single, multi)
    return out
