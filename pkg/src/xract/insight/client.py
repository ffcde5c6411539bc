"""Chat-model client abstraction: a remote endpoint and a replayable mock.

The mock is fully deterministic (identical request, identical response) and
keeps a call ledger so tests can assert exactly how many requests a pipeline
issued.  Responses come from, in order: a fixture file keyed by the request
digest, a fixture sidecar next to an attached image/audio asset, or a
rule-based synthesizer driven only by the request content.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
from abc import ABC, abstractmethod
from base64 import b64encode
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from xract.errors import XractError
from xract.jsonio import dumps_compact

ENV_URL = "EXR_LLM_URL"
ENV_KEY = "EXR_LLM_KEY"
ENV_MODE = "EXR_LLM_MODE"
ENV_FIXTURES = "EXR_LLM_FIXTURES"


class ClientFailure(XractError):
    """The model backend failed or refused."""


class UnparseableResponse(XractError):
    """The model replied but not in the expected shape."""


@dataclass(frozen=True)
class LlmRequest:
    system: str
    user: str
    images: tuple[str, ...] = ()  # filesystem paths of attachments
    temperature: float = 0.0
    seed: int = 0
    tag: str = ""  # task route, e.g. "classify", "agent:Space", "judge"

    def digest(self) -> str:
        payload = dumps_compact(
            {
                "system": self.system,
                "user": self.user,
                "images": list(self.images),
                "temperature": self.temperature,
                "seed": self.seed,
                "tag": self.tag,
            }
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class LlmClient(ABC):
    @abstractmethod
    def complete(self, request: LlmRequest) -> str: ...


_ID_RE = re.compile(r"id=([A-Za-z0-9:_\-]+)")


def _extract(field_name: str, text: str) -> str:
    m = re.search(rf"^{field_name}:\s*(.+)$", text, flags=re.MULTILINE)
    return m.group(1).strip() if m else ""


def _stable_int(text: str) -> int:
    return int(hashlib.sha256(text.encode("utf-8")).hexdigest()[:8], 16)


class MockLlmClient(LlmClient):
    """Deterministic stand-in for a live multimodal model."""

    def __init__(self, fixture_dir: Optional[Path] = None):
        self.fixture_dir = Path(fixture_dir) if fixture_dir else None
        self.calls: list[tuple[str, str]] = []  # (tag, digest)
        self._lock = threading.Lock()

    # -- ledger -----------------------------------------------------------

    def call_count(self, tag_prefix: str = "") -> int:
        with self._lock:
            return sum(1 for tag, _ in self.calls if tag.startswith(tag_prefix))

    def reset_ledger(self) -> None:
        with self._lock:
            self.calls.clear()

    # -- completion ---------------------------------------------------------

    def complete(self, request: LlmRequest) -> str:
        digest = request.digest()
        with self._lock:
            self.calls.append((request.tag, digest))
        if self.fixture_dir is not None:
            fixture = self.fixture_dir / f"{digest}.json"
            if fixture.exists():
                return json.loads(fixture.read_text(encoding="utf-8"))["text"]
        route = request.tag.split(":")[0]
        handler = getattr(self, f"_route_{route}", None)
        if handler is None:
            raise ClientFailure(f"mock has no route for tag {request.tag!r}")
        return handler(request)

    # -- routes -------------------------------------------------------------

    def _route_classify(self, request: LlmRequest) -> str:
        for image in request.images:
            sidecar = Path(str(image) + ".expected.json")
            if sidecar.exists():
                d = json.loads(sidecar.read_text(encoding="utf-8"))
                return dumps_compact({"label": d["label"], "confidence": d["confidence"]})
        h = _stable_int(request.digest())
        return dumps_compact({"label": "object", "confidence": round(0.5 + (h % 40) / 100, 2)})

    def _route_describe(self, request: LlmRequest) -> str:
        action = _extract("action", request.user) or "an action"
        intent = _extract("intent", request.user) or "no stated intent"
        referent = _extract("referent", request.user)
        where = f" near the {referent}" if referent else ""
        return (
            f"The subject performs {action}{where}, aiming to {intent.lower().rstrip('.')}. "
            f"The captured surroundings show the interaction space at that moment."
        )

    def _route_intent(self, request: LlmRequest) -> str:
        transcript = _extract("transcript", request.user)
        action = _extract("action", request.user) or "the action"
        if transcript:
            return f"Share the observation that {transcript.rstrip('.').lower()}"
        return f"Carry out {action.lower()} based on the surrounding context"

    def _route_agent(self, request: LlmRequest) -> str:
        aspect = request.tag.split(":", 1)[1] if ":" in request.tag else "Action"
        ids = list(dict.fromkeys(_ID_RE.findall(request.user)))
        if not ids:
            return "[]"
        if aspect == "single":
            return self._single_findings(request, ids)
        actions = re.findall(r"action=([A-Za-z0-9_\-]+)", request.user)
        users = re.findall(r"user=([A-Za-z0-9_\-]+)", request.user)
        hook = max(set(actions), key=actions.count) if actions else "the session"
        subject = max(set(users), key=users.count) if users else "the subjects"
        titles = {
            "Space": f"Movement clustered where {hook} happens",
            "Time": f"{hook} dominates the session timeline",
            "Action": f"Recurring {hook} by {subject}",
            "Intent": f"Shared motivation behind {hook}",
            "Context": f"Scene context framing {hook}",
            "User": f"Uneven contribution across subjects",
        }
        h = _stable_int(request.digest())
        k = h % len(ids)
        cited = [ids[(k + j) % len(ids)] for j in range(min(3, len(ids)))]
        finding = {
            "title": titles.get(aspect, f"{aspect} pattern in the session"),
            "body": (
                f"Viewed through the {aspect.lower()} dimension, {subject} keeps returning "
                f"to {hook}; the {len(cited)} cited action(s) anchor where that pattern is "
                f"strongest in the recording."
            ),
            "aspect": aspect,
            "actionIds": cited,
        }
        return dumps_compact([finding])

    def _single_findings(self, request: LlmRequest, ids: list[str]) -> str:
        aspects = ["Space", "Time", "Action", "Intent", "Context", "User"]
        findings = []
        for i, aspect in enumerate(aspects):
            chunk = ids[i::len(aspects)][:2]
            if not chunk:
                continue
            findings.append(
                {
                    "title": f"General {aspect.lower()} notes",
                    "body": (
                        f"A combined review touching the {aspect.lower()} dimension of the "
                        f"recorded activity, derived without per-aspect decomposition."
                    ),
                    "aspect": aspect,
                    "actionIds": chunk,
                }
            )
        return dumps_compact(findings)

    def _route_judge(self, request: LlmRequest) -> str:
        h = _stable_int(request.digest())
        scores = {}
        for i, c in enumerate(("c1", "c2", "c3", "c4", "c5")):
            scores[c] = round(6.0 + ((h >> (i * 5)) % 41) / 10.0, 1)
        return dumps_compact(scores)


class RemoteLlmClient(LlmClient):
    """Chat-completion style HTTP client; credentials via environment."""

    def __init__(self, url: str, api_key: str = "", model: str = "", timeout: float = 120.0):
        self.url = url
        self.api_key = api_key
        self.model = model
        self.timeout = timeout

    def complete(self, request: LlmRequest) -> str:
        import httpx

        content: list[dict] = [{"type": "text", "text": request.user}]
        for image in request.images:
            try:
                data = b64encode(Path(image).read_bytes()).decode("ascii")
            except OSError as e:
                raise ClientFailure(f"cannot read attachment {image}: {e}") from e
            content.append(
                {"type": "image_url", "image_url": {"url": f"data:image/png;base64,{data}"}}
            )
        body = {
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": content},
            ],
            "temperature": request.temperature,
            "seed": request.seed,
        }
        if self.model:
            body["model"] = self.model
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = httpx.post(self.url, json=body, headers=headers, timeout=self.timeout)
            resp.raise_for_status()
            return resp.json()["choices"][0]["message"]["content"]
        except Exception as e:
            raise ClientFailure(f"remote completion failed: {e}") from e


def resolve_client(mode: Optional[str] = None, fixture_dir: Optional[Path] = None) -> LlmClient:
    """Pick the client from an explicit mode or the environment.

    Mock mode wins whenever set, so a configured remote endpoint is never
    consulted accidentally.
    """
    mode = mode or os.environ.get(ENV_MODE, "")
    if mode == "mock" or (not mode and not os.environ.get(ENV_URL)):
        fixtures = fixture_dir or (
            Path(os.environ[ENV_FIXTURES]) if os.environ.get(ENV_FIXTURES) else None
        )
        return MockLlmClient(fixture_dir=fixtures)
    if mode in ("", "remote"):
        url = os.environ.get(ENV_URL, "")
        if not url:
            raise ClientFailure(f"remote mode needs {ENV_URL}")
        return RemoteLlmClient(url=url, api_key=os.environ.get(ENV_KEY, ""))
    raise ClientFailure(f"unknown client mode {mode!r}")
