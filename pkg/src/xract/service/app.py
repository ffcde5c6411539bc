"""Read-only HTTP service over processed session directories.

Serves the analytics products, raw records, and binary assets backing the
web interface.  The single mutating surface is insight generation, which runs
as an async job (one per session at a time) and persists its result next to
the session records.  The private ``alias_map.json`` is never reachable:
asset serving goes through a whitelist built from record references.
"""

from __future__ import annotations

import json
import threading
import uuid
from pathlib import Path
from typing import Optional, Union

from fastapi import FastAPI, HTTPException, Query, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from xract.analytics import (
    DEFAULT_TRACE_GRID,
    bin_timeline,
    referent_stats,
    trace_map,
)
from xract.errors import XractError
from xract.ingest import make_view
from xract.insight.agents import generate_insights, insights_to_json
from xract.insight.client import resolve_client
from xract.insight.evaluate import comparison_json, evaluate_insights
from xract.jsonio import atomic_write_text, dumps_pretty, json_num
from xract.service.schemas import (
    ActionOut,
    ApiError,
    ApiErrorCode,
    AssetOut,
    InsightJobAccepted,
    InsightJobRequest,
    JobState,
    SessionDetail,
    SessionSummary,
    TransformOut,
)
from xract.uad.records import ActionRecord, AssetKind
from xract.uad.store import ALIAS_MAP_FILE, META_FILE, SessionStore, read_session
from xract.uad.times import MalformedTimedelta, MalformedTimestamp, TimeDelta, Timestamp

INSIGHTS_FILE = "insights.json"
EVAL_FILE = "insights_eval.json"

_CONTENT_TYPES = {
    ".glb": "model/gltf-binary",
    ".png": "image/png",
    ".json": "application/json",
    ".txt": "text/plain; charset=utf-8",
    ".wav": "audio/wav",
}


def _error(status: int, code: ApiErrorCode, message: str, detail: str = "") -> HTTPException:
    return HTTPException(
        status_code=status,
        detail=ApiError(code=code, message=message, detail=detail or None).model_dump(),
    )


class SessionRegistry:
    """Loads and caches immutable stores below one root directory."""

    def __init__(self, root: Path):
        self.root = root
        self._stores: dict[str, SessionStore] = {}
        self._lock = threading.Lock()

    def session_dirs(self) -> dict[str, Path]:
        # Keyed by directory name: unique within a root, stable across
        # re-ingests that keep the logical sessionId.  Only anonymized
        # sessions are exposed; raw recordings carry real identities and must
        # never be reachable through the service.
        out: dict[str, Path] = {}
        candidates = []
        if (self.root / META_FILE).exists():
            candidates.append(self.root)
        if self.root.is_dir():
            candidates.extend(
                child for child in sorted(self.root.iterdir())
                if child.is_dir() and (child / META_FILE).exists()
            )
        for path in candidates:
            try:
                meta = json.loads((path / META_FILE).read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError):
                continue
            if meta.get("anonymized", False):
                out[path.name] = path
        return out

    def get(self, sid: str) -> SessionStore:
        with self._lock:
            if sid in self._stores:
                return self._stores[sid]
        dirs = self.session_dirs()
        if sid not in dirs:
            raise _error(404, ApiErrorCode.NOT_FOUND, f"unknown session {sid!r}")
        store = read_session(dirs[sid], verify_assets=False)
        with self._lock:
            self._stores[sid] = store
        return store

    def asset_whitelist(self, store: SessionStore) -> dict[str, str]:
        """basename -> session-relative path for every referenced asset."""
        return {Path(p).name: p for p in store.asset_index()}


class InsightJobs:
    def __init__(self) -> None:
        self._jobs: dict[str, JobState] = {}  # keyed by session id
        self._lock = threading.Lock()

    def state(self, sid: str) -> Optional[JobState]:
        with self._lock:
            return self._jobs.get(sid)

    def try_start(self, sid: str) -> JobState:
        with self._lock:
            current = self._jobs.get(sid)
            if current is not None and current.status == "running":
                raise _error(409, ApiErrorCode.PROCESSING, f"insight job already running for {sid}")
            job = JobState(jobId=uuid.uuid4().hex[:12], status="running")
            self._jobs[sid] = job
            return job

    def finish(self, sid: str, job_id: str, error: Optional[str] = None) -> None:
        with self._lock:
            job = self._jobs.get(sid)
            if job is not None and job.jobId == job_id:
                job.status = "failed" if error else "done"
                job.error = error


def _parse_range(from_: Optional[str], to: Optional[str]) -> tuple[Optional[Timestamp], Optional[Timestamp]]:
    try:
        t0 = Timestamp.parse(from_) if from_ else None
        t1 = Timestamp.parse(to) if to else None
    except (MalformedTimestamp, Exception) as e:
        raise _error(400, ApiErrorCode.BAD_FILTER, "bad timestamp in range", str(e)) from None
    if t0 is not None and t1 is not None and t1 < t0:
        raise _error(400, ApiErrorCode.BAD_FILTER, f"inverted range {from_}..{to}")
    return t0, t1


def _split(csv: Optional[str]) -> Optional[list[str]]:
    if csv is None or csv == "":
        return None
    return [v for v in csv.split(",") if v]


def _transforms(ts) -> list[TransformOut]:
    return [TransformOut(pos=list(t.pos), rot=list(t.rot)) for t in ts]


def _assets(sid: str, refs) -> list[AssetOut]:
    return [
        AssetOut(
            kind=r.kind.value,
            path=r.path,
            sha256=r.sha256,
            url=f"/api/sessions/{sid}/assets/{Path(r.path).name}",
        )
        for r in refs
    ]


def _transcript(store: SessionStore, record: ActionRecord) -> Optional[str]:
    for ref in record.context:
        if ref.kind is AssetKind.AUDIO_TRANSCRIPT:
            try:
                return store.asset_bytes(ref).decode("utf-8")
            except XractError:
                return None
    return None


def _action_out(sid: str, store: SessionStore, r: ActionRecord) -> ActionOut:
    return ActionOut(
        id=r.id,
        name=r.name,
        type=r.type.value,
        intent=r.intent,
        intentEstimated=r.intent_estimated,
        user=r.user,
        location=_transforms(r.location),
        triggerSource=r.trigger_source,
        startTime=r.start_time.format(),
        duration=r.duration.format(),
        durationSeconds=json_num(r.duration.as_seconds(strict=False)),
        referent=_assets(sid, r.referent),
        referentName=r.referent_name,
        referentType=r.referent_type.value,
        referentLocation=_transforms(r.referent_location),
        context=_assets(sid, r.context),
        contextDescription=r.context_description,
        contextType=r.context_type.value,
        transcript=_transcript(store, r),
    )


def create_app(
    session_root: Union[str, Path],
    llm_mode: Optional[str] = None,
    ui_dir: Optional[Union[str, Path]] = None,
    eval_runs: int = 3,
) -> FastAPI:
    registry = SessionRegistry(Path(session_root))
    jobs = InsightJobs()
    app = FastAPI(title="xract session service", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["GET", "POST"], allow_headers=["*"]
    )

    @app.exception_handler(HTTPException)
    async def handle_http(request: Request, exc: HTTPException) -> JSONResponse:
        body = exc.detail if isinstance(exc.detail, dict) else ApiError(
            code=ApiErrorCode.INTERNAL if exc.status_code >= 500 else ApiErrorCode.NOT_FOUND,
            message=str(exc.detail),
        ).model_dump()
        return JSONResponse(status_code=exc.status_code, content=body)

    @app.exception_handler(RequestValidationError)
    async def handle_validation(request: Request, exc: RequestValidationError) -> JSONResponse:
        return JSONResponse(
            status_code=422,
            content=ApiError(
                code=ApiErrorCode.BAD_FILTER,
                message="request validation failed",
                detail=str(exc.errors()),
            ).model_dump(),
        )

    @app.exception_handler(Exception)
    async def handle_any(request: Request, exc: Exception) -> JSONResponse:
        return JSONResponse(
            status_code=500,
            content=ApiError(
                code=ApiErrorCode.INTERNAL, message="internal error", detail=str(exc)
            ).model_dump(),
        )

    def summary(sid: str, store: SessionStore) -> SessionSummary:
        return SessionSummary(
            id=sid,
            appName=store.meta.app_name,
            virtuality=store.meta.virtuality.value,
            users=list(store.meta.users),
            recordingStart=store.meta.recording_start.format(),
            recordingEnd=store.meta.recording_end.format(),
            records=store.record_count(),
            anonymized=store.meta.anonymized,
        )

    @app.get("/api/sessions", response_model=list[SessionSummary])
    def list_sessions() -> list[SessionSummary]:
        out = []
        for sid in registry.session_dirs():
            out.append(summary(sid, registry.get(sid)))
        return out

    @app.get("/api/sessions/{sid}", response_model=SessionDetail)
    def session_detail(sid: str) -> SessionDetail:
        store = registry.get(sid)
        names = sorted({r.name for r in store.all_records()})
        has_insights = store.root is not None and (store.root / INSIGHTS_FILE).exists()
        return SessionDetail(
            **summary(sid, store).model_dump(),
            actionNames=names,
            assetCount=len(store.asset_index()),
            hasInsights=has_insights,
        )

    @app.get("/api/sessions/{sid}/actions", response_model=list[ActionOut])
    def session_actions(
        sid: str,
        users: Optional[str] = None,
        actions: Optional[str] = None,
        from_: Optional[str] = Query(default=None, alias="from"),
        to: Optional[str] = None,
    ) -> list[ActionOut]:
        store = registry.get(sid)
        t0, t1 = _parse_range(from_, to)
        view = make_view(store, users=_split(users), actions=_split(actions), t0=t0, t1=t1)
        return [_action_out(sid, store, r) for r in view.records()]

    @app.get("/api/sessions/{sid}/timeline")
    def session_timeline(
        sid: str,
        bin: str = "000000:000001:000",
        users: Optional[str] = None,
        actions: Optional[str] = None,
        from_: Optional[str] = Query(default=None, alias="from"),
        to: Optional[str] = None,
    ) -> JSONResponse:
        store = registry.get(sid)
        t0, t1 = _parse_range(from_, to)
        try:
            bin_size = TimeDelta.parse(bin)
        except MalformedTimedelta as e:
            raise _error(400, ApiErrorCode.BAD_FILTER, "bad bin size", str(e)) from None
        view = make_view(store, users=_split(users), actions=_split(actions), t0=t0, t1=t1)
        try:
            matrix = bin_timeline(view, bin_size)
        except XractError as e:
            raise _error(400, ApiErrorCode.BAD_FILTER, "bad bin size", str(e)) from None
        return JSONResponse(content=matrix.to_json_dict())

    @app.get("/api/sessions/{sid}/trace")
    def session_trace(
        sid: str,
        grid: float = DEFAULT_TRACE_GRID,
        users: Optional[str] = None,
        actions: Optional[str] = None,
        from_: Optional[str] = Query(default=None, alias="from"),
        to: Optional[str] = None,
    ) -> JSONResponse:
        store = registry.get(sid)
        t0, t1 = _parse_range(from_, to)
        if grid <= 0:
            raise _error(400, ApiErrorCode.BAD_FILTER, f"grid must be positive: {grid}")
        view = make_view(store, users=_split(users), actions=_split(actions), t0=t0, t1=t1)
        return JSONResponse(content=[t.to_json_dict() for t in trace_map(view, grid=grid)])

    @app.get("/api/sessions/{sid}/stats")
    def session_stats(
        sid: str,
        users: Optional[str] = None,
        actions: Optional[str] = None,
        from_: Optional[str] = Query(default=None, alias="from"),
        to: Optional[str] = None,
    ) -> JSONResponse:
        store = registry.get(sid)
        t0, t1 = _parse_range(from_, to)
        view = make_view(store, users=_split(users), actions=_split(actions), t0=t0, t1=t1)
        return JSONResponse(content=referent_stats(view).to_json_dict())

    @app.get("/api/sessions/{sid}/assets/{asset_id}")
    def session_asset(sid: str, asset_id: str) -> Response:
        store = registry.get(sid)
        whitelist = registry.asset_whitelist(store)
        rel = whitelist.get(asset_id)
        if rel is None or Path(rel).name == ALIAS_MAP_FILE:
            raise _error(404, ApiErrorCode.NOT_FOUND, f"unknown asset {asset_id!r}")
        data = (store.root / rel).read_bytes()
        media = _CONTENT_TYPES.get(Path(rel).suffix, "application/octet-stream")
        return Response(content=data, media_type=media)

    @app.post("/api/sessions/{sid}/insights", status_code=202, response_model=InsightJobAccepted)
    def start_insights(sid: str, body: InsightJobRequest) -> InsightJobAccepted:
        store = registry.get(sid)
        job = jobs.try_start(sid)

        def run() -> None:
            try:
                client = resolve_client(llm_mode)
                insights = generate_insights(store, body.aoi, body.mode, client)
                payload = insights_to_json(insights, body.aoi, body.mode)
                atomic_write_text(store.root / INSIGHTS_FILE, dumps_pretty(payload))
                scores = evaluate_insights(
                    insights, body.aoi, client, runs=eval_runs, method=body.mode
                )
                eval_payload = comparison_json(
                    single=scores if body.mode == "single" else None,
                    multi=scores if body.mode == "multi" else None,
                )
                atomic_write_text(store.root / EVAL_FILE, dumps_pretty(eval_payload))
                jobs.finish(sid, job.jobId)
            except Exception as e:  # job errors surface via status polling
                jobs.finish(sid, job.jobId, error=str(e))

        threading.Thread(target=run, daemon=True).start()
        return InsightJobAccepted(jobId=job.jobId, status="accepted")

    @app.get("/api/sessions/{sid}/insights")
    def get_insights(sid: str) -> JSONResponse:
        store = registry.get(sid)
        job = jobs.state(sid)
        path = store.root / INSIGHTS_FILE
        payload = {
            "status": "none",
            "aoi": "",
            "mode": "",
            "insights": [],
            "markers": [],
            "job": job.model_dump() if job else None,
        }
        if job is not None and job.status == "running":
            payload["status"] = "running"
        if path.exists() and (job is None or job.status != "running"):
            stored = json.loads(path.read_text(encoding="utf-8"))
            payload.update(stored)
            payload["status"] = "ready"
        return JSONResponse(content=payload)

    @app.get("/api/sessions/{sid}/insights/eval")
    def get_eval(sid: str) -> JSONResponse:
        store = registry.get(sid)
        path = store.root / EVAL_FILE
        if not path.exists():
            raise _error(
                404, ApiErrorCode.NOT_FOUND, "no evaluation yet; generate insights first"
            )
        return JSONResponse(content=json.loads(path.read_text(encoding="utf-8")))

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def serve(
    session_root: Union[str, Path],
    port: int = 8080,
    host: str = "127.0.0.1",
    llm_mode: Optional[str] = None,
    ui_dir: Optional[Union[str, Path]] = None,
) -> None:
    import uvicorn

    app = create_app(session_root, llm_mode=llm_mode, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
