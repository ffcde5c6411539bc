"""Pydantic request/response models for the HTTP API.

Analytics products (timeline, trace, stats) are passed through in the
library's canonical JSON form rather than re-shaped here, so served numbers
are byte-equal to direct library calls.
"""

from __future__ import annotations

from enum import Enum
from typing import Optional, Union

from pydantic import BaseModel, Field


class ApiErrorCode(str, Enum):
    NOT_FOUND = "NotFound"
    BAD_FILTER = "BadFilter"
    PROCESSING = "Processing"
    INTERNAL = "Internal"


class ApiError(BaseModel):
    code: ApiErrorCode
    message: str
    detail: Optional[str] = None


class SessionSummary(BaseModel):
    id: str
    appName: str
    virtuality: str
    users: list[str]
    recordingStart: str
    recordingEnd: str
    records: int
    anonymized: bool


class SessionDetail(SessionSummary):
    actionNames: list[str]
    assetCount: int
    hasInsights: bool


class TransformOut(BaseModel):
    pos: list[float]
    rot: list[float]


class AssetOut(BaseModel):
    kind: str
    path: str
    sha256: str
    url: str


class ActionOut(BaseModel):
    id: str
    name: str
    type: str
    intent: str
    intentEstimated: bool
    user: str
    location: list[TransformOut]
    triggerSource: str
    startTime: str
    duration: str
    durationSeconds: Union[int, float]
    referent: list[AssetOut]
    referentName: str
    referentType: str
    referentLocation: list[TransformOut]
    context: list[AssetOut]
    contextDescription: Optional[str]
    contextType: str
    transcript: Optional[str]


class InsightJobRequest(BaseModel):
    aoi: str = ""
    mode: str = Field(default="multi", pattern="^(single|multi)$")


class InsightJobAccepted(BaseModel):
    jobId: str
    status: str


class JobState(BaseModel):
    jobId: str
    status: str  # running | done | failed
    error: Optional[str] = None
