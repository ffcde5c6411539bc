"""Action record schema: the atom every other module consumes.

Serialized records keep the descriptor field spellings (``Name``, ``Type``,
``Intent``, ``User``, ``Location``, ``TriggerSource``, ``StartTime``,
``Duration``, ``Referent``, ``ReferentType``, ``ReferentLocation``,
``Context``, ``ContextType``); lowerCamel keys are artifact plumbing.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Optional

from xract.errors import XractError
from xract.uad.times import TimeDelta, Timestamp

UAD_VERSION = "1.0"

#: Serialized spelling of the 13 descriptor fields, in canonical order.
DESCRIPTOR_FIELDS = (
    "Name",
    "Type",
    "Intent",
    "User",
    "Location",
    "TriggerSource",
    "StartTime",
    "Duration",
    "Referent",
    "ReferentType",
    "ReferentLocation",
    "Context",
    "ContextType",
)

#: Intent sentinel for actions whose reasoning is only knowable post hoc.
POST_DEFINED = "PostDefined"

_ALIAS_RE = re.compile(r"^User[1-9]\d*$")
_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_TRANSFORM_RE = re.compile(
    rf"^\(Pos\(({_NUM}),({_NUM}),({_NUM})\), Rot\(({_NUM}),({_NUM}),({_NUM})\)\)$"
)


class MalformedTransform(XractError):
    """String is not a ``(Pos(x,y,z), Rot(a,b,c))`` literal."""


def _fmt_num(x: float) -> str:
    if math.isfinite(x) and x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _norm_angle(a: float) -> float:
    if math.isfinite(a) and not (-360.0 <= a <= 360.0):
        return math.fmod(a, 360.0)
    return a


@dataclass(frozen=True)
class Transform:
    """Position (meters, right-handed Y-up) plus intrinsic X->Y->Z Euler degrees."""

    pos: tuple[float, float, float]
    rot: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "pos", tuple(float(v) for v in self.pos))
        object.__setattr__(self, "rot", tuple(_norm_angle(float(v)) for v in self.rot))

    @classmethod
    def parse(cls, s: str) -> "Transform":
        m = _TRANSFORM_RE.match(s)
        if m is None:
            raise MalformedTransform(f"not a transform literal: {s!r}")
        v = [float(g) for g in m.groups()]
        return cls(pos=(v[0], v[1], v[2]), rot=(v[3], v[4], v[5]))

    def format(self) -> str:
        p = ",".join(_fmt_num(v) for v in self.pos)
        r = ",".join(_fmt_num(v) for v in self.rot)
        return f"(Pos({p}), Rot({r}))"

    def __str__(self) -> str:
        return self.format()

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in self.pos + self.rot)


class ActionType(str, Enum):
    DISCRETE = "Discrete"
    CONTINUOUS = "Continuous"


class RealityType(str, Enum):
    PHYSICAL = "Physical"
    VIRTUAL = "Virtual"


class Virtuality(str, Enum):
    AR = "AR"
    VR = "VR"
    MR = "MR"


class AssetKind(str, Enum):
    REFERENT_MODEL = "ReferentModel"
    REFERENT_IMAGE = "ReferentImage"
    CONTEXT_CLOUD = "ContextCloud"
    CONTEXT_RGB = "ContextRGB"
    CONTEXT_DEPTH = "ContextDepth"
    CAMERA_PARAMS = "CameraParams"
    AUDIO_TRANSCRIPT = "AudioTranscript"
    # Raw microphone capture; present only pre-ingest (transcribed then dropped).
    AUDIO_CAPTURE = "AudioCapture"


ASSET_EXTENSIONS = {
    AssetKind.REFERENT_MODEL: ".glb",
    AssetKind.REFERENT_IMAGE: ".png",
    AssetKind.CONTEXT_CLOUD: ".glb",
    AssetKind.CONTEXT_RGB: ".png",
    AssetKind.CONTEXT_DEPTH: ".png",
    AssetKind.CAMERA_PARAMS: ".json",
    AssetKind.AUDIO_TRANSCRIPT: ".txt",
    AssetKind.AUDIO_CAPTURE: ".wav",
}


@dataclass(frozen=True)
class AssetRef:
    """Digest-verified pointer to a sidecar file inside the session directory."""

    kind: AssetKind
    path: str
    sha256: str

    def to_json_dict(self) -> dict[str, str]:
        return {"kind": self.kind.value, "path": self.path, "sha256": self.sha256}

    @classmethod
    def from_json_dict(cls, d: dict[str, Any]) -> "AssetRef":
        return cls(kind=AssetKind(d["kind"]), path=d["path"], sha256=d["sha256"])

    def is_session_relative(self) -> bool:
        if self.path.startswith("/") or self.path.startswith("\\"):
            return False
        parts = self.path.replace("\\", "/").split("/")
        return ".." not in parts and "" not in parts


@dataclass(frozen=True)
class ActionRecord:
    id: str
    name: str
    type: ActionType
    intent: str
    user: str
    location: tuple[Transform, ...]
    trigger_source: str
    start_time: Timestamp
    duration: TimeDelta
    referent: tuple[AssetRef, ...] = ()
    referent_name: str = ""
    referent_type: RealityType = RealityType.VIRTUAL
    referent_location: tuple[Transform, ...] = ()
    context: tuple[AssetRef, ...] = ()
    context_description: Optional[str] = None
    context_type: RealityType = RealityType.VIRTUAL
    intent_estimated: bool = False
    uad_version: str = UAD_VERSION

    def __post_init__(self) -> None:
        object.__setattr__(self, "location", tuple(self.location))
        object.__setattr__(self, "referent", tuple(self.referent))
        object.__setattr__(self, "referent_location", tuple(self.referent_location))
        object.__setattr__(self, "context", tuple(self.context))

    def end_time(self) -> Timestamp:
        return self.start_time + self.duration

    def duration_seconds(self) -> float:
        return self.duration.as_seconds(strict=False)

    def assets(self) -> tuple[AssetRef, ...]:
        return self.referent + self.context

    def replace(self, **changes: Any) -> "ActionRecord":
        import dataclasses

        return dataclasses.replace(self, **changes)

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "uadVersion": self.uad_version,
            "Name": self.name,
            "Type": self.type.value,
            "Intent": self.intent,
            "User": self.user,
            "Location": [t.format() for t in self.location],
            "TriggerSource": self.trigger_source,
            "StartTime": self.start_time.format(),
            "Duration": self.duration.format(),
            "Referent": [a.to_json_dict() for a in self.referent],
            "referentName": self.referent_name,
            "ReferentType": self.referent_type.value,
            "ReferentLocation": [t.format() for t in self.referent_location],
            "Context": [a.to_json_dict() for a in self.context],
            "contextDescription": self.context_description,
            "ContextType": self.context_type.value,
            "intentEstimated": self.intent_estimated,
        }

    @classmethod
    def from_json_dict(cls, d: dict[str, Any]) -> "ActionRecord":
        return cls(
            id=d["id"],
            uad_version=d.get("uadVersion", UAD_VERSION),
            name=d["Name"],
            type=ActionType(d["Type"]),
            intent=d["Intent"],
            user=d["User"],
            location=tuple(Transform.parse(s) for s in d["Location"]),
            trigger_source=d["TriggerSource"],
            start_time=Timestamp.parse(d["StartTime"]),
            duration=TimeDelta.parse(d["Duration"]),
            referent=tuple(AssetRef.from_json_dict(a) for a in d["Referent"]),
            referent_name=d.get("referentName", ""),
            referent_type=RealityType(d["ReferentType"]),
            referent_location=tuple(Transform.parse(s) for s in d["ReferentLocation"]),
            context=tuple(AssetRef.from_json_dict(a) for a in d["Context"]),
            context_description=d.get("contextDescription"),
            context_type=RealityType(d["ContextType"]),
            intent_estimated=bool(d.get("intentEstimated", False)),
        )


@dataclass(frozen=True)
class SessionMeta:
    session_id: str
    users: tuple[str, ...]
    app_name: str
    virtuality: Virtuality
    recording_start: Timestamp
    recording_end: Timestamp
    anonymized: bool = False
    uad_version: str = UAD_VERSION

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "sessionId": self.session_id,
            "users": list(self.users),
            "appName": self.app_name,
            "virtuality": self.virtuality.value,
            "recordingStart": self.recording_start.format(),
            "recordingEnd": self.recording_end.format(),
            "anonymized": self.anonymized,
            "uadVersion": self.uad_version,
        }

    @classmethod
    def from_json_dict(cls, d: dict[str, Any]) -> "SessionMeta":
        return cls(
            session_id=d["sessionId"],
            users=tuple(d["users"]),
            app_name=d["appName"],
            virtuality=Virtuality(d["virtuality"]),
            recording_start=Timestamp.parse(d["recordingStart"]),
            recording_end=Timestamp.parse(d["recordingEnd"]),
            anonymized=bool(d.get("anonymized", False)),
            uad_version=d.get("uadVersion", UAD_VERSION),
        )


@dataclass(frozen=True)
class Violation:
    field: str
    rule: str
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, fld: str, rule: str, message: str) -> None:
        self.violations.append(Violation(fld, rule, message))

    def rules(self) -> set[str]:
        return {f"{v.field}.{v.rule}" for v in self.violations}


def format_classification(label: str, confidence: float) -> str:
    """Render a physical-referent classification as ``<class>@<confidence>``."""
    return f"{label}@{confidence}"


def classified_label(referent_name: str) -> tuple[str, Optional[float]]:
    """Split ``couch@0.92`` into label and confidence (None when unclassified)."""
    if "@" in referent_name:
        label, _, conf = referent_name.rpartition("@")
        try:
            return label, float(conf)
        except ValueError:
            return referent_name, None
    return referent_name, None


def validate_record(record: ActionRecord, require_alias: bool = False) -> ValidationReport:
    """Check one record against the descriptor invariants.

    Violations are data, not exceptions: the record is accepted iff the
    report is empty.  ``require_alias`` is set for post-ingest stores where
    ``User`` must be an anonymized ``User<N>`` alias.
    """
    report = ValidationReport()
    n = len(record.location)
    if record.type is ActionType.DISCRETE and n != 1:
        report.add("location", "count", f"discrete record carries {n} locations, wants 1")
    if record.type is ActionType.CONTINUOUS and n < 1:
        report.add("location", "count", "continuous record carries no location samples")
    if not record.intent:
        report.add("intent", "empty", "intent must be non-empty")
    if require_alias and not _ALIAS_RE.match(record.user):
        report.add("user", "alias", f"user {record.user!r} is not an anonymized alias")
    for i, t in enumerate(record.location + record.referent_location):
        if not t.is_finite():
            report.add("location", "finite", f"non-finite transform at index {i}")
            break
    for ref in record.assets():
        if not ref.is_session_relative():
            report.add("asset", "path", f"asset path escapes session: {ref.path!r}")
    if record.referent_type is RealityType.PHYSICAL and "@" in record.referent_name:
        _, conf = classified_label(record.referent_name)
        if conf is None or not (0.0 <= conf <= 1.0):
            report.add(
                "referentName",
                "confidence",
                f"classification confidence outside [0,1]: {record.referent_name!r}",
            )
    return report


def sort_records(records: Iterable[ActionRecord]) -> list[ActionRecord]:
    """Chronological sort, stable for equal start times."""
    return sorted(records, key=lambda r: r.start_time)
