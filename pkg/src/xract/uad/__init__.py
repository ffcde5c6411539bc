"""User-action record schema, session storage, and the recorder facade."""

from xract.uad.records import (
    ActionRecord,
    ActionType,
    AssetKind,
    AssetRef,
    DESCRIPTOR_FIELDS,
    POST_DEFINED,
    RealityType,
    SessionMeta,
    Transform,
    UAD_VERSION,
    ValidationReport,
    Virtuality,
    classified_label,
    validate_record,
)
from xract.uad.recorder import AssetPayload, RecorderHandle
from xract.uad.store import (
    CorruptAsset,
    SchemaVersionUnsupported,
    SessionStore,
    read_session,
    store_hash,
    validate_store,
    write_session,
)
from xract.uad.times import (
    InvalidCalendar,
    MalformedTimedelta,
    MalformedTimestamp,
    TimeDelta,
    Timestamp,
    parse_timedelta,
    parse_timestamp,
)

__all__ = [
    "ActionRecord",
    "ActionType",
    "AssetKind",
    "AssetPayload",
    "AssetRef",
    "CorruptAsset",
    "DESCRIPTOR_FIELDS",
    "InvalidCalendar",
    "MalformedTimedelta",
    "MalformedTimestamp",
    "POST_DEFINED",
    "RealityType",
    "RecorderHandle",
    "SchemaVersionUnsupported",
    "SessionMeta",
    "SessionStore",
    "TimeDelta",
    "Timestamp",
    "Transform",
    "UAD_VERSION",
    "ValidationReport",
    "Virtuality",
    "classified_label",
    "parse_timedelta",
    "parse_timestamp",
    "read_session",
    "store_hash",
    "validate_record",
    "validate_store",
    "write_session",
]
