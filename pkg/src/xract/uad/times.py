"""Fixed-width session time types.

Both wall-clock instants and elapsed durations are rendered as 17-character
strings of the form ``YYMMDD:HHMMSS:mmm``.  The fixed width makes the string
form lexicographically ordered consistently with the parsed values, which the
analytics layer relies on.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime, timedelta

from xract.errors import XractError

_STAMP_RE = re.compile(r"^(\d{6}):(\d{6}):(\d{3})$")

# Two-digit years cover a single century; recordings all post-date 2000.
_CENTURY = 2000


class MalformedTimestamp(XractError):
    """Input is not a 17-character DDDDDD:DDDDDD:DDD string."""


class InvalidCalendar(XractError):
    """Input has timestamp shape but no valid calendar reading."""


class MalformedTimedelta(XractError):
    """Input is not a valid fixed-width duration string."""


def _split_fields(s: str, exc: type[XractError]) -> tuple[str, str, str]:
    if not isinstance(s, str):
        raise exc(f"expected string, got {type(s).__name__}")
    m = _STAMP_RE.match(s)
    if m is None:
        raise exc(f"not a YYMMDD:HHMMSS:mmm string: {s!r}")
    return m.group(1), m.group(2), m.group(3)


@dataclass(frozen=True, order=True)
class Timestamp:
    """A millisecond-precision instant in the years 2000-2099."""

    dt: datetime

    def __post_init__(self) -> None:
        if not (_CENTURY <= self.dt.year < _CENTURY + 100):
            raise InvalidCalendar(f"year {self.dt.year} outside {_CENTURY}-{_CENTURY + 99}")
        if self.dt.microsecond % 1000 != 0:
            # Keep instants exactly representable in the 3-digit millis field.
            object.__setattr__(
                self, "dt", self.dt.replace(microsecond=self.dt.microsecond // 1000 * 1000)
            )

    @classmethod
    def parse(cls, s: str) -> "Timestamp":
        date_s, time_s, ms_s = _split_fields(s, MalformedTimestamp)
        year = _CENTURY + int(date_s[0:2])
        month, day = int(date_s[2:4]), int(date_s[4:6])
        hour, minute, sec = int(time_s[0:2]), int(time_s[2:4]), int(time_s[4:6])
        try:
            dt = datetime(year, month, day, hour, minute, sec, int(ms_s) * 1000)
        except ValueError as e:
            raise InvalidCalendar(f"{s!r}: {e}") from None
        return cls(dt)

    def format(self) -> str:
        d = self.dt
        return (
            f"{d.year % 100:02d}{d.month:02d}{d.day:02d}:"
            f"{d.hour:02d}{d.minute:02d}{d.second:02d}:{d.microsecond // 1000:03d}"
        )

    def __str__(self) -> str:
        return self.format()

    def __add__(self, other: "TimeDelta") -> "Timestamp":
        if not isinstance(other, TimeDelta):
            return NotImplemented
        dt = self.dt
        if other.years or other.months:
            month0 = (dt.month - 1) + other.months
            year = dt.year + other.years + month0 // 12
            dt = dt.replace(year=year, month=month0 % 12 + 1)
        dt = dt + timedelta(
            days=other.days,
            hours=other.hours,
            minutes=other.minutes,
            seconds=other.seconds,
            milliseconds=other.millis,
        )
        return Timestamp(dt)

    def diff_seconds(self, earlier: "Timestamp") -> float:
        return (self.dt - earlier.dt).total_seconds()


@dataclass(frozen=True)
class TimeDelta:
    """Elapsed years-months-days : hours-minutes-seconds : milliseconds.

    Components round-trip exactly as written; ``000000:000135:328`` stays
    1 minute 35 seconds 328 ms rather than being renormalized.
    """

    years: int = 0
    months: int = 0
    days: int = 0
    hours: int = 0
    minutes: int = 0
    seconds: int = 0
    millis: int = 0

    def __post_init__(self) -> None:
        for name in ("years", "months", "days", "hours", "minutes", "seconds"):
            v = getattr(self, name)
            if not (0 <= v <= 99):
                raise MalformedTimedelta(f"{name}={v} outside 00-99")
        if not (0 <= self.millis <= 999):
            raise MalformedTimedelta(f"millis={self.millis} outside 000-999")

    @classmethod
    def parse(cls, s: str) -> "TimeDelta":
        date_s, time_s, ms_s = _split_fields(s, MalformedTimedelta)
        return cls(
            years=int(date_s[0:2]),
            months=int(date_s[2:4]),
            days=int(date_s[4:6]),
            hours=int(time_s[0:2]),
            minutes=int(time_s[2:4]),
            seconds=int(time_s[4:6]),
            millis=int(ms_s),
        )

    @classmethod
    def from_seconds(cls, seconds: float) -> "TimeDelta":
        if seconds < 0:
            raise MalformedTimedelta(f"negative duration: {seconds}")
        total_ms = round(seconds * 1000)
        ms = total_ms % 1000
        total_s = total_ms // 1000
        h, rem = divmod(total_s, 3600)
        m, sec = divmod(rem, 60)
        d, h = divmod(h, 24)
        if d > 99:
            raise MalformedTimedelta(f"duration too long for day field: {seconds}s")
        return cls(days=int(d), hours=int(h), minutes=int(m), seconds=int(sec), millis=int(ms))

    def format(self) -> str:
        return (
            f"{self.years:02d}{self.months:02d}{self.days:02d}:"
            f"{self.hours:02d}{self.minutes:02d}{self.seconds:02d}:{self.millis:03d}"
        )

    def __str__(self) -> str:
        return self.format()

    @property
    def has_date_part(self) -> bool:
        return bool(self.years or self.months or self.days)

    def as_seconds(self, strict: bool = True) -> float:
        """Exact length in seconds.

        With ``strict`` the date part must be zero.  The non-strict path
        assumes 24 h days / 30 d months / 365 d years and is only meant for
        coarse statistics over irregular recordings.
        """
        if strict and self.has_date_part:
            raise MalformedTimedelta(
                f"date part nonzero in {self.format()!r}; pass strict=False for an estimate"
            )
        days = self.days + 30 * self.months + 365 * self.years
        return (
            days * 86400.0
            + self.hours * 3600.0
            + self.minutes * 60.0
            + self.seconds
            + self.millis / 1000.0
        )

    def _key(self) -> float:
        return self.as_seconds(strict=False)

    def __lt__(self, other: "TimeDelta") -> bool:
        return self._key() < other._key()

    def __le__(self, other: "TimeDelta") -> bool:
        return self._key() <= other._key()


ZERO_DELTA = TimeDelta()


def parse_timestamp(s: str) -> Timestamp:
    return Timestamp.parse(s)


def parse_timedelta(s: str) -> TimeDelta:
    return TimeDelta.parse(s)
