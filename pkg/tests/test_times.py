from __future__ import annotations

import itertools
from datetime import datetime

import pytest
from hypothesis import given, strategies as st

from xract.uad.times import (
    InvalidCalendar,
    MalformedTimedelta,
    MalformedTimestamp,
    TimeDelta,
    Timestamp,
    parse_timedelta,
    parse_timestamp,
)

# Independent weight oracle for the time fields of a duration string.
FIELD_WEIGHTS_S = {"hours": 3600.0, "minutes": 60.0, "seconds": 1.0, "millis": 0.001}


def delta_seconds_oracle(s: str) -> float:
    date_s, time_s, ms = s.split(":")
    assert date_s == "000000"
    return (
        int(time_s[0:2]) * FIELD_WEIGHTS_S["hours"]
        + int(time_s[2:4]) * FIELD_WEIGHTS_S["minutes"]
        + int(time_s[4:6]) * FIELD_WEIGHTS_S["seconds"]
        + int(ms) * FIELD_WEIGHTS_S["millis"]
    )


class TestTimestamp:
    def test_table_example(self):
        ts = parse_timestamp("240801:092855:031")
        assert ts.dt == datetime(2024, 8, 1, 9, 28, 55, 31000)
        assert ts.format() == "240801:092855:031"

    def test_epoch_like_zero(self):
        ts = parse_timestamp("000101:000000:000")
        assert ts.dt == datetime(2000, 1, 1)

    def test_invalid_month(self):
        with pytest.raises(InvalidCalendar):
            parse_timestamp("241301:000000:000")

    def test_field_range_brute_force(self):
        # Every (month, day, hour) combination must parse exactly when the
        # stdlib calendar accepts it.
        for month, day, hour in itertools.product(
            [0, 1, 2, 12, 13], [0, 1, 28, 29, 31, 32], [0, 23, 24]
        ):
            s = f"24{month:02d}{day:02d}:{hour:02d}0000:000"
            try:
                datetime(2024, month, day, hour)
                valid = True
            except ValueError:
                valid = False
            if valid:
                assert parse_timestamp(s).format() == s
            else:
                with pytest.raises(InvalidCalendar):
                    parse_timestamp(s)

    @pytest.mark.parametrize("bad", ["", "240801:092855:31", "240801 092855 031",
                                     "2408010:92855:031", "24080a:092855:031", "240801:092855:0311"])
    def test_malformed(self, bad):
        with pytest.raises(MalformedTimestamp):
            parse_timestamp(bad)

    @given(
        st.datetimes(
            min_value=datetime(2000, 1, 1), max_value=datetime(2099, 12, 31, 23, 59, 59)
        )
    )
    def test_roundtrip_property(self, dt):
        ts = Timestamp(dt.replace(microsecond=(dt.microsecond // 1000) * 1000))
        assert parse_timestamp(ts.format()) == ts
        assert len(ts.format()) == 17

    @given(
        st.datetimes(min_value=datetime(2000, 1, 1), max_value=datetime(2099, 12, 31)),
        st.datetimes(min_value=datetime(2000, 1, 1), max_value=datetime(2099, 12, 31)),
    )
    def test_lexicographic_order_matches_chronological(self, d1, d2):
        t1 = Timestamp(d1.replace(microsecond=0))
        t2 = Timestamp(d2.replace(microsecond=0))
        assert (t1.format() < t2.format()) == (t1 < t2)

    def test_add_delta_crosses_calendar(self):
        ts = parse_timestamp("241231:235959:900")
        assert (ts + TimeDelta(millis=200)).format() == "250101:000000:100"
        assert (ts + TimeDelta(months=1, days=1)).format() == "250201:235959:900"


class TestTimeDelta:
    def test_table_example(self):
        td = parse_timedelta("000000:000135:328")
        assert td.as_seconds() == pytest.approx(95.328, abs=1e-12)
        assert td.format() == "000000:000135:328"

    def test_zero(self):
        assert parse_timedelta("000000:000000:000").as_seconds() == 0.0

    def test_one_hour_field_weight_oracle(self):
        s = "000000:010000:000"
        assert parse_timedelta(s).as_seconds() == delta_seconds_oracle(s) == 3600.0

    @given(
        st.integers(0, 99), st.integers(0, 99), st.integers(0, 99), st.integers(0, 999)
    )
    def test_seconds_match_weight_oracle(self, h, m, sec, ms):
        s = f"000000:{h:02d}{m:02d}{sec:02d}:{ms:03d}"
        td = parse_timedelta(s)
        assert td.as_seconds() == pytest.approx(delta_seconds_oracle(s), abs=1e-9)
        assert td.format() == s

    def test_date_part_requires_non_strict(self):
        td = parse_timedelta("000100:000000:000")
        with pytest.raises(MalformedTimedelta):
            td.as_seconds()
        assert td.as_seconds(strict=False) == 30 * 86400.0

    def test_from_seconds_roundtrip(self):
        assert TimeDelta.from_seconds(95.328).format() == "000000:000135:328"
        assert TimeDelta.from_seconds(0).format() == "000000:000000:000"
        assert TimeDelta.from_seconds(3600).format() == "000000:010000:000"

    @pytest.mark.parametrize("bad", ["", "000000:000000:00", "xx0000:000000:000"])
    def test_malformed(self, bad):
        with pytest.raises(MalformedTimedelta):
            parse_timedelta(bad)

    def test_negative_rejected(self):
        with pytest.raises(MalformedTimedelta):
            TimeDelta.from_seconds(-1.0)
