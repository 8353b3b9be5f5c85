"""Clocks and timestamp helpers.

All timestamps are timezone-aware UTC, truncated to whole milliseconds at
the source so that serialized values round-trip byte-identically.
"""

from __future__ import annotations

from datetime import datetime, timedelta, timezone


def truncate_ms(dt: datetime) -> datetime:
    """Drop sub-millisecond precision."""
    return dt.replace(microsecond=(dt.microsecond // 1000) * 1000)


def to_iso(dt: datetime) -> str:
    """ISO-8601 UTC with exactly millisecond precision, e.g. 2026-01-05T09:30:00.000Z"""
    dt = dt.astimezone(timezone.utc)
    return f"{dt.year:04d}-{dt.month:02d}-{dt.day:02d}T{dt.hour:02d}:{dt.minute:02d}:{dt.second:02d}.{dt.microsecond // 1000:03d}Z"


def from_iso(text: str) -> datetime:
    # Python 3.10 fromisoformat does not accept the Z suffix.
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return truncate_ms(dt.astimezone(timezone.utc))


class Clock:
    """Time source. Swap for ManualClock in tests and scripted scenarios."""

    def now(self) -> datetime:
        raise NotImplementedError


class SystemClock(Clock):
    def now(self) -> datetime:
        return truncate_ms(datetime.now(timezone.utc))


class ManualClock(Clock):
    """Deterministic clock advanced explicitly."""

    def __init__(self, start: datetime | None = None):
        self._now = truncate_ms(start or datetime(2026, 1, 1, 8, 0, 0, tzinfo=timezone.utc))

    def now(self) -> datetime:
        return self._now

    def set(self, dt: datetime) -> None:
        self._now = truncate_ms(dt.astimezone(timezone.utc))

    def advance(self, **kwargs) -> datetime:
        """Advance by a timedelta given as keyword args (minutes=…, hours=…)."""
        self._now = truncate_ms(self._now + timedelta(**kwargs))
        return self._now
