"""Exposure accounting: origin labels for conflict-zone groups and the
per-stream duration counters.

For every stream the tracker accumulates, over each reporting period:

* crossing seconds (``Z`` in the period report) - some moving group with
  that origin is inside a conflict zone;
* clear seconds (``X``) - crossing while the cross-traffic approach holds
  no road-user group;
* critical seconds (``Y``) - crossing while the cross-traffic approach is
  occupied;
* critical-moving seconds (``Ym``) - critical, and the closest group on
  some cross-traffic lane is moving.

``crossing = clear + critical`` and ``critical_moving <= critical`` hold at
every second by construction; the period finalizer verifies them anyway and
raises :class:`InvariantViolationError` if the accounting ever broke.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .grid import Group, GroupKind


class InvariantViolationError(RuntimeError):
    """Internal accounting invariant broken; indicates a bug, not bad data."""


@dataclass(frozen=True)
class SecondFlags:
    """Per-second, per-stream detection flags."""

    t: int
    stream: str
    crossing: bool
    critical: bool
    critical_moving: bool


@dataclass
class ExposureCounters:
    stream: str
    crossing_seconds: int = 0
    clear_seconds: int = 0
    critical_seconds: int = 0
    critical_moving_seconds: int = 0

    def reset(self) -> None:
        self.crossing_seconds = 0
        self.clear_seconds = 0
        self.critical_seconds = 0
        self.critical_moving_seconds = 0


@dataclass(frozen=True)
class PeriodRow:
    """Finalized counters for one stream over one half-open period
    ``[period_start, period_end)``."""

    stream: str
    period_start: int
    period_end: int
    crossing_seconds: int
    clear_seconds: int
    critical_seconds: int
    critical_moving_seconds: int


def close_groups(lane_groups: Sequence[Sequence[Group]]) -> list[Group | None]:
    """Pick the group nearest the conflict zone on each lane.

    ``lane_groups`` holds the detected groups per lane, ordered like the
    approach's lanes. Nearest means smallest front cell index (lane cell 0
    touches the conflict zone); lanes with no groups yield None.
    """
    return [
        min(groups, key=lambda g: g.front) if groups else None for groups in lane_groups
    ]


def propagate_origins(
    previous: Mapping[Group, str],
    groups: Iterable[Group],
    new_origin: str | None,
) -> tuple[dict[Group, str], list[Group]]:
    """Carry origin labels of one conflict zone forward by one second.

    A group inherits the origin of the previous-second labeled group it
    shares most cells with (ties go to the lexicographically smaller
    origin). Moving groups with no inherited label take this second's
    attributed crossing origin, if any. Whatever remains is returned
    unlabeled; callers surface those as diagnostics, and they never count
    toward exposure.
    """
    labels: dict[Group, str] = {}
    unlabeled: list[Group] = []
    for group in groups:
        candidates: list[tuple[int, str]] = []
        for prev_group, origin in previous.items():
            overlap = len(group.cells & prev_group.cells)
            if overlap:
                candidates.append((-overlap, origin))
        if candidates:
            labels[group] = min(candidates)[1]
        elif new_origin is not None and group.kind is GroupKind.MOVING:
            labels[group] = new_origin
        else:
            unlabeled.append(group)
    return labels, unlabeled


def update_exposure(
    counters: Mapping[str, ExposureCounters],
    t: int,
    origins: Mapping[Group, str],
    lane_groups_by_approach: Mapping[str, Sequence[Sequence[Group]]],
    cross_traffic: Mapping[str, str],
) -> list[SecondFlags]:
    """Apply one second of the exposure rules and emit flags for every stream.

    A stream is crossing when a moving conflict-zone group carries its
    origin. While crossing, either the cross-traffic approach holds at least
    one group (critical second, also critical-moving if a close group there
    is moving) or it is empty (clear second).
    """
    crossing_streams = {
        origin for group, origin in origins.items() if group.kind is GroupKind.MOVING
    }
    flags: list[SecondFlags] = []
    for stream in sorted(counters):
        crossing = stream in crossing_streams
        critical = critical_moving = False
        if crossing:
            c = counters[stream]
            c.crossing_seconds += 1
            cross_lanes = lane_groups_by_approach[cross_traffic[stream]]
            if any(len(groups) > 0 for groups in cross_lanes):
                critical = True
                c.critical_seconds += 1
                if any(
                    g is not None and g.kind is GroupKind.MOVING
                    for g in close_groups(cross_lanes)
                ):
                    critical_moving = True
                    c.critical_moving_seconds += 1
            else:
                c.clear_seconds += 1
        flags.append(SecondFlags(t, stream, crossing, critical, critical_moving))
    return flags


def finalize_period(
    counters: Mapping[str, ExposureCounters], period_start: int, period_end: int
) -> list[PeriodRow]:
    """Snapshot and reset all counters at a period boundary.

    Verifies the accounting identities before emitting rows; a violation can
    only come from a bug and raises :class:`InvariantViolationError`.
    """
    length = period_end - period_start
    rows: list[PeriodRow] = []
    for stream in sorted(counters):
        c = counters[stream]
        if c.crossing_seconds != c.clear_seconds + c.critical_seconds:
            raise InvariantViolationError(
                f"stream {stream}: crossing={c.crossing_seconds} != "
                f"clear={c.clear_seconds} + critical={c.critical_seconds}"
            )
        if c.critical_moving_seconds > c.critical_seconds:
            raise InvariantViolationError(
                f"stream {stream}: critical_moving={c.critical_moving_seconds} > "
                f"critical={c.critical_seconds}"
            )
        if c.crossing_seconds > length:
            raise InvariantViolationError(
                f"stream {stream}: crossing={c.crossing_seconds} exceeds period length {length}"
            )
        rows.append(
            PeriodRow(
                stream,
                period_start,
                period_end,
                c.crossing_seconds,
                c.clear_seconds,
                c.critical_seconds,
                c.critical_moving_seconds,
            )
        )
        c.reset()
    return rows


class ExposureTracker:
    """Owns the per-stream counters and the period clock for one run."""

    def __init__(self, streams: Iterable[str], cross_traffic: Mapping[str, str], period: int):
        if period < 1:
            raise ValueError("period must be >= 1 second")
        self._counters = {s: ExposureCounters(s) for s in streams}
        self._cross = dict(cross_traffic)
        self._period = period
        self._period_start: int | None = None
        self._last_t: int | None = None

    @property
    def counters(self) -> dict[str, ExposureCounters]:
        return self._counters

    def update(
        self,
        t: int,
        origins: Mapping[Group, str],
        lane_groups_by_approach: Mapping[str, Sequence[Sequence[Group]]],
    ) -> tuple[list[SecondFlags], list[PeriodRow]]:
        """Advance one second; returns this second's flags plus any period
        rows finalized at this boundary."""
        if self._period_start is None:
            self._period_start = t
        self._last_t = t
        flags = update_exposure(self._counters, t, origins, lane_groups_by_approach, self._cross)
        rows: list[PeriodRow] = []
        if t - self._period_start + 1 == self._period:
            rows = finalize_period(self._counters, self._period_start, t + 1)
            self._period_start = t + 1
        return flags, rows

    def finish(self) -> list[PeriodRow]:
        """Finalize a trailing partial period, if any seconds elapsed in it."""
        if self._period_start is None or self._last_t is None:
            return []
        if self._last_t < self._period_start:
            return []
        rows = finalize_period(self._counters, self._period_start, self._last_t + 1)
        self._period_start = self._last_t + 1
        return rows
