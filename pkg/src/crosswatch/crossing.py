"""Stop-line crossing detection.

Each stop line watches two fixed cell subsets, one upstream (storage lane)
and one downstream (conflict zone). Every second both subsets are qualified
into a movement state from their occupancy statistics; a small stateful rule
set then decides whether traffic flowed across the line, and simultaneous
crossings into one conflict zone are resolved to a single origin approach.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Mapping

from .grid import Signal, ZoneStats, zone_stats
from .frames import Frame
from .layout import Layout, StopLine


class MovementState(enum.Enum):
    """Qualified movement state of one stop-line subset for one second."""

    EMPTY = "empty"
    STATIONARY = "stationary"
    PAST_MOVEMENT = "past_movement"
    FUTURE_MOVEMENT = "future_movement"
    MOVEMENT = "movement"


def _sparse(stats: ZoneStats) -> bool:
    # tau_presence < 10%, compared in exact integer arithmetic
    return 10 * stats.n_presence < stats.n_cells


def _low_movement(stats: ZoneStats) -> bool:
    # tau_movement < 10%
    return 10 * stats.n_movement < stats.n_cells


def qualify_downstream(stats: ZoneStats) -> MovementState:
    """Qualify the conflict-zone side of a stop line.

    Empty needs sparse presence and no moving cells; Stationary needs dense
    presence but negligible movement and no moving cells. Otherwise the
    subset is in Past Movement when all its movement is end-of-presence, and
    in Movement when moving cells remain.
    """
    if _sparse(stats) and stats.n_moving == 0:
        return MovementState.EMPTY
    if not _sparse(stats) and _low_movement(stats) and stats.n_moving == 0:
        return MovementState.STATIONARY
    if stats.n_movement == stats.n_end_of_presence:
        return MovementState.PAST_MOVEMENT
    return MovementState.MOVEMENT


def qualify_upstream(stats: ZoneStats) -> MovementState:
    """Qualify the storage-lane side of a stop line.

    Mirrors the downstream rules with end-of-presence as the tell-tale:
    Empty/Stationary require no end-of-presence cells, and a subset whose
    movement is all moving presence is in Future Movement (traffic
    approaching but not yet flowing off the subset).
    """
    if _sparse(stats) and stats.n_end_of_presence == 0:
        return MovementState.EMPTY
    if not _sparse(stats) and _low_movement(stats) and stats.n_end_of_presence == 0:
        return MovementState.STATIONARY
    if stats.n_movement == stats.n_moving:
        return MovementState.FUTURE_MOVEMENT
    return MovementState.MOVEMENT


@dataclass(frozen=True)
class StopLineState:
    """Per-stop-line crossing conditions carried from second to second."""

    upstream_met: bool = False
    downstream_met: bool = False
    previous_upstream: MovementState = MovementState.EMPTY


def update_crossing_conditions(
    state: StopLineState, upstream: MovementState, downstream: MovementState
) -> StopLineState:
    """Advance the crossing conditions by one second.

    The upstream condition latches on Movement and clears on a
    Movement-to-anything-else transition; in between it keeps its value.
    The downstream condition has no memory: it is met exactly when the
    downstream subset is in Movement while the upstream condition holds.
    """
    upstream_met = state.upstream_met
    if upstream is MovementState.MOVEMENT:
        upstream_met = True
    elif state.previous_upstream is MovementState.MOVEMENT:
        upstream_met = False
    downstream_met = downstream is MovementState.MOVEMENT and upstream_met
    return StopLineState(upstream_met, downstream_met, upstream)


def crossing_detected(
    state: StopLineState, upstream: MovementState, ratio_stats: ZoneStats
) -> bool:
    """Crossing test for the current second, after conditions were updated.

    Requires both conditions met, the upstream subset in Movement, and at
    least half of the occupied cells in ``ratio_stats`` to show movement.
    """
    return (
        state.upstream_met
        and state.downstream_met
        and upstream is MovementState.MOVEMENT
        and 2 * ratio_stats.n_movement >= ratio_stats.n_presence
    )


@dataclass(frozen=True)
class CrossingEvent:
    """Detected stop-line crossing (at most one per stop line per second)."""

    t: int
    stop_line: str
    approach: str


class TieBreak(str, enum.Enum):
    NONE = "none"
    SIGNAL = "signal"
    RECENT_GREEN = "recent_green"
    LEXICOGRAPHIC = "lexicographic"


@dataclass(frozen=True)
class AttributedCrossing:
    """Single origin resolved from one second's crossings into a conflict zone."""

    t: int
    stop_line: str
    approach: str
    tiebreak: TieBreak


def attribute_origin(
    events: Iterable[CrossingEvent],
    signals: Mapping[str, Signal],
    last_green: Mapping[str, int],
) -> AttributedCrossing | None:
    """Decide the origin of road users newly detected in a conflict zone.

    All new arrivals within one second are assumed to share one origin. With
    crossings from a single approach the answer is direct. With two, the
    approach whose signal is not red wins; if neither (or both) is non-red,
    the approach whose signal was green most recently wins, and remaining
    ties fall back to the lexicographically smaller approach id. The
    tie-break taken is recorded in the result.
    """
    events = list(events)
    if not events:
        return None
    approaches = sorted({e.approach for e in events})
    if len(approaches) == 1:
        origin, tiebreak = approaches[0], TieBreak.NONE
    elif len(approaches) == 2:
        non_red = [a for a in approaches if signals[a] is not Signal.RED]
        if len(non_red) == 1:
            origin, tiebreak = non_red[0], TieBreak.SIGNAL
        else:
            greens = [last_green.get(a, -1) for a in approaches]
            if greens[0] != greens[1]:
                origin = approaches[0] if greens[0] > greens[1] else approaches[1]
                tiebreak = TieBreak.RECENT_GREEN
            else:
                origin, tiebreak = approaches[0], TieBreak.LEXICOGRAPHIC
    else:
        raise ValueError(f"more than two approaches crossed at once: {approaches}")
    t = events[0].t
    stop_line = min(e.stop_line for e in events if e.approach == origin)
    return AttributedCrossing(t, stop_line, origin, tiebreak)


class CrossingTracker:
    """Advances every stop line's state machine one second at a time and
    resolves per-conflict-zone origins.

    State is strictly per intersection; feed frames in consecutive-second
    order from a single owner.
    """

    def __init__(self, layout: Layout, movement_ratio_subset: str = "upstream"):
        if movement_ratio_subset not in ("upstream", "downstream", "both"):
            raise ValueError(f"bad movement_ratio_subset {movement_ratio_subset!r}")
        self._layout = layout
        self._ratio_subset = movement_ratio_subset
        self._states: dict[str, StopLineState] = {
            sl_id: StopLineState() for sl_id in layout.stop_lines
        }
        self._last_green: dict[str, int] = {}

    @property
    def last_green(self) -> dict[str, int]:
        return dict(self._last_green)

    def step(self, frame: Frame) -> tuple[list[CrossingEvent], dict[str, AttributedCrossing]]:
        """Process one frame; returns (raw events, origin per conflict zone)."""
        for approach, signal in frame.signals.items():
            if signal is Signal.GREEN:
                self._last_green[approach] = frame.t

        events: list[CrossingEvent] = []
        by_zone: dict[str, list[CrossingEvent]] = {}
        for sl_id, sl in self._layout.stop_lines.items():
            up_stats = zone_stats(frame.cells[sl.upstream_zone], sl.upstream_cells)
            down_stats = zone_stats(frame.cells[sl.downstream_zone], sl.downstream_cells)
            up_state = qualify_upstream(up_stats)
            down_state = qualify_downstream(down_stats)
            state = update_crossing_conditions(self._states[sl_id], up_state, down_state)
            self._states[sl_id] = state
            if self._passes_ratio(state, up_state, sl, up_stats, down_stats):
                event = CrossingEvent(frame.t, sl_id, sl.approach)
                events.append(event)
                by_zone.setdefault(sl.downstream_zone, []).append(event)

        attributed: dict[str, AttributedCrossing] = {}
        for zone_id in sorted(by_zone):
            origin = attribute_origin(by_zone[zone_id], frame.signals, self._last_green)
            if origin is not None:
                attributed[zone_id] = origin
        return events, attributed

    def _passes_ratio(
        self,
        state: StopLineState,
        up_state: MovementState,
        sl: StopLine,
        up_stats: ZoneStats,
        down_stats: ZoneStats,
    ) -> bool:
        if self._ratio_subset == "upstream":
            return crossing_detected(state, up_state, up_stats)
        if self._ratio_subset == "downstream":
            return crossing_detected(state, up_state, down_stats)
        return crossing_detected(state, up_state, up_stats) and crossing_detected(
            state, up_state, down_stats
        )

    def state_of(self, stop_line: str) -> StopLineState:
        return self._states[stop_line]
