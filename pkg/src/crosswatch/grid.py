"""Occupancy-grid data model: cell states, zones, subset statistics and
connected groups of road users.

All per-second logic in this package works on a virtual sensor grid. Each
grid cell carries one :class:`CellState` per second summarising the dynamics
of whatever passed over it. Cells are addressed by a flat integer index
within their zone (row-major for two-dimensional zones, 0 first for lanes).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence


class CellState(enum.IntEnum):
    """State of one grid cell over one second."""

    EMPTY = 0
    MOVING = 1
    STATIONARY = 2
    END_OF_PRESENCE = 3

    @property
    def code(self) -> str:
        return _STATE_TO_CODE[self]

    @property
    def is_presence(self) -> bool:
        """True when a road user covered the cell at some point this second."""
        return self is not CellState.EMPTY

    @property
    def is_movement(self) -> bool:
        """True when a road user moved over the cell this second."""
        return self in (CellState.MOVING, CellState.END_OF_PRESENCE)


#: Canonical single-character wire codes for the four cell states.
CODE_TO_STATE: dict[str, CellState] = {
    ".": CellState.EMPTY,
    "m": CellState.MOVING,
    "s": CellState.STATIONARY,
    "e": CellState.END_OF_PRESENCE,
}
_STATE_TO_CODE = {state: code for code, state in CODE_TO_STATE.items()}


class Signal(enum.Enum):
    """Traffic-signal aspect shown to one approach during one second."""

    RED = "R"
    GREEN = "G"
    AMBER = "A"


SIGNAL_CODES: dict[str, Signal] = {s.value: s for s in Signal}


class ZoneKind(enum.Enum):
    CONFLICT = "conflict"
    LANE = "lane"


@dataclass
class Zone:
    """One functional area of the intersection covered by the grid.

    Conflict zones are two-dimensional; their cells are indexed row-major
    and are adjacent to the four vertically/horizontally closest cells.
    Lane zones are linear; index 0 is the cell next to the conflict zone
    and cells are adjacent to their two closest cells.
    """

    id: str
    kind: ZoneKind
    width: int
    height: int = 1
    approach: str | None = None
    adjacency: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"zone {self.id!r}: cell counts must be >= 1")
        if self.kind is ZoneKind.LANE and self.height != 1:
            raise ValueError(f"zone {self.id!r}: lane zones are one cell wide")
        self.adjacency = self._build_adjacency()

    @property
    def n_cells(self) -> int:
        return self.width * self.height

    def index(self, row: int, col: int) -> int:
        """Flat index of cell (row, col) in a two-dimensional zone."""
        if not (0 <= row < self.height and 0 <= col < self.width):
            raise IndexError(f"cell ({row},{col}) outside zone {self.id!r}")
        return row * self.width + col

    def rc(self, index: int) -> tuple[int, int]:
        return divmod(index, self.width)

    def _build_adjacency(self) -> tuple[tuple[int, ...], ...]:
        if self.kind is ZoneKind.LANE:
            n = self.width
            return tuple(
                tuple(j for j in (i - 1, i + 1) if 0 <= j < n) for i in range(n)
            )
        neighbours = []
        for i in range(self.n_cells):
            r, c = self.rc(i)
            around = []
            if r > 0:
                around.append(i - self.width)
            if r < self.height - 1:
                around.append(i + self.width)
            if c > 0:
                around.append(i - 1)
            if c < self.width - 1:
                around.append(i + 1)
            neighbours.append(tuple(around))
        return tuple(neighbours)


@dataclass(frozen=True)
class ZoneStats:
    """Occupancy statistics of one cell subset for one second.

    Ratios are relative to the subset size, so ``tau_presence`` is the
    fraction of subset cells with any road-user presence this second.
    """

    n_cells: int
    n_moving: int
    n_stationary: int
    n_end_of_presence: int

    @property
    def n_presence(self) -> int:
        return self.n_moving + self.n_stationary + self.n_end_of_presence

    @property
    def n_movement(self) -> int:
        return self.n_moving + self.n_end_of_presence

    @property
    def tau_presence(self) -> float:
        return self.n_presence / self.n_cells

    @property
    def tau_movement(self) -> float:
        return self.n_movement / self.n_cells


def zone_stats(states: Sequence[int], subset: Iterable[int] | None = None) -> ZoneStats:
    """Count cell states over ``subset`` (whole zone when omitted)."""
    indices = range(len(states)) if subset is None else subset
    n = n_m = n_s = n_e = 0
    for i in indices:
        n += 1
        state = states[i]
        if state == CellState.MOVING:
            n_m += 1
        elif state == CellState.STATIONARY:
            n_s += 1
        elif state == CellState.END_OF_PRESENCE:
            n_e += 1
    if n == 0:
        raise ValueError("cell subset must not be empty")
    return ZoneStats(n, n_m, n_s, n_e)


class GroupKind(str, enum.Enum):
    MOVING = "moving"
    STATIONARY = "stationary"


@dataclass(frozen=True)
class Group:
    """Connected component of same-state cells, large enough to count as a
    group of road users."""

    zone_id: str
    kind: GroupKind
    cells: frozenset[int]

    @property
    def size(self) -> int:
        return len(self.cells)

    @property
    def front(self) -> int:
        """Smallest member cell index; on a lane this is the cell closest to
        the conflict zone."""
        return min(self.cells)


def detect_groups(
    states: Sequence[int],
    zone: Zone,
    moving_threshold: int = 2,
    stationary_threshold: int = 3,
) -> list[Group]:
    """Extract thresholded connected components of MOVING and STATIONARY cells.

    Components are formed independently per state under the zone's adjacency;
    EMPTY and END_OF_PRESENCE cells never form groups. Components smaller
    than their class threshold are discarded.
    """
    if moving_threshold < 1 or stationary_threshold < 1:
        raise ValueError("group thresholds must be >= 1")
    if len(states) != zone.n_cells:
        raise ValueError(
            f"zone {zone.id!r}: expected {zone.n_cells} cells, got {len(states)}"
        )
    groups: list[Group] = []
    adjacency = zone.adjacency
    for target, kind, threshold in (
        (CellState.MOVING, GroupKind.MOVING, moving_threshold),
        (CellState.STATIONARY, GroupKind.STATIONARY, stationary_threshold),
    ):
        visited = bytearray(zone.n_cells)
        for start in range(zone.n_cells):
            if visited[start] or states[start] != target:
                continue
            visited[start] = 1
            component = [start]
            stack = [start]
            while stack:
                for j in adjacency[stack.pop()]:
                    if not visited[j] and states[j] == target:
                        visited[j] = 1
                        component.append(j)
                        stack.append(j)
            if len(component) >= threshold:
                groups.append(Group(zone.id, kind, frozenset(component)))
    groups.sort(key=lambda g: (g.kind.value, g.front))
    return groups
