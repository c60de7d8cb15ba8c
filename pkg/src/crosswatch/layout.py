"""Intersection topology: zones, approaches, stop lines and their wiring.

Layouts are described in a line-oriented ``key = value`` document::

    [zone] id=CZ kind=conflict w=4 h=4
    [zone] id=A0 kind=lane len=8 approach=A
    [approach] id=A signal=SA lanes=A0
    [stopline] id=SL_A approach=A upstream=A0:0-2 downstream=CZ:(0,0)-(0,3)
    [cross] A=B B=A
    [thresholds] moving=2 stationary=3
    [period] T=3600

Blank lines and ``#`` comments are ignored. An optional ``[states]`` section
maps raw sensor codes onto the four canonical cell codes, e.g.
``[states] 0=. 1=m 2=m 3=s 4=e 5=.``; unmapped canonical codes stay valid.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

from .grid import CODE_TO_STATE, CellState, Zone, ZoneKind


class LayoutError(ValueError):
    """Syntax or semantic problem in a layout document."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


@dataclass(frozen=True)
class Approach:
    """Entry approach: an ordered list of lane zones behind one signal."""

    id: str
    signal: str
    lanes: tuple[str, ...]


@dataclass(frozen=True)
class StopLine:
    """Boundary between a storage (lane) zone and a conflict zone.

    ``upstream_cells`` index into the lane zone, ``downstream_cells`` into
    the conflict zone; crossing rules watch these two fixed subsets.
    """

    id: str
    approach: str
    upstream_zone: str
    upstream_cells: tuple[int, ...]
    downstream_zone: str
    downstream_cells: tuple[int, ...]


@dataclass
class Layout:
    zones: dict[str, Zone]
    approaches: dict[str, Approach]
    stop_lines: dict[str, StopLine]
    cross_traffic: dict[str, str]
    moving_threshold: int = 2
    stationary_threshold: int = 3
    period: int = 3600
    state_codes: dict[str, CellState] = field(default_factory=lambda: dict(CODE_TO_STATE))

    @property
    def conflict_zone_ids(self) -> list[str]:
        return [z.id for z in self.zones.values() if z.kind is ZoneKind.CONFLICT]

    def with_overrides(
        self,
        moving_threshold: int | None = None,
        stationary_threshold: int | None = None,
        period: int | None = None,
    ) -> "Layout":
        out = replace(self)
        if moving_threshold is not None:
            out.moving_threshold = moving_threshold
        if stationary_threshold is not None:
            out.stationary_threshold = stationary_threshold
        if period is not None:
            out.period = period
        _check_positive(out)
        return out


def _check_positive(layout: Layout) -> None:
    if layout.moving_threshold < 1 or layout.stationary_threshold < 1:
        raise LayoutError("group thresholds must be >= 1")
    if layout.period < 1:
        raise LayoutError("period must be >= 1 second")


_CELL_2D = re.compile(r"^\((\d+),(\d+)\)$")
_RANGE_2D = re.compile(r"^\((\d+),(\d+)\)-\((\d+),(\d+)\)$")
_RANGE_1D = re.compile(r"^(\d+)-(\d+)$")


def split_terms(text: str) -> list[str]:
    """Split on commas that sit outside parentheses, so 2-D cell tokens like
    ``(0,3)`` survive."""
    parts: list[str] = []
    depth = 0
    current: list[str] = []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(current))
            current = []
        else:
            current.append(ch)
    parts.append("".join(current))
    return parts


def parse_cell_subset(spec: str, zones: dict[str, Zone], line: int | None = None) -> tuple[str, tuple[int, ...]]:
    """Parse ``ZONE:terms`` into (zone id, sorted flat cell indices).

    Terms are comma separated; a term is a lane index ``3``, a lane range
    ``0-2``, a 2-D cell ``(r,c)`` or a 2-D rectangle ``(r1,c1)-(r2,c2)``.
    """
    zone_id, sep, body = spec.partition(":")
    if not sep or not body:
        raise LayoutError(f"bad cell subset {spec!r} (expected ZONE:cells)", line)
    zone = zones.get(zone_id)
    if zone is None:
        raise LayoutError(f"cell subset {spec!r} references unknown zone {zone_id!r}", line)
    indices: list[int] = []
    for term in split_terms(body):
        m = _RANGE_2D.match(term)
        if m:
            r1, c1, r2, c2 = map(int, m.groups())
            if r1 > r2 or c1 > c2:
                raise LayoutError(f"empty rectangle {term!r} in {spec!r}", line)
            try:
                indices.extend(
                    zone.index(r, c) for r in range(r1, r2 + 1) for c in range(c1, c2 + 1)
                )
            except IndexError as exc:
                raise LayoutError(f"{exc} in subset {spec!r}", line) from None
            continue
        m = _CELL_2D.match(term)
        if m:
            try:
                indices.append(zone.index(int(m.group(1)), int(m.group(2))))
            except IndexError as exc:
                raise LayoutError(f"{exc} in subset {spec!r}", line) from None
            continue
        m = _RANGE_1D.match(term)
        if m:
            lo, hi = int(m.group(1)), int(m.group(2))
            if lo > hi:
                raise LayoutError(f"empty range {term!r} in {spec!r}", line)
            indices.extend(range(lo, hi + 1))
            continue
        if term.isdigit():
            indices.append(int(term))
            continue
        raise LayoutError(f"bad cell term {term!r} in subset {spec!r}", line)
    for i in indices:
        if not 0 <= i < zone.n_cells:
            raise LayoutError(f"cell {i} outside zone {zone_id!r} in subset {spec!r}", line)
    if len(set(indices)) != len(indices):
        raise LayoutError(f"duplicate cells in subset {spec!r}", line)
    return zone_id, tuple(sorted(indices))


def _split_entry(line_no: int, text: str) -> tuple[str, dict[str, str]]:
    m = re.match(r"^\[(\w+)\]\s*(.*)$", text)
    if not m:
        raise LayoutError(f"expected a [section] line, got {text!r}", line_no)
    section, rest = m.group(1), m.group(2)
    fields: dict[str, str] = {}
    for token in rest.split():
        key, sep, value = token.partition("=")
        if not sep or not key or not value:
            raise LayoutError(f"expected key=value, got {token!r}", line_no)
        if key in fields:
            raise LayoutError(f"duplicate field {key!r}", line_no)
        fields[key] = value
    return section, fields


def _require_int(fields: dict[str, str], key: str, line_no: int, minimum: int = 1) -> int:
    raw = fields.pop(key, None)
    if raw is None:
        raise LayoutError(f"missing field {key!r}", line_no)
    try:
        value = int(raw)
    except ValueError:
        raise LayoutError(f"field {key!r} must be an integer, got {raw!r}", line_no) from None
    if value < minimum:
        raise LayoutError(f"field {key!r} must be >= {minimum}, got {value}", line_no)
    return value


def _reject_unknown(section: str, fields: dict[str, str], line_no: int) -> None:
    if fields:
        raise LayoutError(f"unknown field(s) in [{section}]: {', '.join(sorted(fields))}", line_no)


def parse_layout(text: str) -> Layout:
    """Parse and validate a layout document."""
    entries: list[tuple[int, str, dict[str, str]]] = []
    for line_no, raw in enumerate(text.splitlines(), 1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        entries.append((line_no, *_split_entry(line_no, stripped)))

    zones: dict[str, Zone] = {}
    for line_no, section, fields in entries:
        if section != "zone":
            continue
        fields = dict(fields)
        zone_id = fields.pop("id", None)
        kind = fields.pop("kind", None)
        if zone_id is None or kind is None:
            raise LayoutError("[zone] needs id= and kind=", line_no)
        if zone_id in zones:
            raise LayoutError(f"duplicate zone id {zone_id!r}", line_no)
        if kind == "conflict":
            width = _require_int(fields, "w", line_no)
            height = _require_int(fields, "h", line_no)
            _reject_unknown(section, fields, line_no)
            zones[zone_id] = Zone(zone_id, ZoneKind.CONFLICT, width, height)
        elif kind == "lane":
            length = _require_int(fields, "len", line_no)
            approach = fields.pop("approach", None)
            if approach is None:
                raise LayoutError("lane zones need approach=", line_no)
            _reject_unknown(section, fields, line_no)
            zones[zone_id] = Zone(zone_id, ZoneKind.LANE, length, approach=approach)
        else:
            raise LayoutError(f"unknown zone kind {kind!r}", line_no)

    approaches: dict[str, Approach] = {}
    stop_lines: dict[str, StopLine] = {}
    cross: dict[str, str] = {}
    moving_threshold = stationary_threshold = period = None
    state_codes = dict(CODE_TO_STATE)

    for line_no, section, fields in entries:
        fields = dict(fields)
        if section == "zone":
            continue
        if section == "approach":
            appr_id = fields.pop("id", None)
            signal = fields.pop("signal", None)
            lanes = fields.pop("lanes", None)
            if not (appr_id and signal and lanes):
                raise LayoutError("[approach] needs id=, signal= and lanes=", line_no)
            _reject_unknown(section, fields, line_no)
            if appr_id in approaches:
                raise LayoutError(f"duplicate approach id {appr_id!r}", line_no)
            lane_ids = tuple(lanes.split(","))
            for lane_id in lane_ids:
                lane = zones.get(lane_id)
                if lane is None or lane.kind is not ZoneKind.LANE:
                    raise LayoutError(f"approach {appr_id!r} references non-lane zone {lane_id!r}", line_no)
                if lane.approach != appr_id:
                    raise LayoutError(
                        f"lane {lane_id!r} is declared for approach {lane.approach!r},"
                        f" not {appr_id!r}", line_no
                    )
            approaches[appr_id] = Approach(appr_id, signal, lane_ids)
        elif section == "stopline":
            sl_id = fields.pop("id", None)
            approach = fields.pop("approach", None)
            upstream = fields.pop("upstream", None)
            downstream = fields.pop("downstream", None)
            if not (sl_id and approach and upstream and downstream):
                raise LayoutError("[stopline] needs id=, approach=, upstream= and downstream=", line_no)
            _reject_unknown(section, fields, line_no)
            if sl_id in stop_lines:
                raise LayoutError(f"duplicate stop line id {sl_id!r}", line_no)
            up_zone, up_cells = parse_cell_subset(upstream, zones, line_no)
            down_zone, down_cells = parse_cell_subset(downstream, zones, line_no)
            if up_zone == down_zone and set(up_cells) & set(down_cells):
                raise LayoutError(
                    f"stop line {sl_id!r}: upstream and downstream subsets overlap", line_no
                )
            stop_lines[sl_id] = StopLine(sl_id, approach, up_zone, up_cells, down_zone, down_cells)
        elif section == "cross":
            for a, b in fields.items():
                if a in cross:
                    raise LayoutError(f"duplicate cross-traffic entry for {a!r}", line_no)
                cross[a] = b
        elif section == "thresholds":
            moving_threshold = _require_int(fields, "moving", line_no)
            stationary_threshold = _require_int(fields, "stationary", line_no)
            _reject_unknown(section, fields, line_no)
        elif section == "period":
            period = _require_int(fields, "T", line_no)
            _reject_unknown(section, fields, line_no)
        elif section == "states":
            for code, main in fields.items():
                if len(code) != 1:
                    raise LayoutError(f"state codes are single characters, got {code!r}", line_no)
                if main not in CODE_TO_STATE:
                    raise LayoutError(f"state code {code!r} maps to unknown state {main!r}", line_no)
                state_codes[code] = CODE_TO_STATE[main]
        else:
            raise LayoutError(f"unknown section [{section}]", line_no)

    layout = Layout(
        zones=zones,
        approaches=approaches,
        stop_lines=stop_lines,
        cross_traffic=cross,
        moving_threshold=moving_threshold if moving_threshold is not None else 2,
        stationary_threshold=stationary_threshold if stationary_threshold is not None else 3,
        period=period if period is not None else 3600,
        state_codes=state_codes,
    )
    _validate(layout)
    return layout


def _validate(layout: Layout) -> None:
    if not layout.zones:
        raise LayoutError("layout declares no zones")
    _check_positive(layout)

    claimed_lanes: dict[str, str] = {}
    for approach in layout.approaches.values():
        for lane_id in approach.lanes:
            if lane_id in claimed_lanes:
                raise LayoutError(
                    f"lane {lane_id!r} listed by both approaches"
                    f" {claimed_lanes[lane_id]!r} and {approach.id!r}"
                )
            claimed_lanes[lane_id] = approach.id
    for zone in layout.zones.values():
        if zone.kind is ZoneKind.LANE:
            if zone.approach not in layout.approaches:
                raise LayoutError(f"lane {zone.id!r} references unknown approach {zone.approach!r}")
            if zone.id not in claimed_lanes:
                raise LayoutError(f"lane {zone.id!r} is not listed by approach {zone.approach!r}")

    feeders: dict[str, set[str]] = {}
    for sl in layout.stop_lines.values():
        if sl.approach not in layout.approaches:
            raise LayoutError(f"stop line {sl.id!r} references unknown approach {sl.approach!r}")
        up = layout.zones[sl.upstream_zone]
        if up.kind is not ZoneKind.LANE or up.approach != sl.approach:
            raise LayoutError(
                f"stop line {sl.id!r}: upstream subset must sit on a lane of approach {sl.approach!r}"
            )
        down = layout.zones[sl.downstream_zone]
        if down.kind is not ZoneKind.CONFLICT:
            raise LayoutError(f"stop line {sl.id!r}: downstream subset must sit in a conflict zone")
        feeders.setdefault(sl.downstream_zone, set()).add(sl.approach)
    for zone_id, approaches in feeders.items():
        if len(approaches) > 2:
            raise LayoutError(
                f"conflict zone {zone_id!r} is fed by {len(approaches)} approaches;"
                " at most two are supported"
            )

    if set(layout.cross_traffic) != set(layout.approaches):
        raise LayoutError("[cross] must map every approach exactly once")
    for a, b in layout.cross_traffic.items():
        if b not in layout.approaches:
            raise LayoutError(f"cross-traffic approach {b!r} (for {a!r}) does not exist")
        if b == a:
            raise LayoutError(f"approach {a!r} cannot be its own cross traffic")
        if layout.cross_traffic.get(b) != a:
            raise LayoutError(f"cross-traffic map is not symmetric for {a!r}/{b!r}")
