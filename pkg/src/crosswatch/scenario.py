"""Scripted-traffic scenarios: render vehicle itineraries into frame streams
with by-construction ground truth.

Scenarios drive end-to-end tests: the renderer knows every vehicle's cells,
motion state and approach, so it can derive the true exposure flags directly
from the definitions, without the stop-line rule machinery. Scenario
documents look like::

    [scenario] layout=fig1.layout duration=30 seed=7
    [signal] approach=A plan=G:0-14,R:15-29
    [signal] approach=B plan=R:0-29
    [vehicle] id=a1 approach=A enter=0 footprint=2 path=A0:7,A0:6,CZ:(1,0)|(2,0) stops=4-6
    [noise] rate=0.01

A vehicle's head advances one path step per second except during its stop
intervals (half-open ``start-end`` second ranges); it occupies its last
``footprint`` steps, growing in at the first step and draining out past the
last. A step is one or more same-zone cells joined by ``|``, so a two-cell
lane vehicle can widen to a 2x2 patch inside a conflict zone.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .evaluate import AnnotationRecord
from .exposure import PeriodRow, SecondFlags
from .frames import Frame
from .grid import CellState, Signal, SIGNAL_CODES, ZoneKind
from .layout import Layout, split_terms


class ScenarioError(ValueError):
    """Invalid scenario document or physically impossible script."""


Cell = tuple[str, int]  # (zone id, flat cell index)
Step = tuple[Cell, ...]


@dataclass(frozen=True)
class VehicleScript:
    id: str
    approach: str
    enter_t: int
    footprint: int
    steps: tuple[Step, ...]
    stops: tuple[tuple[int, int], ...] = ()

    def stopped_at(self, t: int) -> bool:
        return any(start <= t < end for start, end in self.stops)


@dataclass
class ScenarioSpec:
    duration: int
    signal_plans: dict[str, list[Signal]]
    vehicles: list[VehicleScript] = field(default_factory=list)
    layout_path: str | None = None
    noise_rate: float = 0.0
    seed: int = 0
    # vehicle entries parsed from a document; bound to a layout in render()
    pending_vehicles: list[tuple[int, dict[str, str]]] = field(
        default_factory=list, repr=False, compare=False
    )


@dataclass
class RenderedScenario:
    frames: list[Frame]
    truth_flags: list[SecondFlags]
    truth_periods: list[PeriodRow]

    def annotations(self) -> list[AnnotationRecord]:
        """Ground truth in annotation form, ready for the scorer."""
        return [
            AnnotationRecord(f.t, f.stream, f.critical, f.critical_moving)
            for f in self.truth_flags
        ]


_CELL_2D = re.compile(r"^\((\d+),(\d+)\)$")


def _parse_cell(token: str, layout: Layout, context: str) -> Cell:
    zone_id, sep, body = token.partition(":")
    if not sep or not body:
        raise ScenarioError(f"{context}: bad cell token {token!r}")
    zone = layout.zones.get(zone_id)
    if zone is None:
        raise ScenarioError(f"{context}: unknown zone {zone_id!r}")
    m = _CELL_2D.match(body)
    if m:
        try:
            return zone_id, zone.index(int(m.group(1)), int(m.group(2)))
        except IndexError as exc:
            raise ScenarioError(f"{context}: {exc}") from None
    if body.isdigit():
        index = int(body)
        if not 0 <= index < zone.n_cells:
            raise ScenarioError(f"{context}: cell {index} outside zone {zone_id!r}")
        return zone_id, index
    raise ScenarioError(f"{context}: bad cell token {token!r}")


def parse_path(text: str, layout: Layout, context: str) -> tuple[Step, ...]:
    """Parse a comma-separated step list; each step is ``ZONE:cell(|cell)*``."""
    steps: list[Step] = []
    for raw_step in split_terms(text):
        zone_id, sep, body = raw_step.partition(":")
        if not sep or not body:
            raise ScenarioError(f"{context}: bad path step {raw_step!r}")
        cells = tuple(
            _parse_cell(f"{zone_id}:{cell_token}", layout, context)
            for cell_token in body.split("|")
        )
        if len(set(cells)) != len(cells):
            raise ScenarioError(f"{context}: duplicate cells in step {raw_step!r}")
        steps.append(cells)
    return tuple(steps)


def parse_scenario(text: str) -> ScenarioSpec:
    """Parse a scenario document (layout is resolved later by the renderer)."""
    duration: int | None = None
    layout_path: str | None = None
    seed = 0
    noise_rate = 0.0
    raw_signals: list[tuple[int, str, str]] = []
    raw_vehicles: list[tuple[int, dict[str, str]]] = []

    for line_no, raw in enumerate(text.splitlines(), 1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        m = re.match(r"^\[(\w+)\]\s*(.*)$", stripped)
        if not m:
            raise ScenarioError(f"line {line_no}: expected a [section] line, got {stripped!r}")
        section, rest = m.group(1), m.group(2)
        fields: dict[str, str] = {}
        for token in rest.split():
            key, sep, value = token.partition("=")
            if not sep:
                raise ScenarioError(f"line {line_no}: expected key=value, got {token!r}")
            fields[key] = value
        if section == "scenario":
            layout_path = fields.pop("layout", None)
            try:
                duration = int(fields.pop("duration"))
                seed = int(fields.pop("seed", "0"))
            except (KeyError, ValueError):
                raise ScenarioError(f"line {line_no}: [scenario] needs integer duration=") from None
            if fields:
                raise ScenarioError(f"line {line_no}: unknown [scenario] field(s) {sorted(fields)}")
        elif section == "noise":
            try:
                noise_rate = float(fields.pop("rate"))
            except (KeyError, ValueError):
                raise ScenarioError(f"line {line_no}: [noise] needs rate=") from None
            if not 0.0 <= noise_rate <= 1.0:
                raise ScenarioError(f"line {line_no}: noise rate must be in [0,1]")
        elif section == "signal":
            approach = fields.pop("approach", None)
            plan = fields.pop("plan", None)
            if not approach or not plan:
                raise ScenarioError(f"line {line_no}: [signal] needs approach= and plan=")
            raw_signals.append((line_no, approach, plan))
        elif section == "vehicle":
            raw_vehicles.append((line_no, fields))
        else:
            raise ScenarioError(f"line {line_no}: unknown section [{section}]")

    if duration is None or duration < 1:
        raise ScenarioError("[scenario] must declare a positive duration")

    signal_plans: dict[str, list[Signal]] = {}
    for line_no, approach, plan in raw_signals:
        if approach in signal_plans:
            raise ScenarioError(f"line {line_no}: duplicate signal plan for {approach!r}")
        timeline: list[Signal | None] = [None] * duration
        for segment in plan.split(","):
            m = re.match(r"^([A-Z]):(\d+)-(\d+)$", segment)
            if not m or m.group(1) not in SIGNAL_CODES:
                raise ScenarioError(f"line {line_no}: bad plan segment {segment!r}")
            lo, hi = int(m.group(2)), int(m.group(3))
            if lo > hi or hi >= duration:
                raise ScenarioError(f"line {line_no}: segment {segment!r} outside 0-{duration - 1}")
            for t in range(lo, hi + 1):
                if timeline[t] is not None:
                    raise ScenarioError(f"line {line_no}: overlapping plan at t={t}")
                timeline[t] = SIGNAL_CODES[m.group(1)]
        if any(s is None for s in timeline):
            missing = next(t for t, s in enumerate(timeline) if s is None)
            raise ScenarioError(f"line {line_no}: signal plan leaves t={missing} uncovered")
        signal_plans[approach] = timeline  # type: ignore[assignment]

    return ScenarioSpec(
        duration=duration,
        signal_plans=signal_plans,
        layout_path=layout_path,
        noise_rate=noise_rate,
        seed=seed,
        pending_vehicles=raw_vehicles,
    )


def _bind_vehicles(spec: ScenarioSpec, layout: Layout) -> None:
    """Turn raw vehicle fields (kept from parsing) into VehicleScripts."""
    seen: set[str] = {v.id for v in spec.vehicles}
    for line_no, fields in spec.pending_vehicles:
        fields = dict(fields)
        context = f"line {line_no}"
        vid = fields.pop("id", None)
        approach = fields.pop("approach", None)
        path = fields.pop("path", None)
        if not (vid and approach and path):
            raise ScenarioError(f"{context}: [vehicle] needs id=, approach= and path=")
        if vid in seen:
            raise ScenarioError(f"{context}: duplicate vehicle id {vid!r}")
        seen.add(vid)
        try:
            enter_t = int(fields.pop("enter", "0"))
            footprint = int(fields.pop("footprint", "2"))
        except ValueError:
            raise ScenarioError(f"{context}: enter= and footprint= must be integers") from None
        stops: list[tuple[int, int]] = []
        stops_raw = fields.pop("stops", "")
        if stops_raw:
            for part in stops_raw.split(","):
                m = re.match(r"^(\d+)-(\d+)$", part)
                if not m or int(m.group(1)) >= int(m.group(2)):
                    raise ScenarioError(f"{context}: bad stop interval {part!r}")
                stops.append((int(m.group(1)), int(m.group(2))))
        if fields:
            raise ScenarioError(f"{context}: unknown [vehicle] field(s) {sorted(fields)}")
        steps = parse_path(path, layout, context)
        spec.vehicles.append(
            VehicleScript(vid, approach, enter_t, footprint, steps, tuple(stops))
        )
    spec.pending_vehicles = []


def _validate_vehicle(vehicle: VehicleScript, layout: Layout) -> None:
    if vehicle.footprint < 1:
        raise ScenarioError(f"vehicle {vehicle.id}: footprint must be >= 1")
    if vehicle.enter_t < 0:
        raise ScenarioError(f"vehicle {vehicle.id}: enter must be >= 0")
    if not vehicle.steps:
        raise ScenarioError(f"vehicle {vehicle.id}: empty path")
    if vehicle.approach not in layout.approaches:
        raise ScenarioError(f"vehicle {vehicle.id}: unknown approach {vehicle.approach!r}")
    lanes = set(layout.approaches[vehicle.approach].lanes)
    for step in vehicle.steps:
        for zone_id, _ in step:
            zone = layout.zones[zone_id]
            if zone.kind is ZoneKind.LANE and zone_id not in lanes:
                raise ScenarioError(
                    f"vehicle {vehicle.id}: lane {zone_id!r} does not belong to"
                    f" approach {vehicle.approach!r}"
                )
    for prev, cur in zip(vehicle.steps, vehicle.steps[1:]):
        near = False
        for zone_a, a in prev:
            for zone_b, b in cur:
                if zone_a != zone_b:
                    near = True  # zone handoff; geometry not comparable
                    continue
                zone = layout.zones[zone_a]
                if zone.kind is ZoneKind.LANE:
                    near = near or abs(a - b) <= 1
                else:
                    ra, ca = zone.rc(a)
                    rb, cb = zone.rc(b)
                    near = near or abs(ra - rb) + abs(ca - cb) <= 1
        if not near:
            raise ScenarioError(
                f"vehicle {vehicle.id}: consecutive path steps {prev} -> {cur}"
                " are not adjacent"
            )


def _occupancy_timeline(
    vehicle: VehicleScript, duration: int
) -> dict[int, tuple[tuple[Cell, ...], bool]]:
    """Cells occupied per second, with the vehicle's motion state."""
    timeline: dict[int, tuple[tuple[Cell, ...], bool]] = {}
    head = 0
    for t in range(vehicle.enter_t, duration):
        stopped = vehicle.stopped_at(t)
        if t > vehicle.enter_t and not stopped:
            head += 1
        tail = head - vehicle.footprint + 1
        if tail >= len(vehicle.steps):
            break
        cells: list[Cell] = []
        for step in vehicle.steps[max(0, tail) : min(head, len(vehicle.steps) - 1) + 1]:
            cells.extend(step)
        timeline[t] = (tuple(cells), not stopped)
    return timeline


def _lane_neighbours(n: int) -> Callable[[int], Iterable[int]]:
    return lambda i: (j for j in (i - 1, i + 1) if 0 <= j < n)


def _rect_neighbours(width: int, height: int) -> Callable[[int], Iterable[int]]:
    def around(i: int):
        r, c = divmod(i, width)
        if r > 0:
            yield i - width
        if r < height - 1:
            yield i + width
        if c > 0:
            yield i - 1
        if c < width - 1:
            yield i + 1

    return around


def _clusters(cells: set[int], neighbours: Callable[[int], Iterable[int]]) -> list[set[int]]:
    """Connected clusters of a sparse cell set (deliberately separate from the
    detector's group extraction, so scenario truth is an independent route)."""
    remaining = set(cells)
    out: list[set[int]] = []
    while remaining:
        seed = remaining.pop()
        component = {seed}
        frontier = [seed]
        while frontier:
            for nb in neighbours(frontier.pop()):
                if nb in remaining:
                    remaining.remove(nb)
                    component.add(nb)
                    frontier.append(nb)
        out.append(component)
    return out


def render(spec: ScenarioSpec, layout: Layout) -> RenderedScenario:
    """Render a scenario into frames plus ground-truth flags and counters.

    Cell states follow the grid semantics: occupied-and-moving cells are
    MOVING, occupied-while-stopped cells STATIONARY, and a cell a moving
    vehicle vacated this second is END_OF_PRESENCE (stationary vehicles
    release their cells straight to EMPTY). Two vehicles on one cell in the
    same second is a scripting error.
    """
    _bind_vehicles(spec, layout)
    for approach in layout.approaches:
        if approach not in spec.signal_plans:
            raise ScenarioError(f"no signal plan for approach {approach!r}")
        if len(spec.signal_plans[approach]) != spec.duration:
            raise ScenarioError(f"signal plan for {approach!r} does not cover the duration")
    for vehicle in spec.vehicles:
        _validate_vehicle(vehicle, layout)

    timelines = {v.id: _occupancy_timeline(v, spec.duration) for v in spec.vehicles}
    by_vehicle = {v.id: v for v in spec.vehicles}

    neighbour_fns: dict[str, Callable[[int], Iterable[int]]] = {}
    for zone in layout.zones.values():
        if zone.kind is ZoneKind.LANE:
            neighbour_fns[zone.id] = _lane_neighbours(zone.n_cells)
        else:
            neighbour_fns[zone.id] = _rect_neighbours(zone.width, zone.height)

    streams = sorted(layout.approaches)
    totals = {
        s: {"crossing": 0, "clear": 0, "critical": 0, "critical_moving": 0} for s in streams
    }
    frames: list[Frame] = []
    truth_flags: list[SecondFlags] = []
    prev_states: dict[str, list[int]] = {
        z.id: [int(CellState.EMPTY)] * z.n_cells for z in layout.zones.values()
    }

    for t in range(spec.duration):
        claims: dict[Cell, tuple[str, bool]] = {}
        for vid, timeline in timelines.items():
            entry = timeline.get(t)
            if entry is None:
                continue
            cells, moving = entry
            for cell in cells:
                if cell in claims:
                    other = claims[cell][0]
                    zone_id, index = cell
                    raise ScenarioError(
                        f"vehicles {other!r} and {vid!r} both occupy"
                        f" {zone_id}:{index} at t={t}"
                    )
                claims[cell] = (vid, moving)

        states: dict[str, list[int]] = {}
        for zone in layout.zones.values():
            row = [int(CellState.EMPTY)] * zone.n_cells
            states[zone.id] = row
        for (zone_id, index), (_vid, moving) in claims.items():
            states[zone_id][index] = int(CellState.MOVING if moving else CellState.STATIONARY)
        for zone_id, row in states.items():
            prev_row = prev_states[zone_id]
            for i, state in enumerate(row):
                if state == CellState.EMPTY and prev_row[i] == CellState.MOVING:
                    row[i] = int(CellState.END_OF_PRESENCE)
        prev_states = {zone_id: list(row) for zone_id, row in states.items()}

        truth_flags.extend(
            _truth_for_second(t, streams, layout, claims, by_vehicle, neighbour_fns, totals)
        )
        signals = {a: spec.signal_plans[a][t] for a in layout.approaches}
        frames.append(Frame(t, states, signals))

    if spec.noise_rate > 0.0:
        _flip_noise(frames, layout, spec.noise_rate, spec.seed)

    truth_periods = [
        PeriodRow(
            s,
            0,
            spec.duration,
            totals[s]["crossing"],
            totals[s]["clear"],
            totals[s]["critical"],
            totals[s]["critical_moving"],
        )
        for s in streams
    ]
    return RenderedScenario(frames, truth_flags, truth_periods)


def _truth_for_second(
    t: int,
    streams: list[str],
    layout: Layout,
    claims: dict[Cell, tuple[str, bool]],
    by_vehicle: dict[str, VehicleScript],
    neighbour_fns: dict[str, Callable[[int], Iterable[int]]],
    totals: dict[str, dict[str, int]],
) -> list[SecondFlags]:
    """Derive the true flags for one second straight from the definitions.

    Only clusters at least as large as the group thresholds count, mirroring
    what any grid-level observer can resolve; sub-threshold vehicles are
    invisible by design.
    """
    moving_cells: dict[str, dict[str, set[int]]] = {}
    stationary_cells: dict[str, set[int]] = {}
    for (zone_id, index), (vid, moving) in claims.items():
        if moving:
            approach = by_vehicle[vid].approach
            moving_cells.setdefault(zone_id, {}).setdefault(approach, set()).add(index)
        else:
            stationary_cells.setdefault(zone_id, set()).add(index)

    def lane_clusters(zone_id: str) -> list[tuple[int, bool]]:
        """(front cell, moving?) of each visible cluster on one lane."""
        out: list[tuple[int, bool]] = []
        for approach_cells in moving_cells.get(zone_id, {}).values():
            for cluster in _clusters(approach_cells, neighbour_fns[zone_id]):
                if len(cluster) >= layout.moving_threshold:
                    out.append((min(cluster), True))
        for cluster in _clusters(stationary_cells.get(zone_id, set()), neighbour_fns[zone_id]):
            if len(cluster) >= layout.stationary_threshold:
                out.append((min(cluster), False))
        return out

    flags: list[SecondFlags] = []
    for stream in streams:
        crossing = False
        for zone_id in layout.conflict_zone_ids:
            cells = moving_cells.get(zone_id, {}).get(stream, set())
            if any(
                len(cluster) >= layout.moving_threshold
                for cluster in _clusters(cells, neighbour_fns[zone_id])
            ):
                crossing = True
                break
        critical = critical_moving = False
        if crossing:
            totals[stream]["crossing"] += 1
            cross_lanes = layout.approaches[layout.cross_traffic[stream]].lanes
            per_lane = [lane_clusters(lane) for lane in cross_lanes]
            if any(per_lane):
                critical = True
                totals[stream]["critical"] += 1
                if any(min(clusters)[1] for clusters in per_lane if clusters):
                    critical_moving = True
                    totals[stream]["critical_moving"] += 1
            else:
                totals[stream]["clear"] += 1
        flags.append(SecondFlags(t, stream, crossing, critical, critical_moving))
    return flags


def _flip_noise(frames: list[Frame], layout: Layout, rate: float, seed: int) -> None:
    """Deterministically flip cells to a different state with probability
    ``rate`` (sensor corruption; ground truth is unaffected)."""
    rng = random.Random(seed)
    all_states = [int(s) for s in CellState]
    for frame in frames:
        for zone in layout.zones.values():
            row = frame.cells[zone.id]
            for i in range(len(row)):
                if rng.random() < rate:
                    choices = [s for s in all_states if s != row[i]]
                    row[i] = rng.choice(choices)
