"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with ``pytest tests/test_acceptance.py -v -s``)."""

import random
import time

import pytest

from crosswatch import (
    ExposureDetector,
    ConfusionCounts,
    MovementState,
    Signal,
    ScenarioSpec,
    VehicleScript,
    Zone,
    ZoneKind,
    detect_groups,
    parse_layout,
    precision_recall,
    qualify_downstream,
    qualify_upstream,
    read_frames,
    render,
    score,
    write_frames,
    zone_stats,
)
from crosswatch.cli import main
from crosswatch.crossing import CrossingTracker

from bruteforce import oracle_groups
from conftest import FIG_LAYOUT, make_frame
from scenario_catalog import a_path, catalog, random_scenario
from test_evaluate import REPORTED_ROWS
from test_frames import STREAM as FIXTURE_STREAM


def _report(name: str, ok: bool) -> None:
    print(f"[acceptance] {name}: {'PASS' if ok else 'FAIL'}")
    assert ok, name


@pytest.fixture(scope="module")
def layout():
    return parse_layout(FIG_LAYOUT)


def test_criterion_1_metric_arithmetic():
    """All published confusion rows reproduce their printed percentages."""
    start = time.perf_counter()
    ok = True
    for tp, fp, fn, recall, precision in REPORTED_ROWS:
        pr = precision_recall(ConfusionCounts(tp, fp, fn))
        ok = ok and pr.recall_pct == recall and pr.precision_pct == precision
    elapsed = time.perf_counter() - start
    _report("C1 metric arithmetic (16 rows, exact)", ok and elapsed < 1.0)


def test_criterion_2_counter_identities(layout):
    """Counter identities hold at every second over 100 random scenarios."""
    rng = random.Random(987654321)
    detector = ExposureDetector(layout=layout).fit()
    violations = 0
    for _ in range(100):
        spec = random_scenario(layout, rng)
        rendered = render(spec, layout)
        result = detector.process(rendered.frames)
        totals: dict[str, list[int]] = {s: [0, 0, 0, 0] for s in layout.approaches}
        for flag in result.flags:
            z, x, y, ym = totals[flag.stream]
            z += flag.crossing
            x += flag.crossing and not flag.critical
            y += flag.critical
            ym += flag.critical_moving
            totals[flag.stream] = [z, x, y, ym]
            if z != x + y or ym > y:
                violations += 1
            if flag.critical_moving > flag.critical or flag.critical > flag.crossing:
                violations += 1
        for row in result.periods:
            if row.crossing_seconds != row.clear_seconds + row.critical_seconds:
                violations += 1
            if row.critical_moving_seconds > row.critical_seconds:
                violations += 1
        summed = {s: [0, 0, 0, 0] for s in layout.approaches}
        for row in result.periods:
            summed[row.stream][0] += row.crossing_seconds
            summed[row.stream][1] += row.clear_seconds
            summed[row.stream][2] += row.critical_seconds
            summed[row.stream][3] += row.critical_moving_seconds
        if summed != totals:
            violations += 1
    _report("C2 counter identities over 100 random scenarios", violations == 0)


def test_criterion_3_grouping_oracle():
    """Group extraction matches the brute-force oracle on 1,000 random grids."""
    rng = random.Random(424242)
    start = time.perf_counter()
    ok = True
    for _ in range(1000):
        if rng.random() < 0.5:
            w, h, lane = rng.randint(1, 8), rng.randint(1, 8), False
            zone = Zone("Z", ZoneKind.CONFLICT, w, h)
        else:
            w, h, lane = rng.randint(1, 20), 1, True
            zone = Zone("Z", ZoneKind.LANE, w, approach="A")
        density = rng.choice([0.2, 0.5, 0.8])
        cells = [
            rng.choice([1, 2, 3]) if rng.random() < density else 0 for _ in range(w * h)
        ]
        mt = rng.choice([1, 2, 3])
        stt = rng.choice([1, 2, 3])
        got = {(g.kind.value, g.cells) for g in detect_groups(cells, zone, mt, stt)}
        if got != oracle_groups(cells, w, h, lane, mt, stt):
            ok = False
            break
    elapsed = time.perf_counter() - start
    _report(f"C3 grouping oracle (1000 grids, {elapsed:.1f}s)", ok and elapsed < 10.0)


def test_criterion_4_end_to_end_oracle(layout):
    """Pipeline flags equal scripted ground truth on every catalog scenario."""
    detector = ExposureDetector(layout=layout).fit()
    scenarios = catalog(layout)
    assert len(scenarios) >= 20
    failures = []
    for name, spec in scenarios:
        rendered = render(spec, layout)
        result = detector.process(rendered.frames)
        for target in ("Y", "Ym"):
            counts = score(result.flags, rendered.annotations(), target)
            if counts.fp or counts.fn:
                failures.append((name, target, counts))
    _report(
        f"C4 end-to-end oracle equivalence ({len(scenarios)} scenarios)",
        not failures,
    )
    assert not failures, failures


# Scripted trace for the qualification/crossing state machine. The layout
# gives the stop line a five-cell upstream window (L:0-4) and a four-cell
# downstream window; expectations were derived by hand from the rules.
MACHINE_LAYOUT = """\
[zone] id=CZ kind=conflict w=4 h=2
[zone] id=L kind=lane len=8 approach=A
[zone] id=K kind=lane len=8 approach=B
[approach] id=A signal=SA lanes=L
[approach] id=B signal=SB lanes=K
[stopline] id=SL approach=A upstream=L:0-4 downstream=CZ:(0,0)-(1,1)
[cross] A=B B=A
"""

M = MovementState

MACHINE_TRACE = [
    # (lane block, conflict block, up state, down state, up met, down met, event)
    ("........", ".... ....", M.EMPTY, M.EMPTY, False, False, False),
    ("....m...", ".... ....", M.FUTURE_MOVEMENT, M.EMPTY, False, False, False),
    ("...me...", ".... ....", M.MOVEMENT, M.EMPTY, True, False, False),
    ("..me....", "m... ....", M.MOVEMENT, M.MOVEMENT, True, True, True),
    (".me.....", "e... ....", M.MOVEMENT, M.PAST_MOVEMENT, True, False, False),
    ("messs...", "mm.. ....", M.MOVEMENT, M.MOVEMENT, True, True, False),
    ("sss.....", "mm.. ....", M.STATIONARY, M.MOVEMENT, False, False, False),
    ("me......", "mm.. ....", M.MOVEMENT, M.MOVEMENT, True, True, True),
    ("........", "ss.. s...", M.EMPTY, M.STATIONARY, False, False, False),
]


def test_criterion_5_state_machine_conformance():
    layout = parse_layout(MACHINE_LAYOUT)
    tracker = CrossingTracker(layout)
    sl = layout.stop_lines["SL"]
    ok = True
    for t, (lane, cz, up_exp, down_exp, up_met_exp, down_met_exp, event_exp) in enumerate(
        MACHINE_TRACE
    ):
        frame = make_frame(layout, t, {"L": lane, "CZ": cz})
        up = qualify_upstream(zone_stats(frame.cells["L"], sl.upstream_cells))
        down = qualify_downstream(zone_stats(frame.cells["CZ"], sl.downstream_cells))
        events, _ = tracker.step(frame)
        state = tracker.state_of("SL")
        got = (up, down, state.upstream_met, state.downstream_met, bool(events))
        expected = (up_exp, down_exp, up_met_exp, down_met_exp, event_exp)
        if got != expected:
            ok = False
            print(f"  t={t}: expected {expected}, got {got}")
    _report("C5 state-machine conformance (scripted trace)", ok)


def test_criterion_6_determinism_and_round_trip(layout, tmp_path):
    (tmp_path / "fig.layout").write_text(FIG_LAYOUT)
    a_steps = ",".join(
        [f"A0:{i}" for i in range(7, -1, -1)] + [f"CZ:(1,{c})|(2,{c})" for c in range(4)]
    )
    (tmp_path / "run.scenario").write_text(
        "[scenario] layout=fig.layout duration=30 seed=5\n"
        "[noise] rate=0.03\n"
        "[signal] approach=A plan=G:0-29\n"
        "[signal] approach=B plan=R:0-29\n"
        f"[vehicle] id=a1 approach=A enter=0 footprint=2 path={a_steps}\n"
        "[vehicle] id=q1 approach=B footprint=1 path=B0:0|B0:1|B0:2 stops=0-30\n"
    )
    generated = []
    for name in ("g1", "g2"):
        out = tmp_path / name
        assert main(["generate", "--scenario", str(tmp_path / "run.scenario"), "--out", str(out)]) == 0
        generated.append({
            f: (out / f).read_bytes()
            for f in ("frames.txt", "truth_flags.csv", "truth_periods.csv")
        })
    detected = []
    for name in ("d1", "d2"):
        out = tmp_path / name
        assert main(["detect", "--layout", str(tmp_path / "fig.layout"),
                     "--frames", str(tmp_path / "g1" / "frames.txt"), "--out", str(out)]) == 0
        detected.append({
            f: (out / f).read_bytes() for f in ("flags.csv", "events.csv", "periods.csv")
        })
    deterministic = generated[0] == generated[1] and detected[0] == detected[1]

    round_trip = True
    fixture_streams = [FIXTURE_STREAM, (tmp_path / "g1" / "frames.txt").read_text()]
    for name, spec in catalog(layout)[:5]:
        fixture_streams.append(write_frames(render(spec, layout).frames, layout))
    for text in fixture_streams:
        again = write_frames(list(read_frames(text, layout)), layout)
        round_trip = round_trip and again == text
    _report("C6 determinism and byte-identical round trips", deterministic and round_trip)


def test_criterion_7_throughput(layout):
    """Engineering target: at least 5,000 frames/s single-threaded."""
    duration = 6000
    vehicles = [
        VehicleScript(f"a{i}", "A", enter, 2, a_path(layout))
        for i, enter in enumerate(range(0, duration - 20, 16))
    ]
    vehicles.append(
        VehicleScript("q", "B", 0, 1,
                      ((("B0", 0), ("B0", 1), ("B0", 2)),),
                      ((0, duration),))
    )
    spec = ScenarioSpec(
        duration,
        {"A": [Signal.GREEN] * duration, "B": [Signal.RED] * duration},
        vehicles,
    )
    frames = render(spec, layout).frames
    detector = ExposureDetector(layout=layout).fit()
    start = time.perf_counter()
    result = detector.process(frames)
    elapsed = time.perf_counter() - start
    rate = result.n_frames / elapsed
    _report(f"C7 throughput ({rate:,.0f} frames/s)", rate >= 5000.0)
