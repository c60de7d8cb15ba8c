import numpy as np
import pytest
from sklearn.base import clone

from crosswatch import (
    ExposureDetector,
    FrameFormatError,
    Signal,
    ScenarioSpec,
    VehicleScript,
    parse_layout,
    render,
)
from crosswatch.crossing import TieBreak

from conftest import FIG_LAYOUT, make_frame
from scenario_catalog import a_path, b_path, catalog, parked


def rendered_transit(layout, duration=20):
    veh = VehicleScript("a1", "A", 0, 2, a_path(layout))
    spec = ScenarioSpec(
        duration,
        {"A": [Signal.GREEN] * duration, "B": [Signal.RED] * duration},
        [veh],
    )
    return render(spec, layout)


class TestEstimatorApi:
    def test_get_set_params_round_trip(self):
        det = ExposureDetector(layout=FIG_LAYOUT, moving_threshold=3)
        params = det.get_params()
        assert params["moving_threshold"] == 3
        assert params["movement_ratio_subset"] == "upstream"
        det.set_params(period=60)
        assert det.period == 60

    def test_clone_preserves_params(self):
        det = ExposureDetector(layout=FIG_LAYOUT, period=120)
        twin = clone(det)
        assert twin.get_params() == det.get_params()

    def test_fit_requires_layout(self):
        with pytest.raises(ValueError, match="layout"):
            ExposureDetector().fit()

    def test_fit_accepts_text_path_and_object(self, tmp_path, fig_layout):
        assert ExposureDetector(layout=FIG_LAYOUT).fit().layout_.period == 3600
        path = tmp_path / "fig.layout"
        path.write_text(FIG_LAYOUT)
        assert ExposureDetector(layout=str(path)).fit().layout_.period == 3600
        assert ExposureDetector(layout=fig_layout).fit().layout_ is not None

    def test_overrides_apply_on_fit(self):
        det = ExposureDetector(layout=FIG_LAYOUT, moving_threshold=4, period=50).fit()
        assert det.layout_.moving_threshold == 4
        assert det.layout_.period == 50

    def test_transform_shape_and_content(self, fig_layout):
        rendered = rendered_transit(fig_layout)
        det = ExposureDetector(layout=fig_layout)
        out = det.fit_transform(rendered.frames)
        assert isinstance(out, np.ndarray)
        assert out.shape == (20 * 2, 3)
        assert out.dtype == np.int8
        flags = det.result_.flags
        assert [tuple(row) for row in out] == [
            (f.crossing, f.critical, f.critical_moving) for f in flags
        ]

    def test_transform_on_empty_stream(self, fig_layout):
        det = ExposureDetector(layout=fig_layout).fit()
        out = det.transform([])
        assert out.shape == (0, 3)
        assert det.result_.periods == []

    def test_bad_ratio_subset_rejected(self):
        with pytest.raises(ValueError, match="movement_ratio_subset"):
            ExposureDetector(layout=FIG_LAYOUT, movement_ratio_subset="sideways").fit()


class TestPipeline:
    def test_events_and_counters_for_lone_transit(self, fig_layout):
        rendered = rendered_transit(fig_layout)
        result = ExposureDetector(layout=fig_layout).fit().process(rendered.frames)
        assert result.n_frames == 20
        assert [e.t for e in result.events] == [8, 9]
        assert all(e.approach == "A" and e.tiebreak is TieBreak.NONE for e in result.events)
        row = {r.stream: r for r in result.periods}["A"]
        assert (row.crossing_seconds, row.clear_seconds) == (5, 5)
        assert result.diagnostics == []

    def test_process_is_repeatable(self, fig_layout):
        rendered = rendered_transit(fig_layout)
        det = ExposureDetector(layout=fig_layout).fit()
        first = det.process(rendered.frames)
        second = det.process(rendered.frames)
        assert first.flags == second.flags
        assert first.events == second.events
        assert first.periods == second.periods

    def test_requires_consecutive_seconds(self, fig_layout):
        frames = [make_frame(fig_layout, 0), make_frame(fig_layout, 2)]
        with pytest.raises(FrameFormatError, match="consecutive"):
            ExposureDetector(layout=fig_layout).fit().process(frames)

    def test_unheralded_group_is_diagnosed_not_counted(self, fig_layout):
        # a moving blob materializes in the conflict zone with no crossing
        frames = [
            make_frame(fig_layout, 0),
            make_frame(fig_layout, 1, {"CZ": ".... .mm. .mm. ...."}),
        ]
        result = ExposureDetector(layout=fig_layout).fit().process(frames)
        assert len(result.diagnostics) == 1
        assert result.diagnostics[0].zone_id == "CZ"
        assert result.diagnostics[0].size == 4
        assert all(not f.crossing for f in result.flags)

    def test_mirrored_scenarios_swap_counters(self, fig_layout):
        duration = 40
        plans_a = {"A": [Signal.GREEN] * duration, "B": [Signal.RED] * duration}
        plans_b = {"A": [Signal.RED] * duration, "B": [Signal.GREEN] * duration}
        one = render(
            ScenarioSpec(duration, plans_a, [
                VehicleScript("a1", "A", 0, 2, a_path(fig_layout)),
                parked("q1", "B0", (0, 1, 2), duration, approach="B"),
            ]),
            fig_layout,
        )
        two = render(
            ScenarioSpec(duration, plans_b, [
                VehicleScript("b1", "B", 0, 2, b_path(fig_layout)),
                parked("q1", "A0", (0, 1, 2), duration, approach="A"),
            ]),
            fig_layout,
        )
        det = ExposureDetector(layout=fig_layout).fit()
        rows_one = {r.stream: r for r in det.process(one.frames).periods}
        rows_two = {r.stream: r for r in det.process(two.frames).periods}
        for src, dst in (("A", "B"), ("B", "A")):
            assert (
                rows_one[src].crossing_seconds,
                rows_one[src].clear_seconds,
                rows_one[src].critical_seconds,
                rows_one[src].critical_moving_seconds,
            ) == (
                rows_two[dst].crossing_seconds,
                rows_two[dst].clear_seconds,
                rows_two[dst].critical_seconds,
                rows_two[dst].critical_moving_seconds,
            )

    def test_tiebreak_flags_across_signal_configurations(self, fig_layout):
        expectations = {
            "simultaneous_green_red": ("A", TieBreak.SIGNAL),
            "simultaneous_red_green": ("B", TieBreak.SIGNAL),
            "simultaneous_amber_red": ("A", TieBreak.SIGNAL),
            "simultaneous_both_green": ("A", TieBreak.LEXICOGRAPHIC),
            "simultaneous_both_red_recent_a": ("A", TieBreak.RECENT_GREEN),
            "simultaneous_both_red_recent_b": ("B", TieBreak.RECENT_GREEN),
            "simultaneous_never_green": ("A", TieBreak.LEXICOGRAPHIC),
        }
        det = ExposureDetector(layout=fig_layout).fit()
        scenarios = dict(catalog(fig_layout))
        for name, (origin, tiebreak) in expectations.items():
            rendered = render(scenarios[name], fig_layout)
            result = det.process(rendered.frames)
            resolved = [e for e in result.events if e.tiebreak is not TieBreak.NONE]
            assert resolved, name
            assert all(e.approach == origin for e in resolved), name
            assert all(e.tiebreak is tiebreak for e in resolved), name

    def test_ratio_subset_variants_run(self, fig_layout):
        rendered = rendered_transit(fig_layout)
        for variant in ("upstream", "downstream", "both"):
            det = ExposureDetector(layout=fig_layout, movement_ratio_subset=variant).fit()
            result = det.process(rendered.frames)
            assert result.n_frames == 20


def test_detector_composes_in_sklearn_pipeline(fig_layout):
    from sklearn.pipeline import Pipeline

    rendered = rendered_transit(fig_layout)
    pipe = Pipeline([("detect", ExposureDetector(layout=FIG_LAYOUT))])
    out = pipe.fit_transform(rendered.frames)
    assert out.shape == (40, 3)
