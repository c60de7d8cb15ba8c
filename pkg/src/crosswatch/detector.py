"""End-to-end detection pipeline behind a scikit-learn style estimator.

:class:`ExposureDetector` consumes a sequence of per-second frames and
produces per-second exposure flags, attributed stop-line crossings and
period reports. There is nothing to learn: ``fit`` only resolves and
validates parameters, so the estimator composes with sklearn pipelines and
parameter search over the rule thresholds.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .crossing import AttributedCrossing, CrossingEvent, CrossingTracker
from .exposure import ExposureTracker, PeriodRow, SecondFlags, propagate_origins
from .frames import Frame, FrameFormatError, validate_frame
from .grid import Group, detect_groups
from .layout import Layout, parse_layout

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GroupDiagnostic:
    """A conflict-zone group whose origin could not be established; such
    groups never count toward exposure."""

    t: int
    zone_id: str
    kind: str
    size: int
    front: int


@dataclass
class DetectionResult:
    """Everything one detection run produced."""

    flags: list[SecondFlags] = field(default_factory=list)
    events: list[AttributedCrossing] = field(default_factory=list)
    stop_line_events: list[CrossingEvent] = field(default_factory=list)
    periods: list[PeriodRow] = field(default_factory=list)
    diagnostics: list[GroupDiagnostic] = field(default_factory=list)
    n_frames: int = 0


def resolve_layout(layout: Layout | str | os.PathLike) -> Layout:
    """Accept a parsed Layout, a document string, or a path to one."""
    if isinstance(layout, Layout):
        return layout
    if isinstance(layout, os.PathLike):
        return parse_layout(open(layout, encoding="utf-8").read())
    if "\n" in layout or layout.lstrip().startswith("["):
        return parse_layout(layout)
    return parse_layout(open(layout, encoding="utf-8").read())


class ExposureDetector(TransformerMixin, BaseEstimator):
    """Rule-based exposure detector over occupancy-grid frame streams.

    Parameters
    ----------
    layout:
        Intersection layout: a :class:`~crosswatch.layout.Layout`, a layout
        document string, or a path to one.
    moving_threshold, stationary_threshold:
        Minimum group sizes; default to the layout's values.
    period:
        Reporting period in seconds; defaults to the layout's value.
    movement_ratio_subset:
        Which stop-line subset the movement-share crossing test reads
        ("upstream", "downstream" or "both"). Kept configurable for
        sensitivity checks; the default is "upstream".

    ``transform(frames)`` returns an ``(n_records, 3)`` int8 array with
    columns (crossing, critical, critical_moving), one row per second per
    stream, ordered by second then stream id. The full structured output of
    the last run is kept on ``result_``.
    """

    def __init__(
        self,
        layout: Layout | str | os.PathLike | None = None,
        moving_threshold: int | None = None,
        stationary_threshold: int | None = None,
        period: int | None = None,
        movement_ratio_subset: str = "upstream",
    ):
        self.layout = layout
        self.moving_threshold = moving_threshold
        self.stationary_threshold = stationary_threshold
        self.period = period
        self.movement_ratio_subset = movement_ratio_subset

    def fit(self, X=None, y=None) -> "ExposureDetector":
        """Resolve and validate parameters. No training happens; the rules
        are fixed."""
        if self.layout is None:
            raise ValueError("ExposureDetector requires a layout")
        self.layout_ = resolve_layout(self.layout).with_overrides(
            moving_threshold=self.moving_threshold,
            stationary_threshold=self.stationary_threshold,
            period=self.period,
        )
        if self.movement_ratio_subset not in ("upstream", "downstream", "both"):
            raise ValueError(f"bad movement_ratio_subset {self.movement_ratio_subset!r}")
        return self

    def transform(self, X: Iterable[Frame]) -> np.ndarray:
        """Run detection over frames; see class docstring for the array
        layout. Also stores the structured run output on ``result_``."""
        result = self.process(X)
        return np.array(
            [[f.crossing, f.critical, f.critical_moving] for f in result.flags],
            dtype=np.int8,
        ).reshape(-1, 3)

    def process(self, frames: Iterable[Frame]) -> DetectionResult:
        """Run the full pipeline, returning the structured result.

        Each call starts from a clean state machine, so identical inputs
        yield identical outputs.
        """
        if not hasattr(self, "layout_"):
            self.fit()
        layout = self.layout_
        crossing_tracker = CrossingTracker(layout, self.movement_ratio_subset)
        exposure_tracker = ExposureTracker(
            layout.approaches, layout.cross_traffic, layout.period
        )
        labels: dict[str, dict[Group, str]] = {z: {} for z in layout.conflict_zone_ids}
        lane_zones = {a.id: a.lanes for a in layout.approaches.values()}
        result = DetectionResult(flags=[], events=[], stop_line_events=[], periods=[])
        self.result_ = result

        expected_t: int | None = None
        for frame in frames:
            if expected_t is not None and frame.t != expected_t:
                raise FrameFormatError(
                    f"expected t={expected_t} next, frames must be consecutive", t=frame.t
                )
            validate_frame(frame, layout)
            expected_t = frame.t + 1
            result.n_frames += 1

            groups = {
                zone.id: detect_groups(
                    frame.cells[zone.id],
                    zone,
                    layout.moving_threshold,
                    layout.stationary_threshold,
                )
                for zone in layout.zones.values()
            }

            events, attributed = crossing_tracker.step(frame)
            result.stop_line_events.extend(events)
            result.events.extend(attributed[z] for z in sorted(attributed))

            all_origins: dict[Group, str] = {}
            for zone_id in layout.conflict_zone_ids:
                origin = attributed.get(zone_id)
                zone_labels, unlabeled = propagate_origins(
                    labels[zone_id],
                    groups[zone_id],
                    origin.approach if origin else None,
                )
                labels[zone_id] = zone_labels
                all_origins.update(zone_labels)
                for group in unlabeled:
                    diag = GroupDiagnostic(
                        frame.t, zone_id, group.kind.value, group.size, group.front
                    )
                    result.diagnostics.append(diag)
                    logger.debug(
                        "t=%d zone=%s: %s group of %d cells has no origin; not counted",
                        diag.t, diag.zone_id, diag.kind, diag.size,
                    )

            lane_groups = {
                appr: [groups[z] for z in zones] for appr, zones in lane_zones.items()
            }
            flags, period_rows = exposure_tracker.update(frame.t, all_origins, lane_groups)
            result.flags.extend(flags)
            result.periods.extend(period_rows)

        result.periods.extend(exposure_tracker.finish())
        if result.diagnostics:
            logger.warning(
                "%d conflict-zone group(s) had no attributable origin and were not counted",
                len(result.diagnostics),
            )
        return result
