"""crosswatch: rule-based lateral-conflict exposure measurement for
signalized intersections, from per-second occupancy-grid frames.

The package turns a frame stream (cell occupancy states plus signal aspects)
into stop-line crossing events, per-second exposure flags and per-period
duration counters, and ships a scripted-scenario generator whose ground
truth serves as an independent oracle, plus a precision/recall harness.
"""

from .crossing import (
    AttributedCrossing,
    CrossingEvent,
    CrossingTracker,
    MovementState,
    StopLineState,
    TieBreak,
    attribute_origin,
    crossing_detected,
    qualify_downstream,
    qualify_upstream,
    update_crossing_conditions,
)
from .detector import DetectionResult, ExposureDetector, GroupDiagnostic, resolve_layout
from .evaluate import (
    AnnotationRecord,
    ConfusionCounts,
    DomainMismatchError,
    PrecisionRecall,
    precision_recall,
    score,
    score_by_stream,
)
from .exposure import (
    ExposureCounters,
    ExposureTracker,
    InvariantViolationError,
    PeriodRow,
    SecondFlags,
    close_groups,
    finalize_period,
    propagate_origins,
    update_exposure,
)
from .frames import Frame, FrameFormatError, read_frames, validate_frame, write_frames
from .grid import (
    CellState,
    Group,
    GroupKind,
    Signal,
    Zone,
    ZoneKind,
    ZoneStats,
    detect_groups,
    zone_stats,
)
from .layout import Approach, Layout, LayoutError, StopLine, parse_cell_subset, parse_layout
from .scenario import (
    RenderedScenario,
    ScenarioError,
    ScenarioSpec,
    VehicleScript,
    parse_scenario,
    render,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotationRecord",
    "Approach",
    "AttributedCrossing",
    "CellState",
    "ConfusionCounts",
    "CrossingEvent",
    "CrossingTracker",
    "DetectionResult",
    "DomainMismatchError",
    "ExposureCounters",
    "ExposureDetector",
    "ExposureTracker",
    "Frame",
    "FrameFormatError",
    "Group",
    "GroupDiagnostic",
    "GroupKind",
    "InvariantViolationError",
    "Layout",
    "LayoutError",
    "MovementState",
    "PeriodRow",
    "PrecisionRecall",
    "RenderedScenario",
    "ScenarioError",
    "ScenarioSpec",
    "SecondFlags",
    "Signal",
    "StopLine",
    "StopLineState",
    "TieBreak",
    "VehicleScript",
    "Zone",
    "ZoneKind",
    "ZoneStats",
    "attribute_origin",
    "close_groups",
    "crossing_detected",
    "detect_groups",
    "finalize_period",
    "parse_cell_subset",
    "parse_layout",
    "parse_scenario",
    "precision_recall",
    "propagate_origins",
    "qualify_downstream",
    "qualify_upstream",
    "read_frames",
    "render",
    "resolve_layout",
    "score",
    "score_by_stream",
    "update_crossing_conditions",
    "update_exposure",
    "validate_frame",
    "write_frames",
    "zone_stats",
]
