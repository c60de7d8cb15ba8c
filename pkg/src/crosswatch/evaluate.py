"""Scoring of detector flags against per-second ground-truth annotations.

Each (second, stream) pair is one binary classification decision, with the
critical (or critical-moving) seconds as the positive class. Precision and
recall are reported as whole percentages, rounded half away from zero, and
left absent when their denominator is zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .exposure import SecondFlags

#: Scoring targets: "Y" scores the critical flag, "Ym" the critical-moving flag.
TARGETS = ("Y", "Ym")


@dataclass(frozen=True)
class AnnotationRecord:
    """Ground-truth flags for one (second, stream)."""

    t: int
    stream: str
    truth_critical: bool
    truth_critical_moving: bool

    def __post_init__(self):
        if self.truth_critical_moving and not self.truth_critical:
            raise ValueError(
                f"t={self.t} stream={self.stream}: critical_moving implies critical"
            )


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int


@dataclass(frozen=True)
class PrecisionRecall:
    precision_pct: int | None
    recall_pct: int | None


class DomainMismatchError(ValueError):
    """Flags and annotations do not cover the same (second, stream) set."""

    def __init__(self, missing_in_flags: list, missing_in_annotations: list):
        self.missing_in_flags = missing_in_flags
        self.missing_in_annotations = missing_in_annotations
        parts = []
        if missing_in_flags:
            parts.append(f"seconds only in annotations: {_preview(missing_in_flags)}")
        if missing_in_annotations:
            parts.append(f"seconds only in flags: {_preview(missing_in_annotations)}")
        super().__init__("; ".join(parts))


def _preview(keys: list, limit: int = 12) -> str:
    shown = ", ".join(f"(t={t}, {s})" for t, s in keys[:limit])
    if len(keys) > limit:
        shown += f", ... ({len(keys)} total)"
    return shown


def _detected(flag: SecondFlags, target: str) -> bool:
    return flag.critical_moving if target == "Ym" else flag.critical


def _truth(record: AnnotationRecord, target: str) -> bool:
    return record.truth_critical_moving if target == "Ym" else record.truth_critical


def score(
    flags: Iterable[SecondFlags],
    annotations: Iterable[AnnotationRecord],
    target: str,
) -> ConfusionCounts:
    """Confusion counts for one target over the covered (second, stream) set.

    Both inputs must cover exactly the same (t, stream) keys, each at most
    once; anything else raises.
    """
    if target not in TARGETS:
        raise ValueError(f"target must be one of {TARGETS}, got {target!r}")
    detected: dict[tuple[int, str], bool] = {}
    for flag in flags:
        key = (flag.t, flag.stream)
        if key in detected:
            raise ValueError(f"duplicate flags record for t={flag.t}, stream={flag.stream}")
        detected[key] = _detected(flag, target)
    truth: dict[tuple[int, str], bool] = {}
    for record in annotations:
        key = (record.t, record.stream)
        if key in truth:
            raise ValueError(
                f"duplicate annotation record for t={record.t}, stream={record.stream}"
            )
        truth[key] = _truth(record, target)
    if set(detected) != set(truth):
        raise DomainMismatchError(
            missing_in_flags=sorted(set(truth) - set(detected)),
            missing_in_annotations=sorted(set(detected) - set(truth)),
        )
    tp = fp = fn = 0
    for key, det in detected.items():
        if det and truth[key]:
            tp += 1
        elif det:
            fp += 1
        elif truth[key]:
            fn += 1
    return ConfusionCounts(tp, fp, fn)


def score_by_stream(
    flags: Iterable[SecondFlags],
    annotations: Iterable[AnnotationRecord],
    target: str,
) -> dict[str, ConfusionCounts]:
    """Per-stream confusion counts (streams taken from the union of inputs)."""
    flags = list(flags)
    annotations = list(annotations)
    streams = sorted({f.stream for f in flags} | {a.stream for a in annotations})
    return {
        stream: score(
            (f for f in flags if f.stream == stream),
            (a for a in annotations if a.stream == stream),
            target,
        )
        for stream in streams
    }


def _round_pct(numerator: int, denominator: int) -> int:
    # nearest integer percentage, halves rounded away from zero; exact in ints
    q, r = divmod(100 * numerator, denominator)
    return q + (1 if 2 * r >= denominator else 0)


def precision_recall(counts: ConfusionCounts) -> PrecisionRecall:
    """Whole-percent precision and recall; absent on a zero denominator."""
    precision = (
        _round_pct(counts.tp, counts.tp + counts.fp) if counts.tp + counts.fp else None
    )
    recall = _round_pct(counts.tp, counts.tp + counts.fn) if counts.tp + counts.fn else None
    return PrecisionRecall(precision, recall)
