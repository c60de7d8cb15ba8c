"""CSV formats for the detector's external interfaces.

All files are plain CSV with a header row, LF line endings and 0/1 booleans,
so byte-for-byte comparison of outputs works across platforms.

* flags log: ``t,stream,crossing,critical,critical_moving``
* crossing log: ``t,stopline,approach,origin_tiebreak_flag``
* period report: ``stream,period_start,period_end,Z,X,Y,Ym``
* annotations: ``t,stream,truth_critical,truth_critical_moving`` (a flags log
  is also accepted, so detector output can be replayed as synthetic truth)
* score report: ``stream,target,TP,FP,FN,recall_pct,precision_pct``
"""

from __future__ import annotations

import csv
import io
from typing import Iterable, Mapping

from .crossing import AttributedCrossing
from .evaluate import AnnotationRecord, ConfusionCounts, precision_recall
from .exposure import PeriodRow, SecondFlags

FLAGS_HEADER = ["t", "stream", "crossing", "critical", "critical_moving"]
EVENTS_HEADER = ["t", "stopline", "approach", "origin_tiebreak_flag"]
PERIODS_HEADER = ["stream", "period_start", "period_end", "Z", "X", "Y", "Ym"]
ANNOTATIONS_HEADER = ["t", "stream", "truth_critical", "truth_critical_moving"]
SCORES_HEADER = ["stream", "target", "TP", "FP", "FN", "recall_pct", "precision_pct"]


def _writer(buffer: io.StringIO) -> csv.writer:
    return csv.writer(buffer, lineterminator="\n")


def _bit(value: bool) -> str:
    return "1" if value else "0"


def flags_csv(flags: Iterable[SecondFlags]) -> str:
    buffer = io.StringIO()
    w = _writer(buffer)
    w.writerow(FLAGS_HEADER)
    for f in flags:
        w.writerow([f.t, f.stream, _bit(f.crossing), _bit(f.critical), _bit(f.critical_moving)])
    return buffer.getvalue()


def events_csv(events: Iterable[AttributedCrossing]) -> str:
    buffer = io.StringIO()
    w = _writer(buffer)
    w.writerow(EVENTS_HEADER)
    for e in events:
        w.writerow([e.t, e.stop_line, e.approach, e.tiebreak.value])
    return buffer.getvalue()


def periods_csv(rows: Iterable[PeriodRow]) -> str:
    buffer = io.StringIO()
    w = _writer(buffer)
    w.writerow(PERIODS_HEADER)
    for r in rows:
        w.writerow(
            [
                r.stream,
                r.period_start,
                r.period_end,
                r.crossing_seconds,
                r.clear_seconds,
                r.critical_seconds,
                r.critical_moving_seconds,
            ]
        )
    return buffer.getvalue()


def scores_csv(counts_by_stream: Mapping[str, ConfusionCounts], target: str) -> str:
    buffer = io.StringIO()
    w = _writer(buffer)
    w.writerow(SCORES_HEADER)
    for stream in sorted(counts_by_stream):
        counts = counts_by_stream[stream]
        pr = precision_recall(counts)
        w.writerow(
            [
                stream,
                target,
                counts.tp,
                counts.fp,
                counts.fn,
                "" if pr.recall_pct is None else pr.recall_pct,
                "" if pr.precision_pct is None else pr.precision_pct,
            ]
        )
    return buffer.getvalue()


class ReportFormatError(ValueError):
    """Malformed CSV input (bad header, bad cell value, duplicate record)."""


def _parse_bit(value: str, context: str) -> bool:
    if value == "1":
        return True
    if value == "0":
        return False
    raise ReportFormatError(f"{context}: expected 0 or 1, got {value!r}")


def _read_rows(text: str, expected_header: list[str], name: str) -> Iterable[list[str]]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ReportFormatError(f"{name}: empty file") from None
    if header != expected_header:
        raise ReportFormatError(
            f"{name}: bad header {header!r}, expected {expected_header!r}"
        )
    for row in reader:
        if row:
            yield row


def read_flags_csv(text: str) -> list[SecondFlags]:
    out = []
    for row in _read_rows(text, FLAGS_HEADER, "flags log"):
        if len(row) != 5:
            raise ReportFormatError(f"flags log: bad row {row!r}")
        t = int(row[0])
        out.append(
            SecondFlags(
                t,
                row[1],
                _parse_bit(row[2], f"t={t}"),
                _parse_bit(row[3], f"t={t}"),
                _parse_bit(row[4], f"t={t}"),
            )
        )
    return out


def read_annotations_csv(text: str) -> list[AnnotationRecord]:
    """Read ground-truth annotations.

    Accepts the canonical annotation header or a flags log (whose critical
    columns then serve as the truth).
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ReportFormatError("annotations: empty file") from None
    if header == ANNOTATIONS_HEADER:
        critical_col, moving_col = 2, 3
        width = 4
    elif header == FLAGS_HEADER:
        critical_col, moving_col = 3, 4
        width = 5
    else:
        raise ReportFormatError(f"annotations: unrecognized header {header!r}")
    out = []
    for row in reader:
        if not row:
            continue
        if len(row) != width:
            raise ReportFormatError(f"annotations: bad row {row!r}")
        t = int(row[0])
        try:
            out.append(
                AnnotationRecord(
                    t,
                    row[1],
                    _parse_bit(row[critical_col], f"t={t}"),
                    _parse_bit(row[moving_col], f"t={t}"),
                )
            )
        except ValueError as exc:
            raise ReportFormatError(f"annotations: {exc}") from None
    return out
