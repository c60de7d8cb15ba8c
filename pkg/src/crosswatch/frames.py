"""Frame-stream wire format: one record per second.

::

    FRAME 17
    ZONE CZ
    ....
    .mm.
    .mm.
    ....
    ZONE A0
    ssmm....
    SIG A G
    SIG B R
    END

Cell rows use the layout's state codes (canonically ``.``/``m``/``s``/``e``),
row-major for two-dimensional zones and index 0 first for lanes. Frames must
be consecutive seconds; the serializer emits zones and signals in layout
declaration order so that parse/serialize round-trips are byte identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from .grid import SIGNAL_CODES, Signal
from .layout import Layout


class FrameFormatError(ValueError):
    """Malformed or out-of-sequence frame stream."""

    def __init__(self, message: str, t: int | None = None, line: int | None = None):
        prefix = []
        if t is not None:
            prefix.append(f"t={t}")
        if line is not None:
            prefix.append(f"line {line}")
        super().__init__(f"{' '.join(prefix)}: {message}" if prefix else message)
        self.t = t
        self.line = line


@dataclass
class Frame:
    """Grid snapshot for one second: per-zone cell states and per-approach
    signal aspects."""

    t: int
    cells: dict[str, list[int]]
    signals: dict[str, Signal]


def validate_frame(frame: Frame, layout: Layout) -> None:
    """Check a frame against the layout (zone coverage, sizes, signals)."""
    if set(frame.cells) != set(layout.zones):
        missing = set(layout.zones) - set(frame.cells)
        extra = set(frame.cells) - set(layout.zones)
        parts = []
        if missing:
            parts.append(f"missing zones {sorted(missing)}")
        if extra:
            parts.append(f"unknown zones {sorted(extra)}")
        raise FrameFormatError("; ".join(parts), t=frame.t)
    for zone in layout.zones.values():
        if len(frame.cells[zone.id]) != zone.n_cells:
            raise FrameFormatError(
                f"zone {zone.id!r} has {len(frame.cells[zone.id])} cells,"
                f" expected {zone.n_cells}",
                t=frame.t,
            )
    if set(frame.signals) != set(layout.approaches):
        raise FrameFormatError(
            f"signals cover {sorted(frame.signals)}, expected {sorted(layout.approaches)}",
            t=frame.t,
        )


def read_frames(source: str | Iterable[str], layout: Layout) -> Iterator[Frame]:
    """Parse a frame stream, yielding validated frames in strictly
    consecutive-second order.

    ``source`` is the document text or an iterable of lines. Raises
    :class:`FrameFormatError` on gaps or regressions in ``t``, unknown state
    codes, size mismatches, or structural noise.
    """
    lines = source.splitlines() if isinstance(source, str) else (ln.rstrip("\n") for ln in source)
    numbered = enumerate(lines, 1)
    expected_t: int | None = None

    def next_line() -> tuple[int, str] | None:
        return next(numbered, None)

    while True:
        item = next_line()
        if item is None:
            return
        line_no, line = item
        parts = line.split()
        if len(parts) != 2 or parts[0] != "FRAME":
            raise FrameFormatError(f"expected 'FRAME <t>', got {line!r}", line=line_no)
        try:
            t = int(parts[1])
        except ValueError:
            raise FrameFormatError(f"bad frame index {parts[1]!r}", line=line_no) from None
        if expected_t is not None and t != expected_t:
            kind = "gap" if t > expected_t else "regression"
            raise FrameFormatError(
                f"{kind} in frame sequence: expected t={expected_t}", t=t, line=line_no
            )

        cells: dict[str, list[int]] = {}
        signals: dict[str, Signal] = {}
        while True:
            item = next_line()
            if item is None:
                raise FrameFormatError("unexpected end of stream inside frame", t=t)
            line_no, line = item
            if line == "END":
                break
            parts = line.split()
            if parts and parts[0] == "ZONE" and len(parts) == 2:
                zone = layout.zones.get(parts[1])
                if zone is None:
                    raise FrameFormatError(f"unknown zone {parts[1]!r}", t=t, line=line_no)
                if zone.id in cells:
                    raise FrameFormatError(f"duplicate zone {zone.id!r}", t=t, line=line_no)
                states: list[int] = []
                for _ in range(zone.height):
                    item = next_line()
                    if item is None:
                        raise FrameFormatError("unexpected end of stream in zone block", t=t)
                    row_no, row = item
                    if len(row) != zone.width:
                        raise FrameFormatError(
                            f"zone {zone.id!r} row has {len(row)} cells, expected {zone.width}",
                            t=t,
                            line=row_no,
                        )
                    for ch in row:
                        state = layout.state_codes.get(ch)
                        if state is None:
                            raise FrameFormatError(
                                f"unknown state code {ch!r} in zone {zone.id!r}", t=t, line=row_no
                            )
                        states.append(int(state))
                cells[zone.id] = states
            elif parts and parts[0] == "SIG" and len(parts) == 3:
                approach, code = parts[1], parts[2]
                if approach not in layout.approaches:
                    raise FrameFormatError(f"unknown approach {approach!r}", t=t, line=line_no)
                if approach in signals:
                    raise FrameFormatError(f"duplicate signal for {approach!r}", t=t, line=line_no)
                signal = SIGNAL_CODES.get(code)
                if signal is None:
                    raise FrameFormatError(f"unknown signal code {code!r}", t=t, line=line_no)
                signals[approach] = signal
            else:
                raise FrameFormatError(f"unexpected line {line!r}", t=t, line=line_no)

        frame = Frame(t, cells, signals)
        validate_frame(frame, layout)
        expected_t = t + 1
        yield frame


def write_frames(frames: Iterable[Frame], layout: Layout) -> str:
    """Serialize frames to canonical text (zones and signals in layout
    declaration order, canonical state codes, LF line endings)."""
    out: list[str] = []
    for frame in frames:
        out.append(f"FRAME {frame.t}")
        for zone in layout.zones.values():
            out.append(f"ZONE {zone.id}")
            states = frame.cells[zone.id]
            for row in range(zone.height):
                offset = row * zone.width
                out.append(
                    "".join(_STATE_CODES[states[offset + c]] for c in range(zone.width))
                )
        for approach in layout.approaches.values():
            out.append(f"SIG {approach.id} {frame.signals[approach.id].value}")
        out.append("END")
    return "\n".join(out) + "\n" if out else ""


_STATE_CODES = (".", "m", "s", "e")
