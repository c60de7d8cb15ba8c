import pytest

from crosswatch import Frame, parse_layout
from crosswatch.grid import CODE_TO_STATE, SIGNAL_CODES

# Two one-way roads: 4x4 conflict zone, one 8-cell lane per approach.
# Stream A runs along rows 1-2 (entering at column 0), stream B along
# columns 1-2 (entering at row 0).
FIG_LAYOUT = """\
[zone] id=CZ kind=conflict w=4 h=4
[zone] id=A0 kind=lane len=8 approach=A
[zone] id=B0 kind=lane len=8 approach=B
[approach] id=A signal=SA lanes=A0
[approach] id=B signal=SB lanes=B0
[stopline] id=SL_A approach=A upstream=A0:0-2 downstream=CZ:(1,0)-(2,1)
[stopline] id=SL_B approach=B upstream=B0:0-2 downstream=CZ:(0,1)-(1,2)
[cross] A=B B=A
[thresholds] moving=2 stationary=3
[period] T=3600
"""


@pytest.fixture
def fig_layout():
    return parse_layout(FIG_LAYOUT)


def states(text: str) -> list[int]:
    """Cell states from a code string; whitespace separates 2-D rows."""
    return [int(CODE_TO_STATE[ch]) for row in text.split() for ch in row]


def make_frame(layout, t: int, blocks: dict[str, str] | None = None,
               signals: dict[str, str] | None = None) -> Frame:
    """Frame with every zone empty unless overridden by a code-string block."""
    blocks = blocks or {}
    signals = signals or {}
    cells = {}
    for zone in layout.zones.values():
        if zone.id in blocks:
            row = states(blocks[zone.id])
            assert len(row) == zone.n_cells, f"bad block for {zone.id}"
            cells[zone.id] = row
        else:
            cells[zone.id] = [0] * zone.n_cells
    sig = {a: SIGNAL_CODES[signals.get(a, "R")] for a in layout.approaches}
    return Frame(t, cells, sig)
