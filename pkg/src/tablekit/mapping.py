"""Text-to-cell assignment via the centroid gate.

A text box enters a cell when its centroid lies within half the cell's
extent of the cell's centroid on both axes; among cells passing the gate,
the nearest centroid wins. Text passing no gate stays unassigned instead of
being force-mapped, so empty cells are preserved.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .geometry import BBox, centroid
from .grid import TableGrid

GATE_MODES = ("prose", "literal")


@dataclass(frozen=True)
class TextBox:
    """One recognized text unit: box + string + confidence.

    Text boxes are atomic; multi-word OCR lines are never split (the input
    format carries no character geometry to split on).
    """

    box: BBox
    text: str
    score: float = 1.0

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("text box with empty text")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"text score {self.score} outside [0, 1]")


@dataclass(frozen=True)
class Assignment:
    text_index: int
    row: int
    col: int
    distance: float


@dataclass
class AssignmentResult:
    """Partition of the input texts: every text box appears exactly once,
    either in `assignments` or in `unassigned`."""

    grid: TableGrid
    assignments: list[Assignment] = field(default_factory=list)
    unassigned: list[TextBox] = field(default_factory=list)


def _gate_half_extents(box: BBox, gate: str) -> tuple[float, float]:
    # "literal" reproduces the published inequality pair, which uses the
    # cell width for both axes; "prose" gates y by the cell height instead.
    if gate == "literal":
        return box.width / 2.0, box.width / 2.0
    return box.width / 2.0, box.height / 2.0


def assign_text(grid: TableGrid, texts: list[TextBox], gate: str = "prose") -> AssignmentResult:
    """Assign each text box to the nearest cell whose centroid gate it passes.

    Candidate cells are those with |text_cx - cell_cx| <= gate_w and
    |text_cy - cell_cy| <= gate_h; the candidate at minimum Euclidean
    centroid distance wins, ties broken by lower row then lower column.
    Existing cell contents are cleared first, so the operation is idempotent.

    Returns an AssignmentResult whose grid has contents populated in
    reading order (text y1, then x1).
    """
    if gate not in GATE_MODES:
        raise ValueError(f"unknown gate mode {gate!r}")
    grid.clear_contents()

    slots = []  # (r, c, cx, cy, half_w, half_h) in row-major order
    for r, c, cell in grid.iter_slots():
        ctr = centroid(cell.box)
        hw, hh = _gate_half_extents(cell.box, gate)
        slots.append((r, c, ctr.x, ctr.y, hw, hh))

    result = AssignmentResult(grid=grid)
    per_cell: dict[tuple[int, int], list[tuple[TextBox, Assignment]]] = {}
    for i, tb in enumerate(texts):
        ex = (tb.box.x1 + tb.box.x2) / 2.0
        ey = (tb.box.y1 + tb.box.y2) / 2.0
        best = None
        best_d2 = 0.0
        for r, c, cx, cy, hw, hh in slots:
            dx = ex - cx
            if dx < 0.0:
                dx = -dx
            if dx > hw:
                continue
            dy = ey - cy
            if dy < 0.0:
                dy = -dy
            if dy > hh:
                continue
            d2 = dx * dx + dy * dy
            # Strict < keeps the first (lowest row, then column) on ties.
            if best is None or d2 < best_d2:
                best = (r, c)
                best_d2 = d2
        if best is None:
            result.unassigned.append(tb)
        else:
            a = Assignment(i, best[0], best[1], best_d2 ** 0.5)
            result.assignments.append(a)
            per_cell.setdefault(best, []).append((tb, a))

    for slot, items in per_cell.items():
        grid.cells[slot].contents = order_cell_contents(items)
    return result


def order_cell_contents(items: list[tuple[TextBox, Assignment]]) -> list[str]:
    """Reading order for the texts assigned to one cell.

    Sorted by text-box top edge, then left edge; the text string and
    original index only break exact positional ties.
    """
    ordered = sorted(
        items,
        key=lambda ta: (ta[0].box.y1, ta[0].box.x1, ta[0].text, ta[1].text_index),
    )
    return [tb.text.strip() for tb, _ in ordered]
