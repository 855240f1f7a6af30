"""Lattice inference: turn an unordered bag of detected cell boxes into an
R x C grid with row/column indices and a box for every slot, including the
empty ones.

Rows come from 1-D gap clustering of cell-centroid y values (new row when
the gap to the previous centroid exceeds row_tol x median cell height),
columns analogously on x. Tolerances are relative to median cell size, so
the result is invariant under translation and positive scaling.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field

from .errors import GridConflictError, GridError
from .geometry import BBox, centroid

CELL_SOURCES = ("bordered", "borderless")
CONFLICT_POLICIES = ("merge", "strict")

DEFAULT_ROW_TOL = 0.5
DEFAULT_COL_TOL = 0.5


@dataclass(frozen=True)
class CellBox:
    """One detected cell region with its confidence and detector route."""

    box: BBox
    score: float = 1.0
    source: str = "bordered"

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"cell score {self.score} outside [0, 1]")
        if self.source not in CELL_SOURCES:
            raise ValueError(f"unknown cell source {self.source!r}")


@dataclass
class GridCell:
    """One lattice slot. `occupied` is False for synthesized empty slots.

    `contents` stays empty until text assignment runs; it then holds the
    assigned text tokens in reading order.
    """

    box: BBox
    contents: list[str] = field(default_factory=list)
    occupied: bool = False


@dataclass
class TableGrid:
    n_rows: int
    n_cols: int
    cells: dict[tuple[int, int], GridCell]
    table_box: BBox
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.n_rows < 1 or self.n_cols < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.n_rows}x{self.n_cols}")
        expected = self.n_rows * self.n_cols
        if len(self.cells) != expected:
            raise ValueError(f"grid has {len(self.cells)} cells, expected {expected}")
        for r in range(self.n_rows):
            for c in range(self.n_cols):
                if (r, c) not in self.cells:
                    raise ValueError(f"grid slot ({r}, {c}) missing")

    def cell(self, r: int, c: int) -> GridCell:
        return self.cells[(r, c)]

    def cell_text(self, r: int, c: int) -> str:
        return " ".join(self.cells[(r, c)].contents).strip()

    def clear_contents(self) -> None:
        for cell in self.cells.values():
            cell.contents.clear()

    def iter_slots(self):
        """Yield (r, c, cell) in row-major order."""
        for r in range(self.n_rows):
            for c in range(self.n_cols):
                yield r, c, self.cells[(r, c)]


def _cluster_1d(values: list[float], gap_threshold: float) -> list[int]:
    """Chain-cluster sorted positions: indices of the clusters each value
    falls into, cluster ids increasing with position.

    `values` must already be sorted ascending. A new cluster starts whenever
    the gap to the previous value exceeds the threshold.
    """
    ids = []
    current = 0
    for i, v in enumerate(values):
        if i > 0 and v - values[i - 1] > gap_threshold:
            current += 1
        ids.append(current)
    return ids


def _canonical_order(cells: list[CellBox]) -> list[CellBox]:
    # Fixed processing order makes merge results independent of input order.
    return sorted(
        cells,
        key=lambda cb: (cb.box.y1, cb.box.x1, cb.box.y2, cb.box.x2, -cb.score, cb.source),
    )


def infer_grid(
    cells: list[CellBox],
    table_box: BBox,
    row_tol: float = DEFAULT_ROW_TOL,
    col_tol: float = DEFAULT_COL_TOL,
    conflicts: str = "merge",
) -> TableGrid:
    """Cluster detected cells into an R x C lattice.

    Args:
        cells: detected cell boxes, any order; must all intersect table_box.
        table_box: the detected table region; bounds synthesized empty slots.
        row_tol, col_tol: gap thresholds as fractions of the median cell
            height/width, in (0, 1].
        conflicts: "merge" keeps the union box when two cells land on one
            slot (with a warning); "strict" raises GridConflictError.

    Returns:
        A complete TableGrid; lattice slots with no detected cell get a
        synthesized box and occupied=False.
    """
    if not cells:
        raise GridError("cannot infer a grid from an empty cell list")
    if not (0.0 < row_tol <= 1.0) or not (0.0 < col_tol <= 1.0):
        raise ValueError(f"tolerances must be in (0, 1], got row={row_tol} col={col_tol}")
    if conflicts not in CONFLICT_POLICIES:
        raise ValueError(f"unknown conflict policy {conflicts!r}")
    for cb in cells:
        if not cb.box.intersects(table_box):
            raise GridError(
                f"cell box {cb.box.as_tuple()} does not intersect table box "
                f"{table_box.as_tuple()}"
            )

    ordered = _canonical_order(cells)
    cents = [centroid(cb.box) for cb in ordered]
    # Median (not mean) so a few oversized header cells don't widen the gates.
    median_h = statistics.median(cb.box.height for cb in ordered)
    median_w = statistics.median(cb.box.width for cb in ordered)

    by_y = sorted(range(len(ordered)), key=lambda i: cents[i].y)
    row_ids = _cluster_1d([cents[i].y for i in by_y], row_tol * median_h)
    row_of = dict(zip(by_y, row_ids))

    by_x = sorted(range(len(ordered)), key=lambda i: cents[i].x)
    col_ids = _cluster_1d([cents[i].x for i in by_x], col_tol * median_w)
    col_of = dict(zip(by_x, col_ids))

    n_rows = max(row_ids) + 1
    n_cols = max(col_ids) + 1

    warnings: list[str] = []
    occupied: dict[tuple[int, int], CellBox] = {}
    for i, cb in enumerate(ordered):
        slot = (row_of[i], col_of[i])
        if slot in occupied:
            if conflicts == "strict":
                raise GridConflictError(
                    f"two detected cells map to slot {slot}: "
                    f"{occupied[slot].box.as_tuple()} and {cb.box.as_tuple()}"
                )
            prev = occupied[slot]
            merged = BBox(
                min(prev.box.x1, cb.box.x1), min(prev.box.y1, cb.box.y1),
                max(prev.box.x2, cb.box.x2), max(prev.box.y2, cb.box.y2),
            )
            occupied[slot] = CellBox(merged, max(prev.score, cb.score), prev.source)
            warnings.append(f"merged overlapping cells at slot ({slot[0]}, {slot[1]})")
        else:
            occupied[slot] = cb

    grid_cells: dict[tuple[int, int], GridCell] = {}
    for slot, cb in occupied.items():
        grid_cells[slot] = GridCell(box=cb.box, occupied=True)
    for r in range(n_rows):
        for c in range(n_cols):
            if (r, c) not in grid_cells:
                box = _empty_slot_box(grid_cells, n_rows, n_cols, table_box, r, c)
                grid_cells[(r, c)] = GridCell(box=box, occupied=False)

    return TableGrid(
        n_rows=n_rows,
        n_cols=n_cols,
        cells=grid_cells,
        table_box=table_box,
        warnings=warnings,
    )


def synthesize_empty_box(grid: TableGrid, r: int, c: int) -> BBox:
    """Box for an unoccupied slot: the intersection of row r's y-band and
    column c's x-band over the occupied cells, clamped inside table_box.

    A fully empty row or column falls back to the uniform lattice partition
    of table_box.
    """
    cell = grid.cells.get((r, c))
    if cell is not None and cell.occupied:
        raise ValueError(f"slot ({r}, {c}) is occupied")
    return _empty_slot_box(grid.cells, grid.n_rows, grid.n_cols, grid.table_box, r, c)


def _empty_slot_box(
    cells: dict[tuple[int, int], GridCell],
    n_rows: int,
    n_cols: int,
    table_box: BBox,
    r: int,
    c: int,
) -> BBox:
    row_boxes = [
        cell.box for (rr, cc), cell in cells.items() if rr == r and cell.occupied
    ]
    col_boxes = [
        cell.box for (rr, cc), cell in cells.items() if cc == c and cell.occupied
    ]
    if row_boxes:
        y1 = min(b.y1 for b in row_boxes)
        y2 = max(b.y2 for b in row_boxes)
    else:
        band_h = table_box.height / n_rows
        y1 = table_box.y1 + r * band_h
        y2 = y1 + band_h
    if col_boxes:
        x1 = min(b.x1 for b in col_boxes)
        x2 = max(b.x2 for b in col_boxes)
    else:
        band_w = table_box.width / n_cols
        x1 = table_box.x1 + c * band_w
        x2 = x1 + band_w
    return BBox(x1, y1, x2, y2).clamp_to(table_box)
