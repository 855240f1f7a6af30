"""Orchestration: detection document -> grids -> CSV, and prediction vs
truth -> evaluation report.

Everything that ends up in a file goes through deterministic serialization:
fixed field order, stable table ordering by index, no wall-clock values
unless timings are explicitly requested.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

from .documents import DetectionDocument, TruthDocument, TruthTable
from .errors import ShapeMismatchError, TableKitError
from .geometry import BBox, NormBox, to_norm
from .grid import GridCell, TableGrid, infer_grid
from .mapping import AssignmentResult, assign_text
from .matching import (
    DEFAULT_LAMBDA_IOU,
    DEFAULT_LAMBDA_L1,
    MatchReport,
    Prediction,
    Truth,
    detection_iou,
    match_sets,
    pair_tables_by_iou,
    row_accuracy,
    word_accuracy,
    word_accuracy_percent,
)


@dataclass(frozen=True)
class PipelineOptions:
    gate: str = "prose"
    row_tol: float = 0.5
    col_tol: float = 0.5
    conflicts: str = "merge"
    lambda_iou: float = DEFAULT_LAMBDA_IOU
    lambda_l1: float = DEFAULT_LAMBDA_L1
    wordacc: str = "positional"
    strict: bool = False
    timings: bool = False


@dataclass
class TableAssembly:
    """Per-table assembly outcome; `error` set means the table was skipped
    (isolation: other tables are still processed)."""

    index: int
    n_cells_detected: int
    n_texts: int
    table_class: str = "bordered"
    cell_sources: dict[str, int] = field(default_factory=dict)
    grid: TableGrid | None = None
    result: AssignmentResult | None = None
    error: str | None = None

    @property
    def warnings(self) -> list[str]:
        return list(self.grid.warnings) if self.grid is not None else []


def assemble_document(
    doc: DetectionDocument, options: PipelineOptions = PipelineOptions()
) -> list[TableAssembly]:
    """Infer a grid and assign texts for every table in the document.

    Per-table failures are captured in the assembly unless options.strict,
    in which case the first failure propagates.
    """
    assemblies = []
    for i, table in enumerate(doc.tables):
        # The cell-source split does not steer the algorithm; it is carried
        # through for diagnostics.
        sources: dict[str, int] = {}
        for cb in table.cells:
            sources[cb.source] = sources.get(cb.source, 0) + 1
        assembly = TableAssembly(
            index=i,
            n_cells_detected=len(table.cells),
            n_texts=len(table.texts),
            table_class=table.table_class,
            cell_sources=dict(sorted(sources.items())),
        )
        try:
            grid = infer_grid(
                table.cells,
                table.box,
                row_tol=options.row_tol,
                col_tol=options.col_tol,
                conflicts=options.conflicts,
            )
            assembly.grid = grid
            assembly.result = assign_text(grid, table.texts, gate=options.gate)
        except TableKitError as exc:
            if options.strict:
                raise
            assembly.error = str(exc)
        assemblies.append(assembly)
    return assemblies


def grid_to_rows(grid: TableGrid) -> list[list[str]]:
    return [
        [grid.cell_text(r, c) for c in range(grid.n_cols)]
        for r in range(grid.n_rows)
    ]


def write_table_csv(grid: TableGrid, path) -> None:
    """Row-major CSV, one record per grid row, empty cells as empty fields.

    Standard quoting: fields containing comma, quote, or newline are quoted
    and embedded quotes doubled; records end with LF.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerows(grid_to_rows(grid))


def read_table_csv(path) -> list[list[str]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return [row for row in csv.reader(fh)]


def assembly_report_json(assemblies: list[TableAssembly], csv_names: dict[int, str]) -> dict:
    tables = []
    for a in assemblies:
        if a.error is not None:
            tables.append(
                {
                    "index": a.index,
                    "error": a.error,
                    "n_cells_detected": a.n_cells_detected,
                    "n_texts": a.n_texts,
                }
            )
            continue
        tables.append(
            {
                "index": a.index,
                "error": None,
                "class": a.table_class,
                "n_rows": a.grid.n_rows,
                "n_cols": a.grid.n_cols,
                "n_cells_detected": a.n_cells_detected,
                "cell_sources": a.cell_sources,
                "n_texts": a.n_texts,
                "n_assigned": len(a.result.assignments),
                "n_unassigned_texts": len(a.result.unassigned),
                "warnings": a.warnings,
                "csv": csv_names.get(a.index),
            }
        )
    return {
        "version": 1,
        "n_tables": len(assemblies),
        "n_errors": sum(1 for a in assemblies if a.error is not None),
        "tables": tables,
    }


@dataclass
class EvalReport:
    mean_table_iou: float
    per_table_iou: list[float]
    word_accuracy_positional: float
    word_accuracy_bag: float
    row_accuracy: float
    hungarian: MatchReport | None
    counts: tuple[int, int]  # (X, Y) in the selected word-accuracy mode
    warnings: list[str] = field(default_factory=list)
    timings: dict[str, float] | None = None
    # Mode-specific tallies kept for corpus-level pooling; the serialized
    # "counts" field reflects the selected mode only.
    counts_positional: tuple[int, int] = (0, 0)
    counts_bag: tuple[int, int] = (0, 0)
    row_counts: tuple[int, int] = (0, 0)

    def as_dict(self) -> dict:
        data = {
            "version": 1,
            "mean_table_iou": self.mean_table_iou,
            "per_table_iou": self.per_table_iou,
            "word_accuracy_positional": self.word_accuracy_positional,
            "word_accuracy_bag": self.word_accuracy_bag,
            "row_accuracy": self.row_accuracy,
            "hungarian": self.hungarian.as_dict() if self.hungarian else None,
            "counts": {"X": self.counts[0], "Y": self.counts[1]},
            "warnings": self.warnings,
        }
        if self.timings is not None:
            data["timings"] = self.timings
        return data


def _truth_grid(table: TruthTable) -> TableGrid:
    """Lattice grid for a truth table: uniform partition of its box, with
    the recorded cell strings as contents."""
    cells = {}
    band_w = table.box.width / table.n_cols
    band_h = table.box.height / table.n_rows
    for r in range(table.n_rows):
        for c in range(table.n_cols):
            box = BBox(
                table.box.x1 + c * band_w, table.box.y1 + r * band_h,
                table.box.x1 + (c + 1) * band_w, table.box.y1 + (r + 1) * band_h,
            )
            text = table.cell_texts[(r, c)].strip()
            cells[(r, c)] = GridCell(
                box=box, contents=[text] if text else [], occupied=True
            )
    return TableGrid(table.n_rows, table.n_cols, cells, table.box)


def _empty_grid_like(table: TruthTable) -> TableGrid:
    grid = _truth_grid(table)
    grid.clear_contents()
    return grid


def _build_hungarian(
    pred_doc: DetectionDocument,
    truth_doc: TruthDocument,
    options: PipelineOptions,
    warnings: list[str],
) -> MatchReport | None:
    """Set matching over the table sets, when class data is available."""
    if not truth_doc.tables:
        return None
    if any(t.class_probs is None for t in pred_doc.tables):
        return None
    if any(t.class_id is None for t in truth_doc.tables):
        return None
    lengths = {len(t.class_probs) for t in pred_doc.tables}
    if len(lengths) > 1:
        warnings.append("inconsistent class_probs lengths; skipping set matching")
        return None
    n_entries = lengths.pop() if lengths else 3
    if any(t.class_id >= n_entries - 1 for t in truth_doc.tables):
        warnings.append("truth class_id outside prediction class range; skipping set matching")
        return None

    preds = [
        Prediction(t.class_probs, to_norm(t.box, pred_doc.image_w, pred_doc.image_h))
        for t in pred_doc.tables
    ]
    truths = [
        Truth(t.class_id, to_norm(t.box, truth_doc.image_w, truth_doc.image_h))
        for t in truth_doc.tables
    ]
    # DETR-style sets are fixed-size with S >= |truths|; a smaller detector
    # output is padded with certain no-object predictions.
    while len(preds) < len(truths):
        probs = (0.0,) * (n_entries - 1) + (1.0,)
        preds.append(Prediction(probs, NormBox(0.5, 0.5, 1.0, 1.0)))
        warnings.append("padded prediction set with a no-object entry")
    return match_sets(preds, truths, options.lambda_iou, options.lambda_l1)


def evaluate_documents(
    pred_doc: DetectionDocument,
    truth_doc: TruthDocument,
    options: PipelineOptions = PipelineOptions(),
) -> EvalReport:
    """Assemble the prediction document and score it against ground truth.

    Word accuracy is accumulated over the IoU-paired tables; a shape
    mismatch downgrades that pair's positional comparison to bag mode with
    a warning (or raises under options.strict). Unmatched truth tables
    contribute all their tokens to Y with nothing recognized.
    """
    warnings: list[str] = []
    timings: dict[str, float] = {}

    t0 = time.perf_counter()
    assemblies = assemble_document(pred_doc, options)
    grids: dict[int, TableGrid] = {}
    for a in assemblies:
        if a.error is not None:
            warnings.append(f"prediction table {a.index}: {a.error}")
        else:
            grids[a.index] = a.grid
            for w in a.warnings:
                warnings.append(f"prediction table {a.index}: {w}")
    timings["assemble_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    pred_boxes = [t.box for t in pred_doc.tables]
    truth_boxes = [t.box for t in truth_doc.tables]
    per_table_iou, mean_iou = detection_iou(pred_boxes, truth_boxes)
    pairing = pair_tables_by_iou(pred_boxes, truth_boxes)
    timings["detection_iou_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    x_pos = y_pos = 0
    x_bag = y_bag = 0
    rows_matched = rows_total = 0
    for i, truth_table in enumerate(truth_doc.tables):
        truth_grid = _truth_grid(truth_table)
        j = pairing[i]
        pred_grid = grids.get(j) if j >= 0 else None
        if pred_grid is None:
            # Nothing recognized for this truth table.
            empty = _empty_grid_like(truth_table)
            bx, by, _ = word_accuracy(empty, truth_grid, mode="bag")
            x_pos += bx
            y_pos += by
            x_bag += bx
            y_bag += by
            rows_total += truth_table.n_rows
            continue

        bx, by, _ = word_accuracy(pred_grid, truth_grid, mode="bag")
        x_bag += bx
        y_bag += by
        shapes_match = (pred_grid.n_rows, pred_grid.n_cols) == (
            truth_table.n_rows, truth_table.n_cols,
        )
        if shapes_match:
            px, py, _ = word_accuracy(pred_grid, truth_grid, mode="positional")
            x_pos += px
            y_pos += py
        else:
            if options.strict:
                raise ShapeMismatchError(
                    f"truth table {i}: prediction grid "
                    f"{pred_grid.n_rows}x{pred_grid.n_cols} vs truth "
                    f"{truth_table.n_rows}x{truth_table.n_cols}"
                )
            warnings.append(
                f"truth table {i}: shape mismatch "
                f"({pred_grid.n_rows}x{pred_grid.n_cols} vs "
                f"{truth_table.n_rows}x{truth_table.n_cols}); "
                "positional accuracy downgraded to bag mode"
            )
            x_pos += bx
            y_pos += by
        rm, rt, _ = row_accuracy(pred_grid, truth_grid)
        rows_matched += rm
        rows_total += rt
    timings["word_accuracy_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    hungarian = _build_hungarian(pred_doc, truth_doc, options, warnings)
    timings["match_sets_s"] = time.perf_counter() - t0

    counts = (x_pos, y_pos) if options.wordacc == "positional" else (x_bag, y_bag)
    return EvalReport(
        mean_table_iou=mean_iou,
        per_table_iou=per_table_iou,
        word_accuracy_positional=word_accuracy_percent(x_pos, y_pos),
        word_accuracy_bag=word_accuracy_percent(x_bag, y_bag),
        row_accuracy=100.0 * rows_matched / rows_total if rows_total else 100.0,
        hungarian=hungarian,
        counts=counts,
        warnings=warnings,
        timings=timings if options.timings else None,
        counts_positional=(x_pos, y_pos),
        counts_bag=(x_bag, y_bag),
        row_counts=(rows_matched, rows_total),
    )


def evaluate_corpus(
    pairs: list[tuple[str, DetectionDocument, TruthDocument]],
    options: PipelineOptions = PipelineOptions(),
) -> dict:
    """Evaluate (name, prediction, truth) pairs and pool the aggregates.

    Aggregate accuracies are pooled over tokens/rows/tables, not averaged
    over instances, so large and small tables weigh by their content.
    """
    instances = []
    agg_iou: list[float] = []
    x_pos = y_pos = x_bag = y_bag = 0
    rows_matched = rows_total = 0
    for name, pred_doc, truth_doc in pairs:
        report = evaluate_documents(pred_doc, truth_doc, options)
        entry = {"name": name}
        entry.update(
            {k: v for k, v in report.as_dict().items() if k != "version"}
        )
        instances.append(entry)
        agg_iou.extend(report.per_table_iou)
        x_pos += report.counts_positional[0]
        y_pos += report.counts_positional[1]
        x_bag += report.counts_bag[0]
        y_bag += report.counts_bag[1]
        rows_matched += report.row_counts[0]
        rows_total += report.row_counts[1]

    agg_counts = (x_pos, y_pos) if options.wordacc == "positional" else (x_bag, y_bag)
    return {
        "version": 1,
        "n_instances": len(pairs),
        "instances": instances,
        "aggregate": {
            "mean_table_iou": sum(agg_iou) / len(agg_iou) if agg_iou else 1.0,
            "word_accuracy_positional": word_accuracy_percent(x_pos, y_pos),
            "word_accuracy_bag": word_accuracy_percent(x_bag, y_bag),
            "row_accuracy": (
                100.0 * rows_matched / rows_total if rows_total else 100.0
            ),
            "counts": {"X": agg_counts[0], "Y": agg_counts[1]},
        },
    }
