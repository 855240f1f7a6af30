"""tablekit: deterministic table assembly and evaluation.

Takes upstream detector outputs (table regions, cell boxes, OCR text boxes),
infers the row/column lattice, maps text into cells through a centroid gate
that preserves empty cells, emits CSV, and scores predictions against ground
truth with bipartite set matching, IoU/GIoU metrics, and word-level accuracy.
"""

from .documents import (
    DetectionDocument,
    TableDetection,
    TruthDocument,
    TruthTable,
    load_detection_document,
    load_truth_document,
    save_detection_document,
    save_truth_document,
)
from .errors import (
    DegenerateBoxPairError,
    DocumentError,
    GridConflictError,
    GridError,
    MatchSizeError,
    ShapeMismatchError,
    TableKitError,
)
from .geometry import BBox, NormBox, Point, centroid, giou, iou, l_box, to_corner, to_norm
from .grid import CellBox, GridCell, TableGrid, infer_grid, synthesize_empty_box
from .mapping import Assignment, AssignmentResult, TextBox, assign_text, order_cell_contents
from .matching import (
    MatchReport,
    Prediction,
    Truth,
    detection_iou,
    match_sets,
    row_accuracy,
    word_accuracy,
    word_accuracy_percent,
)
from .pipeline import (
    EvalReport,
    PipelineOptions,
    assemble_document,
    evaluate_corpus,
    evaluate_documents,
    grid_to_rows,
    read_table_csv,
    write_table_csv,
)
from .synth import SynthConfig, SynthInstance, corpus, generate

__version__ = "0.1.0"

__all__ = [
    "BBox", "Point", "NormBox", "centroid", "iou", "giou", "l_box",
    "to_corner", "to_norm",
    "CellBox", "GridCell", "TableGrid", "infer_grid", "synthesize_empty_box",
    "TextBox", "Assignment", "AssignmentResult", "assign_text", "order_cell_contents",
    "Prediction", "Truth", "MatchReport", "match_sets", "detection_iou",
    "word_accuracy", "word_accuracy_percent", "row_accuracy",
    "SynthConfig", "SynthInstance", "generate", "corpus",
    "DetectionDocument", "TableDetection", "TruthDocument", "TruthTable",
    "load_detection_document", "load_truth_document",
    "save_detection_document", "save_truth_document",
    "PipelineOptions", "EvalReport", "assemble_document", "evaluate_documents",
    "evaluate_corpus", "grid_to_rows", "write_table_csv", "read_table_csv",
    "TableKitError", "DegenerateBoxPairError", "GridError", "GridConflictError",
    "ShapeMismatchError", "MatchSizeError", "DocumentError",
]
