"""Set-matching evaluation: optimal bipartite assignment between predicted
and ground-truth box sets, the Hungarian loss over the matched pairs, plain
detection IoU, and word/row-level content accuracy.

Class probability vectors put the no-object entry last, so a vector over K
real classes has K+1 entries.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import MatchSizeError, ShapeMismatchError
from .geometry import BBox, NormBox, box_l1, giou, iou, to_corner
from .grid import TableGrid

PROB_FLOOR = 1e-12
DEFAULT_LAMBDA_IOU = 2.0
DEFAULT_LAMBDA_L1 = 5.0

WORDACC_MODES = ("positional", "bag")


@dataclass(frozen=True)
class Prediction:
    """One slot of the fixed-size prediction set: class distribution
    (no-object last) plus a normalized box."""

    class_probs: tuple[float, ...]
    box: NormBox

    def __post_init__(self):
        if len(self.class_probs) < 2:
            raise ValueError("class_probs needs at least one real class plus no-object")
        if any(p < 0.0 for p in self.class_probs):
            raise ValueError(f"negative class probability in {self.class_probs}")
        total = sum(self.class_probs)
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"class probabilities sum to {total}, expected 1")

    def prob(self, class_id: int) -> float:
        return self.class_probs[class_id]

    @property
    def prob_no_object(self) -> float:
        return self.class_probs[-1]


@dataclass(frozen=True)
class Truth:
    class_id: int
    box: NormBox

    def __post_init__(self):
        if self.class_id < 0:
            raise ValueError(f"class_id must be a real class index, got {self.class_id}")


@dataclass
class MatchReport:
    """Result of matching a truth set against a prediction set.

    assignment[i] is the prediction index matched to truth i; per_pair[i]
    holds that pair's (l1, giou_loss, class_nll).
    """

    assignment: list[int]
    total_match_cost: float
    hungarian_loss: float
    per_pair: list[tuple[float, float, float]]

    def as_dict(self) -> dict:
        return {
            "assignment": list(self.assignment),
            "total_cost": self.total_match_cost,
            "loss": self.hungarian_loss,
            "per_pair": [list(p) for p in self.per_pair],
        }


def _nll(p: float) -> float:
    return -math.log(max(p, PROB_FLOOR))


def _pair_terms(truth: Truth, pred: Prediction) -> tuple[float, float, float]:
    """(l1, giou_loss, class_nll) for one truth/prediction pair."""
    if truth.class_id >= len(pred.class_probs) - 1:
        raise ValueError(
            f"class_id {truth.class_id} out of range for "
            f"{len(pred.class_probs) - 1} real classes"
        )
    l1 = box_l1(truth.box, pred.box)
    giou_loss = 1.0 - giou(to_corner(truth.box, 1.0, 1.0), to_corner(pred.box, 1.0, 1.0))
    return l1, giou_loss, _nll(pred.prob(truth.class_id))


def match_sets(
    preds: list[Prediction],
    truths: list[Truth],
    lambda_iou: float = DEFAULT_LAMBDA_IOU,
    lambda_l1: float = DEFAULT_LAMBDA_L1,
) -> MatchReport:
    """Optimal assignment of truths to predictions, plus the Hungarian loss.

    The pair cost is class NLL + weighted box loss; the same per-pair form
    scores the matched pairs, and every surplus prediction contributes its
    no-object NLL (no box term).

    Raises MatchSizeError when the prediction set is smaller than the truth
    set; callers wanting DETR-style behaviour must pad first.
    """
    n = len(truths)
    s = len(preds)
    if s < n:
        raise MatchSizeError(f"{s} predictions for {n} truths; need S >= |truths|")
    if lambda_iou < 0 or lambda_l1 < 0:
        raise ValueError("loss weights must be nonnegative")

    terms = [[_pair_terms(t, p) for p in preds] for t in truths]
    cost = np.zeros((n, s))
    for i in range(n):
        for j in range(s):
            l1, gl, nll = terms[i][j]
            cost[i, j] = nll + lambda_iou * gl + lambda_l1 * l1

    rows, cols = linear_sum_assignment(cost)
    assignment = [-1] * n
    for i, j in zip(rows.tolist(), cols.tolist()):
        assignment[i] = j

    total = float(sum(cost[i, assignment[i]] for i in range(n)))
    per_pair = [terms[i][assignment[i]] for i in range(n)]
    loss = total
    matched = set(assignment)
    for j in range(s):
        if j not in matched:
            loss += _nll(preds[j].prob_no_object)

    return MatchReport(
        assignment=assignment,
        total_match_cost=total,
        hungarian_loss=loss,
        per_pair=per_pair,
    )


def pair_tables_by_iou(
    pred_boxes: list[BBox], truth_boxes: list[BBox]
) -> list[int]:
    """IoU-optimal pairing: for each truth index, the matched prediction
    index or -1. Solved as an assignment problem with cost 1 - IoU."""
    n = len(truth_boxes)
    m = len(pred_boxes)
    if n == 0 or m == 0:
        return [-1] * n
    cost = np.ones((n, m))
    for i, tb in enumerate(truth_boxes):
        for j, pb in enumerate(pred_boxes):
            cost[i, j] = 1.0 - iou(tb, pb)
    rows, cols = linear_sum_assignment(cost)
    paired = [-1] * n
    for i, j in zip(rows.tolist(), cols.tolist()):
        paired[i] = j
    return paired


def detection_iou(
    pred_tables: list[BBox], truth_tables: list[BBox]
) -> tuple[list[float], float]:
    """Per-truth IoU under the optimal pairing, and the mean over truths.

    Unmatched truths score 0. With no truths at all the mean is 1.0 when
    there are also no predictions (perfect agreement on "no tables"),
    otherwise 0.0.
    """
    if not truth_tables:
        return [], 1.0 if not pred_tables else 0.0
    paired = pair_tables_by_iou(pred_tables, truth_tables)
    per_table = [
        iou(truth_tables[i], pred_tables[j]) if j >= 0 else 0.0
        for i, j in enumerate(paired)
    ]
    return per_table, sum(per_table) / len(per_table)


def _cell_tokens(grid: TableGrid, r: int, c: int) -> list[str]:
    return grid.cell_text(r, c).split()


def _grid_tokens(grid: TableGrid) -> Counter:
    bag: Counter = Counter()
    for r, c, _ in grid.iter_slots():
        bag.update(_cell_tokens(grid, r, c))
    return bag


def word_accuracy(
    pred_grid: TableGrid, truth_grid: TableGrid, mode: str = "positional"
) -> tuple[int, int, float]:
    """(X, Y, W_Acc): correctly recognized words, total ground-truth words,
    and 100 * X / Y.

    Positional mode intersects token multisets cell by cell and requires
    matching shapes; bag mode intersects whole-table multisets and accepts
    any shapes. An empty truth (Y = 0) scores 100.
    """
    if mode not in WORDACC_MODES:
        raise ValueError(f"unknown word accuracy mode {mode!r}")
    if mode == "positional":
        if (pred_grid.n_rows, pred_grid.n_cols) != (truth_grid.n_rows, truth_grid.n_cols):
            raise ShapeMismatchError(
                f"prediction grid {pred_grid.n_rows}x{pred_grid.n_cols} vs "
                f"truth grid {truth_grid.n_rows}x{truth_grid.n_cols}"
            )
        x = 0
        y = 0
        for r, c, _ in truth_grid.iter_slots():
            truth_bag = Counter(_cell_tokens(truth_grid, r, c))
            pred_bag = Counter(_cell_tokens(pred_grid, r, c))
            x += sum((truth_bag & pred_bag).values())
            y += sum(truth_bag.values())
    else:
        truth_bag = _grid_tokens(truth_grid)
        pred_bag = _grid_tokens(pred_grid)
        x = sum((truth_bag & pred_bag).values())
        y = sum(truth_bag.values())
    return x, y, word_accuracy_percent(x, y)


def word_accuracy_percent(x: int, y: int) -> float:
    """W_Acc = (X / Y) * 100, with 100 for an empty ground truth."""
    if y == 0:
        return 100.0
    return 100.0 * x / y


def rounded_percent(x: int, y: int) -> int:
    """Integer percentage as published in summary tables."""
    return round(word_accuracy_percent(x, y))


def row_accuracy(pred_grid: TableGrid, truth_grid: TableGrid) -> tuple[int, int, float]:
    """(matched rows, truth rows, percentage): a row counts only when every
    cell string matches exactly. Shape differences count as mismatches."""
    total = truth_grid.n_rows
    if (pred_grid.n_rows, pred_grid.n_cols) != (truth_grid.n_rows, truth_grid.n_cols):
        return 0, total, 0.0
    matched = 0
    for r in range(total):
        if all(
            pred_grid.cell_text(r, c) == truth_grid.cell_text(r, c)
            for c in range(truth_grid.n_cols)
        ):
            matched += 1
    return matched, total, 100.0 * matched / total
