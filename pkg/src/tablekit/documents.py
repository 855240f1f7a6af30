"""Detection and truth document formats (version 1).

Both are UTF-8 JSON with an explicit "version" field. Boxes are
[x1, y1, x2, y2] pixel arrays and get clamped to the image bounds on load;
anything structurally wrong (inverted box, bad score, missing field) raises
DocumentError with the field path. Unknown fields are ignored unless
strict=True. Byte-order marks are rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DocumentError
from .geometry import BBox
from .grid import CELL_SOURCES, CellBox
from .mapping import TextBox

FORMAT_VERSION = 1

TABLE_CLASSES = ("bordered", "borderless")

_BOMS = (b"\xef\xbb\xbf", b"\xff\xfe", b"\xfe\xff")


@dataclass
class TableDetection:
    """One detected table: region, style class, and the cell/text boxes
    found inside it. class_probs (no-object last) is optional and only
    feeds the set-matching evaluation."""

    box: BBox
    table_class: str = "bordered"
    score: float = 1.0
    cells: list[CellBox] = field(default_factory=list)
    texts: list[TextBox] = field(default_factory=list)
    class_probs: tuple[float, ...] | None = None


@dataclass
class DetectionDocument:
    image_w: float
    image_h: float
    tables: list[TableDetection] = field(default_factory=list)


@dataclass
class TruthTable:
    """Ground truth for one table: region plus the complete lattice of cell
    strings keyed (row, col). class_id is optional (set-matching only)."""

    box: BBox
    n_rows: int
    n_cols: int
    cell_texts: dict[tuple[int, int], str]
    class_id: int | None = None


@dataclass
class TruthDocument:
    image_w: float
    image_h: float
    tables: list[TruthTable] = field(default_factory=list)


class _Ctx:
    """Validation cursor: remembers the file path and field path for errors."""

    def __init__(self, path):
        self.path = path

    def fail(self, where: str, why: str):
        raise DocumentError(self.path, f"{where}: {why}")

    def require(self, obj: dict, key: str, where: str):
        if key not in obj:
            self.fail(where, f"missing field {key!r}")
        return obj[key]

    def number(self, value, where: str) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(where, f"expected a number, got {type(value).__name__}")
        return float(value)

    def integer(self, value, where: str) -> int:
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(where, f"expected an integer, got {type(value).__name__}")
        return value

    def string(self, value, where: str) -> str:
        if not isinstance(value, str):
            self.fail(where, f"expected a string, got {type(value).__name__}")
        return value

    def array(self, value, where: str) -> list:
        if not isinstance(value, list):
            self.fail(where, f"expected an array, got {type(value).__name__}")
        return value

    def mapping(self, value, where: str) -> dict:
        if not isinstance(value, dict):
            self.fail(where, f"expected an object, got {type(value).__name__}")
        return value

    def score(self, value, where: str) -> float:
        v = self.number(value, where)
        if not 0.0 <= v <= 1.0:
            self.fail(where, f"score {v} outside [0, 1]")
        return v

    def check_keys(self, obj: dict, allowed: set[str], where: str, strict: bool):
        if strict:
            unknown = sorted(set(obj) - allowed)
            if unknown:
                self.fail(where, f"unknown fields {unknown}")

    def box(self, value, where: str, image_box: BBox | None) -> BBox:
        arr = self.array(value, where)
        if len(arr) != 4:
            self.fail(where, f"box needs 4 numbers, got {len(arr)}")
        coords = [self.number(v, f"{where}[{i}]") for i, v in enumerate(arr)]
        try:
            box = BBox(*coords)
        except ValueError as exc:
            self.fail(where, str(exc))
        if image_box is not None:
            box = box.clamp_to(image_box)
        return box


def _read_json(path, ctx: _Ctx) -> dict:
    raw = Path(path).read_bytes()
    for bom in _BOMS:
        if raw.startswith(bom):
            ctx.fail("file", "byte-order mark not allowed; use plain UTF-8")
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        ctx.fail("file", f"not valid UTF-8: {exc}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        ctx.fail(f"line {exc.lineno}, column {exc.colno}", exc.msg)
    if not isinstance(data, dict):
        ctx.fail("file", "top level must be a JSON object")
    return data


def _check_version(data: dict, ctx: _Ctx):
    version = ctx.require(data, "version", "document")
    if version != FORMAT_VERSION:
        ctx.fail("version", f"unsupported version {version!r}, expected {FORMAT_VERSION}")


def _image_dims(data: dict, ctx: _Ctx) -> tuple[float, float, BBox]:
    w = ctx.number(ctx.require(data, "image_w", "document"), "image_w")
    h = ctx.number(ctx.require(data, "image_h", "document"), "image_h")
    if w <= 0 or h <= 0:
        ctx.fail("image dimensions", f"must be positive, got {w}x{h}")
    return w, h, BBox(0.0, 0.0, w, h)


def load_detection_document(path, strict: bool = False) -> DetectionDocument:
    ctx = _Ctx(path)
    data = _read_json(path, ctx)
    ctx.check_keys(data, {"version", "image_w", "image_h", "tables"}, "document", strict)
    _check_version(data, ctx)
    img_w, img_h, image_box = _image_dims(data, ctx)

    tables = []
    for ti, entry in enumerate(ctx.array(ctx.require(data, "tables", "document"), "tables")):
        where = f"tables[{ti}]"
        entry = ctx.mapping(entry, where)
        ctx.check_keys(
            entry, {"box", "class", "score", "cells", "texts", "class_probs"}, where, strict
        )
        box = ctx.box(ctx.require(entry, "box", where), f"{where}.box", image_box)
        table_class = ctx.string(entry.get("class", "bordered"), f"{where}.class")
        if table_class not in TABLE_CLASSES:
            ctx.fail(f"{where}.class", f"unknown table class {table_class!r}")
        score = ctx.score(entry.get("score", 1.0), f"{where}.score")

        cells = []
        for ci, cell in enumerate(ctx.array(entry.get("cells", []), f"{where}.cells")):
            cw = f"{where}.cells[{ci}]"
            cell = ctx.mapping(cell, cw)
            ctx.check_keys(cell, {"box", "score", "source"}, cw, strict)
            cbox = ctx.box(ctx.require(cell, "box", cw), f"{cw}.box", image_box)
            cscore = ctx.score(cell.get("score", 1.0), f"{cw}.score")
            source = ctx.string(cell.get("source", table_class), f"{cw}.source")
            if source not in CELL_SOURCES:
                ctx.fail(f"{cw}.source", f"unknown cell source {source!r}")
            cells.append(CellBox(cbox, cscore, source))

        texts = []
        for xi, text in enumerate(ctx.array(entry.get("texts", []), f"{where}.texts")):
            tw = f"{where}.texts[{xi}]"
            text = ctx.mapping(text, tw)
            ctx.check_keys(text, {"box", "text", "score"}, tw, strict)
            tbox = ctx.box(ctx.require(text, "box", tw), f"{tw}.box", image_box)
            string = ctx.string(ctx.require(text, "text", tw), f"{tw}.text")
            if not string.strip():
                ctx.fail(f"{tw}.text", "text is empty after trimming")
            tscore = ctx.score(text.get("score", 1.0), f"{tw}.score")
            texts.append(TextBox(tbox, string, tscore))

        class_probs = None
        if entry.get("class_probs") is not None:
            probs = ctx.array(entry["class_probs"], f"{where}.class_probs")
            class_probs = tuple(
                ctx.number(p, f"{where}.class_probs[{pi}]") for pi, p in enumerate(probs)
            )

        tables.append(TableDetection(box, table_class, score, cells, texts, class_probs))

    return DetectionDocument(img_w, img_h, tables)


def load_truth_document(path, strict: bool = False) -> TruthDocument:
    ctx = _Ctx(path)
    data = _read_json(path, ctx)
    ctx.check_keys(data, {"version", "image_w", "image_h", "tables"}, "document", strict)
    _check_version(data, ctx)
    img_w, img_h, image_box = _image_dims(data, ctx)

    tables = []
    for ti, entry in enumerate(ctx.array(ctx.require(data, "tables", "document"), "tables")):
        where = f"tables[{ti}]"
        entry = ctx.mapping(entry, where)
        ctx.check_keys(entry, {"box", "grid", "class_id"}, where, strict)
        box = ctx.box(ctx.require(entry, "box", where), f"{where}.box", image_box)
        grid = ctx.mapping(ctx.require(entry, "grid", where), f"{where}.grid")
        ctx.check_keys(grid, {"n_rows", "n_cols", "cell_texts"}, f"{where}.grid", strict)
        n_rows = ctx.integer(ctx.require(grid, "n_rows", f"{where}.grid"), f"{where}.grid.n_rows")
        n_cols = ctx.integer(ctx.require(grid, "n_cols", f"{where}.grid"), f"{where}.grid.n_cols")
        if n_rows < 1 or n_cols < 1:
            ctx.fail(f"{where}.grid", f"grid must be at least 1x1, got {n_rows}x{n_cols}")

        raw_texts = ctx.mapping(
            ctx.require(grid, "cell_texts", f"{where}.grid"), f"{where}.grid.cell_texts"
        )
        cell_texts: dict[tuple[int, int], str] = {}
        for key, value in raw_texts.items():
            kw = f"{where}.grid.cell_texts[{key!r}]"
            parts = key.split(",")
            if len(parts) != 2:
                ctx.fail(kw, 'cell key must be "row,col"')
            try:
                r, c = int(parts[0]), int(parts[1])
            except ValueError:
                ctx.fail(kw, 'cell key must be "row,col" with integer indices')
            if not (0 <= r < n_rows and 0 <= c < n_cols):
                ctx.fail(kw, f"index outside {n_rows}x{n_cols} lattice")
            cell_texts[(r, c)] = ctx.string(value, kw)
        # The lattice must be complete; empty cells are explicit.
        for r in range(n_rows):
            for c in range(n_cols):
                if (r, c) not in cell_texts:
                    ctx.fail(f"{where}.grid.cell_texts", f'missing cell "{r},{c}"')

        class_id = None
        if entry.get("class_id") is not None:
            class_id = ctx.integer(entry["class_id"], f"{where}.class_id")
            if class_id < 0:
                ctx.fail(f"{where}.class_id", "must be nonnegative")

        tables.append(TruthTable(box, n_rows, n_cols, cell_texts, class_id))

    return TruthDocument(img_w, img_h, tables)


def _box_json(box: BBox) -> list[float]:
    return [box.x1, box.y1, box.x2, box.y2]


def detection_document_to_json(doc: DetectionDocument) -> dict:
    tables = []
    for t in doc.tables:
        entry = {
            "box": _box_json(t.box),
            "class": t.table_class,
            "score": t.score,
            "cells": [
                {"box": _box_json(c.box), "score": c.score, "source": c.source}
                for c in t.cells
            ],
            "texts": [
                {"box": _box_json(x.box), "text": x.text, "score": x.score}
                for x in t.texts
            ],
        }
        if t.class_probs is not None:
            entry["class_probs"] = list(t.class_probs)
        tables.append(entry)
    return {
        "version": FORMAT_VERSION,
        "image_w": doc.image_w,
        "image_h": doc.image_h,
        "tables": tables,
    }


def truth_document_to_json(doc: TruthDocument) -> dict:
    tables = []
    for t in doc.tables:
        entry = {
            "box": _box_json(t.box),
            "grid": {
                "n_rows": t.n_rows,
                "n_cols": t.n_cols,
                "cell_texts": {
                    f"{r},{c}": t.cell_texts[(r, c)]
                    for r in range(t.n_rows)
                    for c in range(t.n_cols)
                },
            },
        }
        if t.class_id is not None:
            entry["class_id"] = t.class_id
        tables.append(entry)
    return {
        "version": FORMAT_VERSION,
        "image_w": doc.image_w,
        "image_h": doc.image_h,
        "tables": tables,
    }


def write_json(data: dict, path) -> None:
    """Serialize a report/document deterministically: fixed key order,
    2-space indent, UTF-8, LF, trailing newline."""
    text = json.dumps(data, indent=2, ensure_ascii=False) + "\n"
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def save_detection_document(doc: DetectionDocument, path) -> None:
    write_json(detection_document_to_json(doc), path)


def save_truth_document(doc: TruthDocument, path) -> None:
    write_json(truth_document_to_json(doc), path)
