"""Synthetic ground-truth tables plus simulated noisy detector outputs.

All randomness flows from the config seed through purpose-specific
sub-streams (content, jitter, cell dropout, text dropout, char noise), and
every stream consumes a fixed number of draws per token regardless of the
noise parameter values. That makes dropout sets nested across parameter
sweeps -- raising text_dropout with the same seed only ever removes tokens,
which keeps degradation monotone -- and generation bit-identical per seed.

Text centroids are placed uniformly inside a jitter-scaled copy of the
assignment gate centered on the cell centroid, so any jitter below 1.0
keeps every token recoverable by the centroid-gate mapping.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

from .documents import (
    DetectionDocument,
    TableDetection,
    TruthDocument,
    TruthTable,
    save_detection_document,
    save_truth_document,
    write_json,
)
from .errors import DocumentError
from .geometry import BBox
from .grid import CellBox, GridCell, TableGrid
from .mapping import TextBox

# Fixed embedded vocabulary: lowercase a-z only, so character corruption
# stays inside [a-z0-9] and CSV quoting never triggers in baseline tests.
WORDS = (
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel",
    "india", "juliet", "kilo", "lima", "mike", "november", "oscar", "papa",
    "quebec", "romeo", "sierra", "tango", "uniform", "victor", "whiskey",
    "xray", "yankee", "zulu", "amber", "basalt", "cedar", "dune", "ember",
    "fjord", "grove", "harbor", "inlet", "jasper", "karst", "lagoon",
    "mesa", "nectar", "onyx", "prairie", "quartz", "ridge", "summit",
    "tundra", "umber", "vale", "willow", "zenith", "anchor", "beacon",
    "cargo", "docket", "engine", "ferry", "gasket", "hangar", "ingot",
    "jetty", "keel", "ledger", "mast", "nozzle", "orbit", "piston",
    "quay", "rudder", "sensor", "turbine", "valve", "wharf", "yield",
    "zebra", "atlas", "birch", "cobalt", "denim", "ebony", "fable",
)

CORRUPTION_ALPHABET = "abcdefghijklmnopqrstuvwxyz0123456789"

WORD_W_FRAC = 0.30  # word box extent relative to the cell
WORD_H_FRAC = 0.45
# Horizontal spacing between word slots inside one cell. Together with a
# jitter of up to 0.4 the worst-case centroid offset stays at 0.45 of the
# cell width, strictly inside the half-width assignment gate.
WORD_SPACING_FRAC = 0.25


@dataclass(frozen=True)
class SynthConfig:
    rows: int = 3
    cols: int = 3
    cell_w: float = 60.0
    cell_h: float = 24.0
    centroid_jitter: float = 0.0
    cell_dropout: float = 0.0
    text_dropout: float = 0.0
    char_noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.rows}x{self.cols}")
        if self.cell_w <= 0 or self.cell_h <= 0:
            raise ValueError("cell dimensions must be positive")
        if self.centroid_jitter < 0:
            raise ValueError("centroid_jitter must be nonnegative")
        for name in ("cell_dropout", "text_dropout", "char_noise"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")


@dataclass
class SynthInstance:
    """One generated table: the known truth plus the derived noisy inputs."""

    config: SynthConfig
    truth_grid: TableGrid
    truth_doc: TruthDocument
    detections: DetectionDocument
    truth_tables: list[BBox]
    n_tokens_total: int
    n_tokens_kept: int


def _stream(seed: int, purpose: str) -> random.Random:
    return random.Random(f"{seed}/{purpose}")


def _corrupt(word: str, rng: random.Random, char_noise: float) -> str:
    # Draws are consumed for every character even at char_noise == 0 so the
    # stream position only depends on the content, not the noise level.
    out = []
    for ch in word:
        u = rng.random()
        pick = rng.choice(CORRUPTION_ALPHABET)
        if u < char_noise:
            if pick == ch:
                pick = CORRUPTION_ALPHABET[
                    (CORRUPTION_ALPHABET.index(ch) + 1) % len(CORRUPTION_ALPHABET)
                ]
            out.append(pick)
        else:
            out.append(ch)
    return "".join(out)


def generate(cfg: SynthConfig) -> SynthInstance:
    """Deterministically build one table and its simulated detector outputs."""
    content = _stream(cfg.seed, "content")
    jitter = _stream(cfg.seed, "jitter")
    drop_cell = _stream(cfg.seed, "cell-dropout")
    drop_text = _stream(cfg.seed, "text-dropout")
    noise = _stream(cfg.seed, "char-noise")

    margin_x = cfg.cell_w
    margin_y = cfg.cell_h
    table_box = BBox(
        margin_x, margin_y,
        margin_x + cfg.cols * cfg.cell_w, margin_y + cfg.rows * cfg.cell_h,
    )
    image_w = table_box.x2 + margin_x
    image_h = table_box.y2 + margin_y

    truth_cells: dict[tuple[int, int], GridCell] = {}
    cell_words: dict[tuple[int, int], list[str]] = {}
    for r in range(cfg.rows):
        for c in range(cfg.cols):
            box = BBox(
                table_box.x1 + c * cfg.cell_w, table_box.y1 + r * cfg.cell_h,
                table_box.x1 + (c + 1) * cfg.cell_w, table_box.y1 + (r + 1) * cfg.cell_h,
            )
            words = [content.choice(WORDS) for _ in range(content.randint(1, 3))]
            cell_words[(r, c)] = words
            truth_cells[(r, c)] = GridCell(box=box, contents=list(words), occupied=True)

    truth_grid = TableGrid(cfg.rows, cfg.cols, truth_cells, table_box)

    det_cells: list[CellBox] = []
    det_texts: list[TextBox] = []
    n_total = 0
    n_kept = 0
    half_word_w = WORD_W_FRAC * cfg.cell_w / 2.0
    half_word_h = WORD_H_FRAC * cfg.cell_h / 2.0
    for r in range(cfg.rows):
        for c in range(cfg.cols):
            cell_box = truth_cells[(r, c)].box
            ccx = (cell_box.x1 + cell_box.x2) / 2.0
            ccy = (cell_box.y1 + cell_box.y2) / 2.0
            dropped_cell = drop_cell.random() < cfg.cell_dropout
            if not dropped_cell:
                det_cells.append(CellBox(cell_box, score=1.0, source="bordered"))
            words = cell_words[(r, c)]
            spacing = WORD_SPACING_FRAC * cfg.cell_w
            for wi, word in enumerate(words):
                n_total += 1
                base_x = ccx + (wi - (len(words) - 1) / 2.0) * spacing
                jx = jitter.uniform(-1.0, 1.0) * cfg.centroid_jitter * cfg.cell_w / 2.0
                jy = jitter.uniform(-1.0, 1.0) * cfg.centroid_jitter * cfg.cell_h / 2.0
                emitted = _corrupt(word, noise, cfg.char_noise)
                dropped_text = drop_text.random() < cfg.text_dropout
                if dropped_text:
                    continue
                n_kept += 1
                wx, wy = base_x + jx, ccy + jy
                word_box = BBox(
                    max(wx - half_word_w, 0.0), max(wy - half_word_h, 0.0),
                    min(wx + half_word_w, image_w), min(wy + half_word_h, image_h),
                )
                det_texts.append(TextBox(word_box, emitted, score=1.0))

    # One-hot on "bordered" for a perfect detector; no-object entry last.
    detection = TableDetection(
        box=table_box,
        table_class="bordered",
        score=1.0,
        cells=det_cells,
        texts=det_texts,
        class_probs=(1.0, 0.0, 0.0),
    )
    detections = DetectionDocument(image_w, image_h, [detection])
    truth_doc = TruthDocument(
        image_w, image_h,
        [
            TruthTable(
                box=table_box,
                n_rows=cfg.rows,
                n_cols=cfg.cols,
                cell_texts={
                    (r, c): " ".join(cell_words[(r, c)])
                    for r in range(cfg.rows)
                    for c in range(cfg.cols)
                },
                class_id=0,
            )
        ],
    )

    return SynthInstance(
        config=cfg,
        truth_grid=truth_grid,
        truth_doc=truth_doc,
        detections=detections,
        truth_tables=[table_box],
        n_tokens_total=n_total,
        n_tokens_kept=n_kept,
    )


def corpus(configs: list[SynthConfig], out_dir) -> dict:
    """Generate one instance per config, writing a detection file, a truth
    file, and a manifest listing the pairs. Returns the manifest dict."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, cfg in enumerate(configs):
        inst = generate(cfg)
        name = f"inst_{i:04d}"
        det_name = f"{name}.detections.json"
        truth_name = f"{name}.truth.json"
        try:
            save_detection_document(inst.detections, out / det_name)
            save_truth_document(inst.truth_doc, out / truth_name)
        except OSError as exc:
            raise DocumentError(out / det_name, f"cannot write corpus file: {exc}") from exc
        entries.append(
            {
                "name": name,
                "seed": cfg.seed,
                "rows": cfg.rows,
                "cols": cfg.cols,
                "detections": det_name,
                "truth": truth_name,
                "n_tokens_total": inst.n_tokens_total,
                "n_tokens_kept": inst.n_tokens_kept,
            }
        )
    manifest = {"version": 1, "instances": entries}
    try:
        write_json(manifest, out / "manifest.json")
    except OSError as exc:
        raise DocumentError(out / "manifest.json", f"cannot write manifest: {exc}") from exc
    return manifest
