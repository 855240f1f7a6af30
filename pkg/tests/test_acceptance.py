"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest -v -s tests/test_acceptance.py` to see the lines as they
complete. Oracles here are written from scratch against the documented
rules, not against the library internals.
"""

import itertools
import json
import math
import random
import time
from contextlib import contextmanager

from tablekit import (
    BBox,
    CellBox,
    NormBox,
    Prediction,
    Truth,
    assign_text,
    infer_grid,
    iou,
    giou,
    l_box,
    match_sets,
    read_table_csv,
)
from tablekit.cli import main as cli_main
from tablekit.grid import GridCell, TableGrid
from tablekit.matching import rounded_percent
from tablekit.pipeline import grid_to_rows, write_table_csv
from tablekit.synth import SynthConfig, corpus, generate


@contextmanager
def criterion(n, label):
    try:
        yield
    except BaseException:
        print(f"criterion {n:2d} FAIL  {label}")
        raise
    print(f"criterion {n:2d} PASS  {label}")


def run_cli(argv):
    return cli_main([str(a) for a in argv])


# --- independent oracles ---------------------------------------------------

def oracle_gate_assign(grid, texts):
    """Brute force: test the half-extent gate for every (text, cell) pair,
    then pick the minimum-distance candidate (row, then column on ties)."""
    out = {}
    for i, tb in enumerate(texts):
        ex = (tb.box.x1 + tb.box.x2) / 2
        ey = (tb.box.y1 + tb.box.y2) / 2
        candidates = []
        for r in range(grid.n_rows):
            for c in range(grid.n_cols):
                box = grid.cell(r, c).box
                tcx = (box.x1 + box.x2) / 2
                tcy = (box.y1 + box.y2) / 2
                if abs(ex - tcx) <= (box.x2 - box.x1) / 2 and (
                    abs(ey - tcy) <= (box.y2 - box.y1) / 2
                ):
                    d = math.hypot(ex - tcx, ey - tcy)
                    candidates.append((d, r, c))
        out[i] = min(candidates)[1:] if candidates else None
    return out


def oracle_pair_cost(truth, pred, li, l1):
    def corners(nb):
        return (
            max(nb.cx - nb.w / 2, 0.0), max(nb.cy - nb.h / 2, 0.0),
            min(nb.cx + nb.w / 2, 1.0), min(nb.cy + nb.h / 2, 1.0),
        )

    ax1, ay1, ax2, ay2 = corners(truth.box)
    bx1, by1, bx2, by2 = corners(pred.box)
    inter = max(0.0, min(ax2, bx2) - max(ax1, bx1)) * max(0.0, min(ay2, by2) - max(ay1, by1))
    union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
    hull = (max(ax2, bx2) - min(ax1, bx1)) * (max(ay2, by2) - min(ay1, by1))
    iou_v = inter / union if union > 0 else 0.0
    giou_v = iou_v - ((hull - union) / hull if hull > 0 else 0.0)
    dist = (
        abs(truth.box.cx - pred.box.cx) + abs(truth.box.cy - pred.box.cy)
        + abs(truth.box.w - pred.box.w) + abs(truth.box.h - pred.box.h)
    )
    return -math.log(max(pred.class_probs[truth.class_id], 1e-12)) + li * (
        1.0 - giou_v
    ) + l1 * dist


def oracle_exhaustive_assignment(preds, truths, li, l1):
    cost = [[oracle_pair_cost(t, p, li, l1) for p in preds] for t in truths]
    best = None
    for perm in itertools.permutations(range(len(preds)), len(truths)):
        total = sum(cost[i][j] for i, j in enumerate(perm))
        if best is None or total < best:
            best = total
    return best


# --- criteria ----------------------------------------------------------------

def test_criterion_1_gate_oracle():
    with criterion(1, "assignment gate agrees with brute-force oracle on 500 tables"):
        rng = random.Random(20240601)
        start = time.perf_counter()
        n_texts = 0
        for seed in range(500):
            cfg = SynthConfig(
                rows=rng.randint(1, 8),
                cols=rng.randint(1, 8),
                centroid_jitter=rng.choice([0.0, 0.1, 0.25, 0.4]),
                text_dropout=rng.choice([0.0, 0.1]),
                seed=seed,
            )
            inst = generate(cfg)
            table = inst.detections.tables[0]
            grid = infer_grid(table.cells, table.box)
            res = assign_text(grid, table.texts)
            got = {a.text_index: (a.row, a.col) for a in res.assignments}
            for idx in (i for i in range(len(table.texts)) if i not in got):
                got[idx] = None
            want = oracle_gate_assign(grid, table.texts)
            assert got == want, f"disagreement at seed {seed}"
            n_texts += len(table.texts)
        elapsed = time.perf_counter() - start
        assert elapsed < 10.0, f"took {elapsed:.2f}s (limit 10s)"
        assert n_texts > 10000  # sanity: the corpus is not trivial


def test_criterion_2_hungarian_oracle():
    with criterion(2, "match_sets equals exhaustive assignment on 300 instances"):
        rng = random.Random(777)
        start = time.perf_counter()
        for trial in range(300):
            n = rng.randint(1, 7)
            s = rng.randint(n, 7)
            n_entries = rng.randint(2, 4)
            preds = []
            for _ in range(s):
                raw = [rng.uniform(0.01, 1.0) for _ in range(n_entries)]
                total = sum(raw)
                w = rng.uniform(0.05, 0.5)
                h = rng.uniform(0.05, 0.5)
                preds.append(Prediction(
                    tuple(v / total for v in raw),
                    NormBox(rng.uniform(w / 2, 1 - w / 2), rng.uniform(h / 2, 1 - h / 2), w, h),
                ))
            truths = []
            for _ in range(n):
                w = rng.uniform(0.05, 0.5)
                h = rng.uniform(0.05, 0.5)
                truths.append(Truth(
                    rng.randrange(n_entries - 1),
                    NormBox(rng.uniform(w / 2, 1 - w / 2), rng.uniform(h / 2, 1 - h / 2), w, h),
                ))
            li, l1 = rng.uniform(0, 4), rng.uniform(0, 8)
            report = match_sets(preds, truths, li, l1)
            want = oracle_exhaustive_assignment(preds, truths, li, l1)
            assert math.isclose(report.total_match_cost, want, rel_tol=1e-9), (
                f"trial {trial}: {report.total_match_cost} vs {want}"
            )
        elapsed = time.perf_counter() - start
        assert elapsed < 30.0, f"took {elapsed:.2f}s (limit 30s)"


def test_criterion_3_noiseless_round_trip(tmp_path):
    with criterion(3, "noiseless generate/assemble/evaluate round trip, 100 seeds"):
        rng = random.Random(2020)
        for seed in range(100):
            cfg = SynthConfig(rows=rng.randint(1, 6), cols=rng.randint(1, 6), seed=seed)
            inst = generate(cfg)
            work = tmp_path / f"s{seed}"
            work.mkdir()
            from tablekit import save_detection_document, save_truth_document

            det = work / "pred.json"
            tru = work / "truth.json"
            save_detection_document(inst.detections, det)
            save_truth_document(inst.truth_doc, tru)

            out = work / "out"
            assert run_cli(["assemble", det, "--out-dir", out]) == 0
            rows = read_table_csv(out / "table_000.csv")
            want_rows = [
                [inst.truth_grid.cell_text(r, c) for c in range(cfg.cols)]
                for r in range(cfg.rows)
            ]
            assert rows == want_rows, f"seed {seed}: CSV differs from truth"

            assert run_cli(["evaluate", det, tru, "--out-dir", out]) == 0
            report = json.loads((out / "eval_report.json").read_text())
            assert report["word_accuracy_positional"] == 100.0, f"seed {seed}"
            assert report["mean_table_iou"] == 1.0, f"seed {seed}"


def test_criterion_4_published_accuracy_ratios():
    with criterion(4, "word-accuracy arithmetic reproduces the published ratios"):
        assert rounded_percent(2485, 2785) == 89
        assert rounded_percent(1818, 2785) == 65
        assert rounded_percent(838, 1130) == 74
        assert rounded_percent(220, 570) == 39


def test_criterion_5_dropout_bookkeeping(tmp_path):
    with criterion(5, "dropout 0.1: reported X matches generator, aggregate in [85, 95]"):
        cfgs = [
            SynthConfig(rows=4, cols=4, text_dropout=0.1, seed=seed)
            for seed in range(100)
        ]
        manifest = corpus(cfgs, tmp_path / "corpus")
        out = tmp_path / "report"
        assert run_cli([
            "evaluate", "--manifest", tmp_path / "corpus" / "manifest.json",
            "--out-dir", out,
        ]) == 0
        report = json.loads((out / "corpus_report.json").read_text())
        assert report["n_instances"] == 100
        for entry, man in zip(report["instances"], manifest["instances"]):
            assert entry["counts"]["X"] == man["n_tokens_kept"], entry["name"]
            assert entry["counts"]["Y"] == man["n_tokens_total"], entry["name"]
        agg = report["aggregate"]["word_accuracy_positional"]
        assert 85.0 <= agg <= 95.0, f"aggregate W_Acc {agg}"


def test_criterion_6_geometry_properties():
    with criterion(6, "iou/giou/l_box properties over 10,000 random box pairs"):
        rng = random.Random(606)

        def rand_box():
            x1, x2 = sorted(rng.uniform(-50, 150) for _ in range(2))
            y1, y2 = sorted(rng.uniform(-50, 150) for _ in range(2))
            return BBox(x1, y1, x2, y2)

        for _ in range(10000):
            a, b = rand_box(), rand_box()
            v_iou = iou(a, b)
            v_giou = giou(a, b)
            assert -1e-9 <= v_iou <= 1.0 + 1e-9
            assert -1.0 - 1e-9 < v_giou <= 1.0 + 1e-9
            assert abs(v_iou - iou(b, a)) <= 1e-9
            assert abs(v_giou - giou(b, a)) <= 1e-9
            assert v_giou <= v_iou + 1e-9

        for _ in range(2000):
            w = rng.uniform(0.01, 0.8)
            h = rng.uniform(0.01, 0.8)
            nb = NormBox(rng.uniform(w / 2, 1 - w / 2), rng.uniform(h / 2, 1 - h / 2), w, h)
            assert abs(l_box(nb, nb, rng.uniform(0, 4), rng.uniform(0, 8))) <= 1e-9


def test_criterion_7_grid_inference_invariance():
    with criterion(7, "grid inference invariant to permutation/translation/scale"):
        for seed in range(200):
            rng = random.Random(9000 + seed)
            rows, cols = rng.randint(1, 8), rng.randint(1, 8)
            cw, ch = rng.uniform(15, 60), rng.uniform(10, 40)
            x0, y0 = rng.uniform(0, 40), rng.uniform(0, 40)
            cells, slots = [], {}
            for r in range(rows):
                for c in range(cols):
                    dx = rng.uniform(-0.1, 0.1) * cw
                    dy = rng.uniform(-0.1, 0.1) * ch
                    box = BBox(
                        x0 + c * cw + dx, y0 + r * ch + dy,
                        x0 + (c + 1) * cw + dx, y0 + (r + 1) * ch + dy,
                    )
                    cells.append(CellBox(box))
                    slots[box.as_tuple()] = (r, c)
            table = BBox(x0 - 5, y0 - 5, x0 + cols * cw + 5, y0 + rows * ch + 5)

            def indices(grid):
                out = {}
                for r, c, cell in grid.iter_slots():
                    if cell.occupied:
                        out[cell.box.as_tuple()] = (r, c)
                return out

            base = infer_grid(cells, table)
            assert (base.n_rows, base.n_cols) == (rows, cols), f"seed {seed}"
            assert indices(base) == slots, f"seed {seed}"

            shuffled = list(cells)
            rng.shuffle(shuffled)
            assert infer_grid(shuffled, table) == base, f"seed {seed} (permutation)"

            dx, dy = rng.uniform(-500, 500), rng.uniform(-500, 500)
            moved = [CellBox(cb.box.translate(dx, dy)) for cb in cells]
            grid_t = infer_grid(moved, table.translate(dx, dy))
            want_t = {
                cb.box.translate(dx, dy).as_tuple(): slots[cb.box.as_tuple()]
                for cb in cells
            }
            assert indices(grid_t) == want_t, f"seed {seed} (translation)"

            s = rng.choice([0.25, 2.0, 17.5])
            scaled = [CellBox(cb.box.scale(s)) for cb in cells]
            grid_s = infer_grid(scaled, table.scale(s))
            want_s = {
                cb.box.scale(s).as_tuple(): slots[cb.box.as_tuple()] for cb in cells
            }
            assert indices(grid_s) == want_s, f"seed {seed} (scaling)"


def test_criterion_8_csv_conformance(tmp_path):
    with criterion(8, "CSV quoting torture set survives emit -> re-parse"):
        nasty = [
            "plain", "comma, inside", 'double "quote"', "'single'",
            "new\nline", "crlf\r\npair", "tab\tchar", ",leading comma",
            "trailing comma,", '"""', "unicode éßЖ中文\U0001f600",
            "semicolon; colon:", " spaces kept inside ", "=formula()",
        ]
        cells = {}
        n = len(nasty)
        for idx, text in enumerate(nasty):
            cells[(idx, 0)] = GridCell(
                box=BBox(0, idx * 10.0, 10.0, (idx + 1) * 10.0),
                contents=[text], occupied=True,
            )
            cells[(idx, 1)] = GridCell(
                box=BBox(10.0, idx * 10.0, 20.0, (idx + 1) * 10.0),
                contents=[], occupied=True,
            )
        grid = TableGrid(n, 2, cells, BBox(0, 0, 20.0, n * 10.0))
        path = tmp_path / "torture.csv"
        write_table_csv(grid, path)
        assert read_table_csv(path) == grid_to_rows(grid)
        for idx, text in enumerate(nasty):
            assert read_table_csv(path)[idx][0] == text.strip()


def test_criterion_9_determinism(tmp_path):
    with criterion(9, "assemble and evaluate are byte-for-byte reproducible"):
        cfgs = [
            SynthConfig(rows=3, cols=4, centroid_jitter=0.3, text_dropout=0.15, seed=s)
            for s in range(10)
        ]
        corpus(cfgs, tmp_path / "corpus")
        manifest = tmp_path / "corpus" / "manifest.json"

        def run_all(tag):
            out = tmp_path / tag
            for entry in json.loads(manifest.read_text())["instances"]:
                det = tmp_path / "corpus" / entry["detections"]
                assert run_cli(["assemble", det, "--out-dir", out / entry["name"]]) == 0
            assert run_cli(["evaluate", "--manifest", manifest, "--out-dir", out / "eval"]) == 0
            files = {}
            for p in sorted((tmp_path / tag).rglob("*")):
                if p.is_file():
                    files[str(p.relative_to(tmp_path / tag))] = p.read_bytes()
            return files

        assert run_all("a") == run_all("b")


def test_criterion_10_throughput(tmp_path):
    with criterion(10, "assemble + evaluate 1,000 tables in under 10 seconds"):
        rng = random.Random(1010)
        cfgs = [
            SynthConfig(
                rows=rng.randint(1, 8), cols=rng.randint(1, 8),
                centroid_jitter=0.2, text_dropout=0.05, seed=seed,
            )
            for seed in range(1000)
        ]
        corpus_dir = tmp_path / "corpus"
        manifest = corpus(cfgs, corpus_dir)
        assert len(manifest["instances"]) == 1000

        start = time.perf_counter()
        out = tmp_path / "out"
        for entry in manifest["instances"]:
            code = run_cli([
                "assemble", corpus_dir / entry["detections"],
                "--out-dir", out / entry["name"],
            ])
            assert code == 0
        assert run_cli([
            "evaluate", "--manifest", corpus_dir / "manifest.json",
            "--out-dir", out / "eval",
        ]) == 0
        elapsed = time.perf_counter() - start
        report = json.loads((out / "eval" / "corpus_report.json").read_text())
        assert report["n_instances"] == 1000
        assert elapsed < 10.0, f"took {elapsed:.2f}s (limit 10s)"
