"""Command-line interface.

Subcommands:
    assemble   detection file -> one CSV per table + assembly report
    evaluate   prediction vs truth (or a corpus manifest) -> eval report
    synth      config -> synthetic corpus (detections + truth + manifest)
    match      raw normalized box sets -> bipartite match report

All configuration is explicit flags; environment variables are not read.
Exit status is 0 only when no errors occurred (warnings are fine).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .documents import (
    load_detection_document,
    load_truth_document,
    write_json,
)
from .errors import DocumentError, TableKitError
from .geometry import NormBox
from .matching import Prediction, Truth, match_sets, rounded_percent
from .pipeline import (
    PipelineOptions,
    assemble_document,
    assembly_report_json,
    evaluate_corpus,
    evaluate_documents,
    write_table_csv,
)
from .synth import SynthConfig, corpus


def _add_grid_options(p: argparse.ArgumentParser):
    p.add_argument("--gate", choices=["prose", "literal"], default="prose",
                   help="y-axis gate uses the cell height (prose) or width (literal)")
    p.add_argument("--row-tol", type=float, default=0.5,
                   help="row gap threshold as a fraction of median cell height")
    p.add_argument("--col-tol", type=float, default=0.5,
                   help="column gap threshold as a fraction of median cell width")
    p.add_argument("--conflicts", choices=["merge", "strict"], default="merge",
                   help="what to do when two cells land on one slot")


def _add_lambda_options(p: argparse.ArgumentParser):
    p.add_argument("--lambda-iou", type=float, default=2.0,
                   help="weight of the generalized IoU loss term")
    p.add_argument("--lambda-l1", type=float, default=5.0,
                   help="weight of the L1 box loss term")


def _options_from_args(args) -> PipelineOptions:
    return PipelineOptions(
        gate=getattr(args, "gate", "prose"),
        row_tol=getattr(args, "row_tol", 0.5),
        col_tol=getattr(args, "col_tol", 0.5),
        conflicts=getattr(args, "conflicts", "merge"),
        lambda_iou=getattr(args, "lambda_iou", 2.0),
        lambda_l1=getattr(args, "lambda_l1", 5.0),
        wordacc=getattr(args, "wordacc", "positional"),
        strict=getattr(args, "strict", False),
        timings=getattr(args, "timings", False),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tablekit",
        description="Assemble tables from detector outputs and evaluate them.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("assemble", help="turn a detection file into CSVs")
    p.add_argument("input", help="detection document (JSON)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--format", choices=["csv", "report-only"], default="csv")
    p.add_argument("--strict", action="store_true",
                   help="fail on the first problem instead of isolating it")
    _add_grid_options(p)

    p = sub.add_parser("evaluate", help="score predictions against ground truth")
    p.add_argument("pred", nargs="?", help="prediction detection document")
    p.add_argument("truth", nargs="?", help="truth document")
    p.add_argument("--manifest", help="corpus manifest (evaluates every instance)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--wordacc", choices=["positional", "bag"], default="positional")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--timings", action="store_true",
                   help="include per-stage wall-clock times in the report "
                        "(breaks byte-for-byte reproducibility)")
    _add_grid_options(p)
    _add_lambda_options(p)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("config", nargs="?", help="JSON config; omitted = one default instance")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("match", help="bipartite matching over raw box sets")
    p.add_argument("preds", help="predictions file (class_probs + normalized boxes)")
    p.add_argument("truths", help="truths file (class_id + normalized boxes)")
    p.add_argument("--out-dir", required=True)
    _add_lambda_options(p)

    return parser


def cmd_assemble(args) -> int:
    options = _options_from_args(args)
    doc = load_detection_document(args.input, strict=args.strict)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    assemblies = assemble_document(doc, options)
    csv_names: dict[int, str] = {}
    for a in assemblies:
        if a.error is not None:
            print(f"table {a.index}: ERROR: {a.error}", file=sys.stderr)
            continue
        if args.format == "csv":
            name = f"table_{a.index:03d}.csv"
            write_table_csv(a.grid, out_dir / name)
            csv_names[a.index] = name
        print(
            f"table {a.index}: {a.grid.n_rows}x{a.grid.n_cols}, "
            f"{a.n_texts} texts, {len(a.result.unassigned)} unassigned"
        )
    write_json(assembly_report_json(assemblies, csv_names), out_dir / "assembly_report.json")

    n_errors = sum(1 for a in assemblies if a.error is not None)
    print(f"assembled {len(assemblies)} tables, {n_errors} errors")
    return 0 if n_errors == 0 else 1


def cmd_evaluate(args) -> int:
    options = _options_from_args(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.manifest:
        if args.pred or args.truth:
            print("evaluate: give either PRED TRUTH or --manifest, not both", file=sys.stderr)
            return 2
        manifest_path = Path(args.manifest)
        manifest = _load_manifest(manifest_path, strict=args.strict)
        pairs = []
        for entry in manifest["instances"]:
            base = manifest_path.parent
            pred_doc = load_detection_document(base / entry["detections"], strict=args.strict)
            truth_doc = load_truth_document(base / entry["truth"], strict=args.strict)
            pairs.append((entry["name"], pred_doc, truth_doc))
        report = evaluate_corpus(pairs, options)
        write_json(report, out_dir / "corpus_report.json")
        agg = report["aggregate"]
        x, y = agg["counts"]["X"], agg["counts"]["Y"]
        print(f"evaluated {report['n_instances']} instances")
        print(f"mean table IoU: {agg['mean_table_iou']:.4f}")
        print(f"word accuracy ({options.wordacc}): {rounded_percent(x, y)}% ({x}/{y})")
        return 0

    if not args.pred or not args.truth:
        print("evaluate: PRED and TRUTH files (or --manifest) required", file=sys.stderr)
        return 2
    pred_doc = load_detection_document(args.pred, strict=args.strict)
    truth_doc = load_truth_document(args.truth, strict=args.strict)
    report = evaluate_documents(pred_doc, truth_doc, options)
    write_json(report.as_dict(), out_dir / "eval_report.json")
    x, y = report.counts
    print(f"mean table IoU: {report.mean_table_iou:.4f}")
    print(f"word accuracy ({options.wordacc}): {rounded_percent(x, y)}% ({x}/{y})")
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def _load_manifest(path: Path, strict: bool = False) -> dict:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DocumentError(path, f"cannot read manifest: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DocumentError(path, f"line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict) or data.get("version") != 1:
        raise DocumentError(path, "manifest must be a JSON object with version 1")
    instances = data.get("instances")
    if not isinstance(instances, list):
        raise DocumentError(path, "manifest missing 'instances' array")
    for i, entry in enumerate(instances):
        for key in ("name", "detections", "truth"):
            if key not in entry:
                raise DocumentError(path, f"instances[{i}] missing {key!r}")
    return data


def _synth_configs(path: str | None) -> list[SynthConfig]:
    if path is None:
        return [SynthConfig()]
    p = Path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DocumentError(p, f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DocumentError(p, f"line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict) or data.get("version") != 1:
        raise DocumentError(p, "config must be a JSON object with version 1")
    raw = data.get("configs")
    if not isinstance(raw, list) or not raw:
        raise DocumentError(p, "config needs a non-empty 'configs' array")
    configs = []
    allowed = {
        "rows", "cols", "cell_w", "cell_h", "centroid_jitter",
        "cell_dropout", "text_dropout", "char_noise", "seed",
    }
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise DocumentError(p, f"configs[{i}] must be an object")
        unknown = sorted(set(entry) - allowed)
        if unknown:
            raise DocumentError(p, f"configs[{i}]: unknown fields {unknown}")
        try:
            configs.append(SynthConfig(**entry))
        except (TypeError, ValueError) as exc:
            raise DocumentError(p, f"configs[{i}]: {exc}") from exc
    return configs


def cmd_synth(args) -> int:
    configs = _synth_configs(args.config)
    manifest = corpus(configs, args.out_dir)
    print(f"wrote {len(manifest['instances'])} instances to {args.out_dir}")
    return 0


def _load_match_file(path: str, kind: str):
    p = Path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DocumentError(p, f"cannot read: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DocumentError(p, f"line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict) or data.get("version") != 1:
        raise DocumentError(p, "must be a JSON object with version 1")
    key = "predictions" if kind == "pred" else "truths"
    entries = data.get(key)
    if not isinstance(entries, list):
        raise DocumentError(p, f"missing {key!r} array")
    out = []
    for i, entry in enumerate(entries):
        where = f"{key}[{i}]"
        if not isinstance(entry, dict) or "box" not in entry:
            raise DocumentError(p, f"{where}: needs a 'box' field")
        box = entry["box"]
        if not isinstance(box, list) or len(box) != 4:
            raise DocumentError(p, f"{where}.box: needs [cx, cy, w, h]")
        try:
            nb = NormBox(*[float(v) for v in box])
            if kind == "pred":
                probs = entry.get("class_probs")
                if not isinstance(probs, list):
                    raise ValueError("needs a 'class_probs' array")
                out.append(Prediction(tuple(float(v) for v in probs), nb))
            else:
                out.append(Truth(int(entry.get("class_id", 0)), nb))
        except (TypeError, ValueError) as exc:
            raise DocumentError(p, f"{where}: {exc}") from exc
    return out


def cmd_match(args) -> int:
    preds = _load_match_file(args.preds, "pred")
    truths = _load_match_file(args.truths, "truth")
    report = match_sets(preds, truths, args.lambda_iou, args.lambda_l1)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    data = {"version": 1}
    data.update(report.as_dict())
    write_json(data, out_dir / "match_report.json")
    print(
        f"matched {len(truths)} truths to {len(preds)} predictions, "
        f"cost {report.total_match_cost:.6f}, loss {report.hungarian_loss:.6f}"
    )
    return 0


_COMMANDS = {
    "assemble": cmd_assemble,
    "evaluate": cmd_evaluate,
    "synth": cmd_synth,
    "match": cmd_match,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (TableKitError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
