"""Command-line pipeline driver.

Subcommands: synth | split | augment | eval | bench | report | config.
Exit codes: 0 success, 1 runtime error, 2 usage error. Outputs are
byte-stable for fixed arguments, files, and seeds (bench timings excepted).
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys
from collections import defaultdict
from pathlib import Path

from . import augment as aug
from . import bench as bench_mod
from . import kernels, metrics, report
from .dataset import SUBSETS, SplitAssignment, load_dataset, split_dataset
from .errors import DetbenchError
from .postprocess import DEFAULT_CONFIDENCE, DEFAULT_NMS_IOU, postprocess_image


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="detbench",
        description="Detection-pipeline evaluation and benchmarking engine.",
    )
    parser.add_argument(
        "--version", action="version", version="%(prog)s 0.1.0 (" + kernels.backend_name() + " kernels)"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset root")
    p.add_argument("--out", required=True, help="output dataset root")
    p.add_argument("--n", type=int, default=50, help="number of images")
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--boxes", type=int, nargs=2, default=(0, 6), metavar=("LO", "HI"))
    p.add_argument("--dims", type=int, nargs=2, default=(256, 640), metavar=("LO", "HI"))
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("split", help="write a deterministic train/valid/test split")
    p.add_argument("--root", required=True)
    p.add_argument(
        "--ratios", type=float, nargs=3, default=(0.7, 0.2, 0.1),
        metavar=("TRAIN", "VALID", "TEST"),
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="default: <root>/split.csv")
    p.add_argument(
        "--by-patient", action="store_true",
        help="keep each patient's images in one subset (sizes become approximate)",
    )

    p = sub.add_parser("augment", help="extend the train split with photometric copies")
    p.add_argument("--root", required=True)
    p.add_argument("--split", required=True)
    p.add_argument(
        "--params", default=None,
        help="JSON manifest of {alpha, beta?, gamma?}; default: shipped example "
        "(example values, not tuned for any particular dataset)",
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-split", default=None, help="default: <split dir>/split_augmented.csv")

    p = sub.add_parser("eval", help="score a dets-v1 file against a subset")
    p.add_argument("--root", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--subset", required=True, choices=SUBSETS)
    p.add_argument("--dets", required=True)
    p.add_argument("--imgsz", type=int, default=640)
    p.add_argument("--conf", type=float, default=DEFAULT_CONFIDENCE)
    p.add_argument("--nms-iou", type=float, default=DEFAULT_NMS_IOU)
    p.add_argument("--no-nms", action="store_true", help="score detections as given")
    p.add_argument("--out", default="report.json")

    p = sub.add_parser("bench", help="stage-resolved speed measurement")
    p.add_argument("--root", required=True)
    p.add_argument("--split", default=None)
    p.add_argument("--subset", default="all", choices=SUBSETS + ("all",))
    p.add_argument("--backend", default="oracle", choices=("oracle", "command"))
    p.add_argument("--cmd", default=None, help="command backend argv (one shell-quoted string)")
    p.add_argument("--imgsz", type=int, default=640)
    p.add_argument("--warmup", type=int, default=0)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--conf", type=float, default=DEFAULT_CONFIDENCE)
    p.add_argument("--nms-iou", type=float, default=DEFAULT_NMS_IOU)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--drop-rate", type=float, default=0.0)
    p.add_argument("--jitter", type=float, default=0.0, help="coordinate jitter sigma, px")
    p.add_argument("--spurious", type=float, default=0.0, help="expected false boxes per image")
    p.add_argument("--score-iou-weight", type=float, default=1.0)
    p.add_argument("--score-offset", type=float, default=0.0)
    p.add_argument("--score-noise", type=float, default=0.0)
    p.add_argument("--out", default="timing.json")
    p.add_argument("--dets", default=None, help="also write the detections (dets-v1)")

    p = sub.add_parser("report", help="render comparison tables or scatter data")
    p.add_argument("--models", default=None, help="models.json (default: shipped fixture)")
    p.add_argument("--imgsz", type=int, default=None, help="filter rows to one input size")
    p.add_argument("--format", default="markdown", choices=("markdown", "csv"))
    p.add_argument("--scatter", nargs=2, default=None, metavar=("X", "Y"))
    p.add_argument("--out", default=None, help="default: stdout")

    p = sub.add_parser("config", help="emit a training-config file")
    p.add_argument("--out", required=True)
    p.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE",
        help="override a default (repeatable)",
    )
    return parser


def _load_root_and_split(args) -> tuple:
    index = load_dataset(args.root)
    split = SplitAssignment.from_csv(args.split)
    unknown = set(split.assignment) - set(index.image_ids)
    if unknown:
        raise DetbenchError(f"split references unknown images: {sorted(unknown)[:5]}")
    return index, split


def _cmd_synth(args) -> int:
    index = bench_mod.generate_synthetic_dataset(
        args.out,
        n_images=args.n,
        n_classes=args.classes,
        boxes_per_image=tuple(args.boxes),
        dims=tuple(args.dims),
        seed=args.seed,
    )
    print(f"wrote {args.out}: {json.dumps(index.summary(), sort_keys=True)}")
    return 0


def _cmd_split(args) -> int:
    index = load_dataset(args.root)
    assignment = split_dataset(
        index, ratios=tuple(args.ratios), seed=args.seed, by_patient=args.by_patient
    )
    out = Path(args.out) if args.out else Path(args.root) / "split.csv"
    assignment.to_csv(out)
    train, valid, test = assignment.sizes()
    print(f"wrote {out}: train={train} valid={valid} test={test}")
    return 0


def _cmd_augment(args) -> int:
    index, split = _load_root_and_split(args)
    if args.params:
        params = aug.load_manifest(args.params)
    else:
        from importlib import resources

        params = aug.load_manifest(
            str(resources.files("detbench").joinpath("data/augment_example.json"))
        )
    result = aug.augment_split(index, split, params, seed=args.seed)
    aug.write_augmented_files(args.root, params, result.log)
    out_split = (
        Path(args.out_split)
        if args.out_split
        else Path(args.split).parent / "split_augmented.csv"
    )
    result.split.to_csv(out_split)
    print(
        f"augmented {len(result.log)} copies "
        f"({len(params)} params x {len(result.log) // max(1, len(params))} train images); "
        f"split: {out_split}"
    )
    return 0


def _cmd_eval(args) -> int:
    index, split = _load_root_and_split(args)
    subset_ids = split.subset_ids(args.subset)
    dets = report.read_detections(args.dets)
    if args.no_nms:
        final = dets
    else:
        by_image = defaultdict(list)
        for det in dets:
            by_image[det.image_id].append(det)
        final = []
        for image_id in sorted(by_image):
            final.extend(postprocess_image(by_image[image_id], args.conf, args.nms_iou))
    result = metrics.evaluate(index, subset_ids, final)
    config = {
        "subset": args.subset,
        "imgsz": args.imgsz,
        "confidence": args.conf,
        "nms_iou": None if args.no_nms else args.nms_iou,
        "dets": str(args.dets),
        "split": str(args.split),
        "kernels": kernels.backend_name(),
    }
    report.write_report_json(args.out, result, index.class_table, config)
    print(
        f"wrote {args.out}: map50={result.map50:.6f} map5095={result.map5095:.6f} "
        f"f1_best={result.f1_best:.6f} @ conf {result.f1_best_confidence:.3f}"
    )
    return 0


def _cmd_bench(args) -> int:
    index = load_dataset(args.root)
    if args.subset == "all":
        image_ids = sorted(index.image_ids)
    else:
        if not args.split:
            raise DetbenchError("--subset needs --split (or use --subset all)")
        split = SplitAssignment.from_csv(args.split)
        image_ids = split.subset_ids(args.subset)
        if not image_ids:
            raise DetbenchError(f"subset {args.subset!r} is empty")

    if args.backend == "oracle":
        noise = bench_mod.NoiseModel(
            coordinate_jitter_sigma=args.jitter,
            drop_rate=args.drop_rate,
            spurious_rate=args.spurious,
            score_law=bench_mod.ScoreLaw(
                iou_weight=args.score_iou_weight,
                offset=args.score_offset,
                noise_sigma=args.score_noise,
            ),
        )
        backend = bench_mod.DetectorBackend(
            name="oracle", kind="oracle", config={"noise": noise, "seed": args.seed}
        )
    else:
        if not args.cmd:
            raise DetbenchError("command backend needs --cmd")
        backend = bench_mod.DetectorBackend(
            name="command",
            kind="command",
            config={"argv": shlex.split(args.cmd), "interchange": "dets-v1"},
        )

    result = bench_mod.run_bench(
        backend,
        index,
        image_ids,
        target_size=args.imgsz,
        warmup=args.warmup,
        repeats=args.repeats,
        confidence=args.conf,
        nms_iou=args.nms_iou,
        dataset_root=args.root,
    )
    payload = bench_mod.bench_result_to_json(result)
    Path(args.out).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    if args.dets:
        report.write_detections(args.dets, result.detections)
    b = result.breakdown
    print(
        f"wrote {args.out}: pre={b.preprocess_ms:.3f}ms inf={b.inference_ms:.3f}ms "
        f"post={b.postprocess_ms:.3f}ms total={b.total_ms:.3f}ms "
        f"over {b.n_images - b.n_warmup}x{result.repeats} measured images"
    )
    return 0


def _cmd_report(args) -> int:
    models_path = args.models or report.bundled_models_path()
    rows = report.load_model_rows(models_path)
    if args.imgsz is not None:
        rows = [r for r in rows if r.input_size == args.imgsz]
        if not rows:
            raise DetbenchError(f"no rows with input size {args.imgsz}")
    if args.scatter:
        text = report.scatter_data(rows, args.scatter[0], args.scatter[1])
    else:
        text = report.render_comparison_table(rows, format=args.format)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_config(args) -> int:
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise DetbenchError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        overrides[key.strip()] = value.strip()
    config = report.emit_training_config(args.out, overrides)
    print(f"wrote {args.out}: {config.optimizer} lr={config.initial_lr} epochs={config.epochs}")
    return 0


_HANDLERS = {
    "synth": _cmd_synth,
    "split": _cmd_split,
    "augment": _cmd_augment,
    "eval": _cmd_eval,
    "bench": _cmd_bench,
    "report": _cmd_report,
    "config": _cmd_config,
}


def cli_main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors
        return int(exc.code or 0)
    try:
        return _HANDLERS[args.command](args)
    except DetbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
