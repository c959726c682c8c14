#!/usr/bin/env python3
"""Trainer wrapper for ultralytics-style YOLO models.

Receives hyperparameters as flags (emitted by the adapter from an engine
training-config file), materializes the YOLO data YAML from the engine's
dataset root + split CSV, and runs training.
"""

import argparse
import csv
import json
import sys
from pathlib import Path


def build_data_yaml(root: Path, split_csv: Path, out_dir: Path) -> Path:
    assignment = {}
    with split_csv.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)  # header
        for image_id, subset in reader:
            assignment.setdefault(subset, []).append(image_id)

    names = [
        line.strip()
        for line in (root / "classes.txt").read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    by_stem = {p.stem: p for p in (root / "images").rglob("*") if p.is_file()}

    out_dir.mkdir(parents=True, exist_ok=True)
    lists = {}
    for subset in ("train", "valid", "test"):
        list_path = out_dir / f"{subset}.txt"
        with list_path.open("w", encoding="utf-8") as fh:
            for image_id in sorted(assignment.get(subset, [])):
                fh.write(str(by_stem[image_id].resolve()) + "\n")
        lists[subset] = list_path

    yaml_path = out_dir / "data.yaml"
    with yaml_path.open("w", encoding="utf-8") as fh:
        fh.write(f"path: {root.resolve()}\n")
        fh.write(f"train: {lists['train'].resolve()}\n")
        fh.write(f"val: {lists['valid'].resolve()}\n")
        fh.write(f"test: {lists['test'].resolve()}\n")
        fh.write(f"names: {json.dumps(names)}\n")
    return yaml_path


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--data", required=True)
    parser.add_argument("--split", required=True)
    parser.add_argument("--optimizer", required=True)
    parser.add_argument("--lr0", type=float, required=True)
    parser.add_argument("--momentum", type=float, required=True)
    parser.add_argument("--weight-decay", type=float, required=True)
    parser.add_argument("--epochs", type=int, required=True)
    parser.add_argument("--batch", type=int, required=True)
    parser.add_argument("--imgsz", type=int, required=True)
    parser.add_argument("--weights", required=True)
    parser.add_argument("--run-dir", required=True)
    args = parser.parse_args()

    try:
        from ultralytics import YOLO
    except ImportError:
        sys.stderr.write(
            "ultralytics is not installed; run `pip install ultralytics` "
            "or point the adapter at a different --trainer\n"
        )
        return 1

    run_dir = Path(args.run_dir)
    data_yaml = build_data_yaml(Path(args.data), Path(args.split), run_dir)
    model = YOLO(args.weights)
    model.train(
        data=str(data_yaml),
        optimizer=args.optimizer.upper(),
        lr0=args.lr0,
        momentum=args.momentum,
        weight_decay=args.weight_decay,
        epochs=args.epochs,
        batch=args.batch,
        imgsz=args.imgsz,
        project=str(run_dir),
        name="run",
        exist_ok=True,
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
