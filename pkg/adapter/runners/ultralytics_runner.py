#!/usr/bin/env python3
"""Model-runner wrapper for ultralytics-style YOLO weights.

Protocol: invoked with --request/--response JSON paths; answers with
per-image inference milliseconds and raw boxes. This family reports boxes
already mapped to the original image space (box_space = "original").
"""

import argparse
import json
import sys


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--request", required=True)
    parser.add_argument("--response", required=True)
    args = parser.parse_args()

    with open(args.request, encoding="utf-8") as fh:
        request = json.load(fh)

    try:
        from ultralytics import YOLO
    except ImportError:
        sys.stderr.write(
            "ultralytics is not installed; run `pip install ultralytics` "
            "or point the adapter at a different --runner\n"
        )
        return 1

    model = YOLO(request["weights"])
    per_image = []
    for image in request["images"]:
        results = model.predict(
            image["path"],
            imgsz=request["imgsz"],
            conf=request["confidence"],
            iou=request["iou_threshold"],
            device=request["device"],
            verbose=False,
        )
        result = results[0]
        boxes = []
        for xyxy, score, cls in zip(
            result.boxes.xyxy.tolist(),
            result.boxes.conf.tolist(),
            result.boxes.cls.tolist(),
        ):
            boxes.append([*xyxy, float(score), int(cls)])
        per_image.append(
            {
                "stem": image["stem"],
                "ms": float(result.speed.get("inference", 0.0)),
                "boxes": boxes,
            }
        )

    response = {
        "model": str(request["weights"]),
        "device": str(request["device"]),
        "box_space": "original",
        "per_image": per_image,
    }
    with open(args.response, "w", encoding="utf-8") as fh:
        json.dump(response, fh)
    return 0


if __name__ == "__main__":
    sys.exit(main())
