/**
 * Run one model over an image directory and emit dets-v1 plus timing.json,
 * with every box mapped back to original-image pixel space.
 */

import { promises as fs } from 'fs';
import path from 'path';
import { AdapterConfig } from './config.js';
import { Detection, writeDetections, writeTiming } from './dets.js';
import { RuntimeFailure } from './errors.js';
import { readImageDims } from './imageSize.js';
import { boxFromInputSpace, clampBox, letterbox, Box } from './letterbox.js';
import { invokeRunner, RunnerImage, RunnerResponse } from './runner.js';

const IMAGE_EXTENSIONS = new Set(['.png', '.jpg', '.jpeg', '.bmp']);

export async function listImages(imagesDir: string): Promise<RunnerImage[]> {
  let entries: string[];
  try {
    entries = await fs.readdir(imagesDir);
  } catch (err) {
    throw new RuntimeFailure(`cannot list ${imagesDir}: ${String(err)}`);
  }
  const files = entries
    .filter((name) => IMAGE_EXTENSIONS.has(path.extname(name).toLowerCase()))
    .sort();
  if (files.length === 0) {
    throw new RuntimeFailure(`no images in ${imagesDir}`);
  }
  const images: RunnerImage[] = [];
  for (const name of files) {
    const filePath = path.join(imagesDir, name);
    const dims = await readImageDims(filePath);
    images.push({
      stem: path.parse(name).name,
      path: filePath,
      width: dims.width,
      height: dims.height,
    });
  }
  return images;
}

/** Map raw runner boxes into original-space detections for one image. */
export function mapImageBoxes(
  response: RunnerResponse,
  boxes: Array<[number, number, number, number, number, number]>,
  image: RunnerImage,
  imgsz: number,
  confidence: number,
): Detection[] {
  const transform = letterbox(image.width, image.height, imgsz);
  const out: Detection[] = [];
  for (const raw of boxes) {
    const score = raw[4];
    if (score < confidence) continue;
    let box: Box = [raw[0], raw[1], raw[2], raw[3]];
    if (response.box_space === 'input') {
      box = boxFromInputSpace(box, transform);
    }
    out.push({
      image: image.stem,
      classId: raw[5],
      bbox: clampBox(box, image.width, image.height),
      score,
    });
  }
  return out;
}

export async function inferDirectory(
  config: AdapterConfig,
  runnerArgv: string[],
  imagesDir: string,
  outDets: string,
  outTiming: string,
): Promise<void> {
  const images = await listImages(imagesDir);
  const response = await invokeRunner(runnerArgv, {
    weights: config.modelPath,
    imgsz: config.imageSize,
    confidence: config.confidence,
    iou_threshold: config.iouThreshold,
    device: config.device,
    images,
  });

  const byStem = new Map(response.per_image.map((entry) => [entry.stem, entry]));
  const missing = images.filter((img) => !byStem.has(img.stem)).map((img) => img.stem);
  if (missing.length > 0 || byStem.size !== images.length) {
    throw new RuntimeFailure(
      `runner answered for the wrong images (missing: ${missing.join(', ') || 'none'})`,
    );
  }

  const detections: Detection[] = [];
  const perImageMs: number[] = [];
  for (const image of images) {
    const entry = byStem.get(image.stem)!;
    perImageMs.push(entry.ms);
    detections.push(
      ...mapImageBoxes(response, entry.boxes, image, config.imageSize, config.confidence),
    );
  }

  await writeDetections(outDets, detections);
  await writeTiming(outTiming, {
    per_image_ms: perImageMs,
    device: response.device,
    model: response.model,
    images: images.map((img) => img.stem),
  });
}
