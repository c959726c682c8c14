/** dets-v1 and timing.json emission (the engine's interchange formats). */

import { promises as fs } from 'fs';

export const DETS_FORMAT = 'dets-v1';

export interface Detection {
  image: string;
  classId: number;
  bbox: [number, number, number, number];
  score: number;
}

export async function writeDetections(path: string, dets: Detection[]): Promise<void> {
  const lines = [JSON.stringify({ format: DETS_FORMAT })];
  for (const det of dets) {
    lines.push(
      JSON.stringify({
        image: det.image,
        class_id: det.classId,
        bbox: det.bbox,
        score: det.score,
      }),
    );
  }
  await fs.writeFile(path, lines.join('\n') + '\n');
}

export interface TimingFile {
  per_image_ms: number[];
  device: string;
  model: string;
  images: string[];
}

export async function writeTiming(path: string, timing: TimingFile): Promise<void> {
  await fs.writeFile(path, JSON.stringify(timing, null, 2) + '\n');
}
