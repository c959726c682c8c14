/**
 * Model runner protocol: one runner executable per model family.
 *
 * The adapter writes a request JSON and invokes
 *   <runner argv...> --request <req.json> --response <resp.json>
 * The runner answers with per-image times and raw boxes, declaring whether
 * its boxes are in letterboxed input space ("input") or already in the
 * original image space ("original").
 */

import { execFile } from 'child_process';
import { promises as fs } from 'fs';
import os from 'os';
import path from 'path';
import { promisify } from 'util';
import { z } from 'zod';
import { RuntimeFailure } from './errors.js';

const execFileAsync = promisify(execFile);

export interface RunnerImage {
  stem: string;
  path: string;
  width: number;
  height: number;
}

export interface RunnerRequest {
  weights: string;
  imgsz: number;
  confidence: number;
  iou_threshold: number;
  device: string;
  images: RunnerImage[];
}

const RunnerBoxSchema = z.tuple([
  z.number(), z.number(), z.number(), z.number(),  // x1 y1 x2 y2
  z.number().min(0).max(1),                        // score
  z.number().int().nonnegative(),                  // class id
]);

const RunnerResponseSchema = z.object({
  model: z.string(),
  device: z.string(),
  box_space: z.enum(['input', 'original']),
  per_image: z.array(
    z.object({
      stem: z.string(),
      ms: z.number().nonnegative(),
      boxes: z.array(RunnerBoxSchema),
    }),
  ),
});

export type RunnerResponse = z.infer<typeof RunnerResponseSchema>;

/** Split a command string into argv, honoring single/double quotes. */
export function splitCommand(command: string): string[] {
  const out: string[] = [];
  const re = /"([^"]*)"|'([^']*)'|(\S+)/g;
  let match: RegExpExecArray | null;
  while ((match = re.exec(command)) !== null) {
    out.push(match[1] ?? match[2] ?? match[3]!);
  }
  return out;
}

export async function invokeRunner(
  runnerArgv: string[],
  request: RunnerRequest,
): Promise<RunnerResponse> {
  if (runnerArgv.length === 0) {
    throw new RuntimeFailure('empty runner command');
  }
  const workDir = await fs.mkdtemp(path.join(os.tmpdir(), 'adapter-run-'));
  try {
    const requestPath = path.join(workDir, 'request.json');
    const responsePath = path.join(workDir, 'response.json');
    await fs.writeFile(requestPath, JSON.stringify(request, null, 2));
    const argv = [...runnerArgv, '--request', requestPath, '--response', responsePath];
    try {
      await execFileAsync(argv[0]!, argv.slice(1), { maxBuffer: 64 * 1024 * 1024 });
    } catch (err) {
      const e = err as NodeJS.ErrnoException & { stderr?: string };
      const stderr = e.stderr ? `\nrunner stderr:\n${e.stderr.trimEnd()}` : '';
      throw new RuntimeFailure(`model runner failed (${e.message})${stderr}`);
    }
    let parsed: unknown;
    try {
      parsed = JSON.parse(await fs.readFile(responsePath, 'utf-8'));
    } catch (err) {
      throw new RuntimeFailure(`runner produced no usable response: ${String(err)}`);
    }
    const result = RunnerResponseSchema.safeParse(parsed);
    if (!result.success) {
      throw new RuntimeFailure(`bad runner response: ${result.error.issues[0]?.message}`);
    }
    return result.data;
  } finally {
    await fs.rm(workDir, { recursive: true, force: true });
  }
}
