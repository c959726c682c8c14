/**
 * Backend-contract acceptance: infer over synthetic images emits
 * schema-valid dets-v1 + timing.json, exits 0, and survives the engine's
 * own validators (spawned as subprocesses, the way production would).
 */

import { execFile } from 'child_process';
import { promises as fs } from 'fs';
import os from 'os';
import path from 'path';
import { fileURLToPath } from 'url';
import { promisify } from 'util';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';
import { readImageDims } from '../src/imageSize.js';

const run = promisify(execFile);
const HERE = path.dirname(fileURLToPath(import.meta.url));
const ADAPTER = path.resolve(HERE, '..');
const CLI = path.join(ADAPTER, 'dist', 'cli.js');
const STUB_RUNNER = path.join(ADAPTER, 'test', 'stub_runner.mjs');

let workDir: string;
let imagesDir: string;

async function exec(argv: string[], opts: object = {}) {
  try {
    const { stdout, stderr } = await run(argv[0]!, argv.slice(1), opts);
    return { code: 0, stdout, stderr };
  } catch (err) {
    const e = err as { code?: number; stdout?: string; stderr?: string };
    return { code: e.code ?? 1, stdout: e.stdout ?? '', stderr: e.stderr ?? '' };
  }
}

beforeAll(async () => {
  workDir = await fs.mkdtemp(path.join(os.tmpdir(), 'adapter-infer-'));
  const dataset = path.join(workDir, 'ds');
  const synth = await exec([
    'python3', '-m', 'detbench.cli', 'synth',
    '--out', dataset, '--n', '3', '--classes', '2', '--boxes', '1', '3', '--seed', '13',
  ]);
  expect(synth.code, synth.stderr).toBe(0);
  imagesDir = path.join(dataset, 'images');
}, 60_000);

afterAll(async () => {
  await fs.rm(workDir, { recursive: true, force: true });
});

describe('infer subcommand (3 synthetic images)', () => {
  it('emits schema-valid dets-v1 + timing.json and exits 0', async () => {
    const dets = path.join(workDir, 'dets.jsonl');
    const timing = path.join(workDir, 'timing.json');
    const result = await exec([
      'node', CLI, 'infer',
      '--images', imagesDir, '--out', dets, '--timing', timing, '--imgsz', '640',
      '--model', 'fake.pt', '--runner', `node ${STUB_RUNNER}`, '--conf', '0.2',
    ]);
    expect(result.code, result.stderr).toBe(0);

    // the engine's dets-v1 checker is the oracle for the output format
    const check = await exec([
      'python3', '-c',
      'import sys; from detbench.report import validate_detections_file; ' +
      'print(validate_detections_file(sys.argv[1]))',
      dets,
    ]);
    expect(check.code, check.stderr).toBe(0);
    expect(Number(check.stdout.trim())).toBe(6); // 2 boxes x 3 images

    const timingObj = JSON.parse(await fs.readFile(timing, 'utf-8'));
    expect(timingObj.per_image_ms).toHaveLength(3);
    expect(timingObj.images).toHaveLength(3);
    expect(new Set(timingObj.images).size).toBe(3);
    expect(timingObj.model).toBe('fake.pt');
    expect(typeof timingObj.device).toBe('string');
  }, 60_000);

  it('maps boxes back so re-letterboxing reproduces model space within 0.5 px', async () => {
    const dets = path.join(workDir, 'dets_rt.jsonl');
    const timing = path.join(workDir, 'timing_rt.json');
    const result = await exec([
      'node', CLI, 'infer',
      '--images', imagesDir, '--out', dets, '--timing', timing, '--imgsz', '1024',
      '--model', 'fake.pt', '--runner', `node ${STUB_RUNNER}`,
    ]);
    expect(result.code, result.stderr).toBe(0);

    const names = (await fs.readdir(imagesDir)).filter((n) => n.endsWith('.png')).sort();
    const meta = [];
    for (const name of names) {
      const dims = await readImageDims(path.join(imagesDir, name));
      meta.push({ stem: path.parse(name).name, ...dims });
    }
    const metaPath = path.join(workDir, 'meta.json');
    await fs.writeFile(metaPath, JSON.stringify(meta));

    const check = await exec([
      'python3', path.join(ADAPTER, 'test', 'check_roundtrip.py'),
      dets, metaPath, '1024', '0.5',
    ]);
    expect(check.code, check.stderr).toBe(0);
  }, 60_000);

  it('filters detections below the confidence threshold', async () => {
    const dets = path.join(workDir, 'dets_conf.jsonl');
    const timing = path.join(workDir, 'timing_conf.json');
    const result = await exec([
      'node', CLI, 'infer',
      '--images', imagesDir, '--out', dets, '--timing', timing, '--imgsz', '640',
      '--model', 'fake.pt', '--runner', `node ${STUB_RUNNER}`, '--conf', '0.7',
    ]);
    expect(result.code, result.stderr).toBe(0);
    const lines = (await fs.readFile(dets, 'utf-8')).trim().split('\n');
    expect(lines).toHaveLength(1 + 3); // header + only the 0.9-score boxes
  }, 60_000);

  it('rejects an invalid confidence with a usage exit code', async () => {
    const result = await exec([
      'node', CLI, 'infer',
      '--images', imagesDir, '--out', 'x', '--timing', 'y', '--imgsz', '640',
      '--model', 'fake.pt', '--conf', '1.1',
    ]);
    expect(result.code).toBe(2);
    expect(result.stderr).toContain('confidence');
  });

  it('fails with a runtime exit code when the runner crashes', async () => {
    const result = await exec([
      'node', CLI, 'infer',
      '--images', imagesDir, '--out', 'x', '--timing', 'y', '--imgsz', '640',
      '--model', 'fake.pt', '--runner', 'node -e process.exit(7)',
    ]);
    expect(result.code).toBe(1);
  });

  it('works as a command backend of the engine bench harness', async () => {
    const dataset = path.join(workDir, 'ds');
    const timing = path.join(workDir, 'bench_timing.json');
    const dets = path.join(workDir, 'bench_dets.jsonl');
    const cmd = `node ${CLI} infer --model fake.pt --runner "node ${STUB_RUNNER}" --conf 0.2`;
    const result = await exec([
      'python3', '-m', 'detbench.cli', 'bench',
      '--root', dataset, '--backend', 'command', '--cmd', cmd,
      '--imgsz', '640', '--out', timing, '--dets', dets,
    ]);
    expect(result.code, result.stderr).toBe(0);
    const payload = JSON.parse(await fs.readFile(timing, 'utf-8'));
    expect(payload.breakdown.n_images).toBe(3);
    expect(payload.breakdown.total_ms).toBeGreaterThan(0);
  }, 60_000);
});
