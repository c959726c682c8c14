/**
 * Translate an engine training-config file into a trainer invocation.
 *
 * The trainer itself is external (one wrapper per model family); the
 * adapter only parses the key=value config, maps hyperparameters to flags,
 * and supervises the process.
 */

import { execFile } from 'child_process';
import { promises as fs } from 'fs';
import { promisify } from 'util';
import { RuntimeFailure, UsageError } from './errors.js';

const execFileAsync = promisify(execFile);

export interface TrainingConfig {
  optimizer: string;
  initialLr: number;
  momentum: number;
  weightDecay: number;
  epochs: number;
  batchSize: number;
  imageSize: number;
  pretrainedWeights: string;
}

const NUMERIC_KEYS = new Set([
  'initial_lr', 'momentum', 'weight_decay', 'epochs', 'batch_size', 'image_size',
]);
const ALL_KEYS = new Set([...NUMERIC_KEYS, 'optimizer', 'pretrained_weights']);

export function parseTrainingConfig(text: string): TrainingConfig {
  const values: Record<string, string> = {};
  text.split(/\r?\n/).forEach((rawLine, i) => {
    const line = rawLine.trim();
    if (!line || line.startsWith('#')) return;
    const eq = line.indexOf('=');
    if (eq < 1) {
      throw new UsageError(`config line ${i + 1}: expected key=value, got ${JSON.stringify(line)}`);
    }
    const key = line.slice(0, eq).trim();
    const value = line.slice(eq + 1).trim();
    if (!ALL_KEYS.has(key)) {
      throw new UsageError(`config line ${i + 1}: unknown key ${JSON.stringify(key)}`);
    }
    values[key] = value;
  });

  const need = (key: string): string => {
    const v = values[key];
    if (v === undefined) throw new UsageError(`config is missing ${key}`);
    return v;
  };
  const num = (key: string): number => {
    const v = Number(need(key));
    if (!Number.isFinite(v) || v <= 0) {
      throw new UsageError(`config ${key} must be a positive number, got ${values[key]}`);
    }
    return v;
  };

  return {
    optimizer: need('optimizer'),
    initialLr: num('initial_lr'),
    momentum: num('momentum'),
    weightDecay: num('weight_decay'),
    epochs: Math.trunc(num('epochs')),
    batchSize: Math.trunc(num('batch_size')),
    imageSize: Math.trunc(num('image_size')),
    pretrainedWeights: need('pretrained_weights'),
  };
}

export function trainerArgs(
  config: TrainingConfig,
  datasetRoot: string,
  splitFile: string,
  runDir: string,
): string[] {
  return [
    '--data', datasetRoot,
    '--split', splitFile,
    '--optimizer', config.optimizer,
    '--lr0', String(config.initialLr),
    '--momentum', String(config.momentum),
    '--weight-decay', String(config.weightDecay),
    '--epochs', String(config.epochs),
    '--batch', String(config.batchSize),
    '--imgsz', String(config.imageSize),
    '--weights', config.pretrainedWeights,
    '--run-dir', runDir,
  ];
}

export async function launchTraining(
  configPath: string,
  datasetRoot: string,
  splitFile: string,
  trainerArgv: string[],
  runDir: string,
): Promise<void> {
  let text: string;
  try {
    text = await fs.readFile(configPath, 'utf-8');
  } catch (err) {
    throw new UsageError(`cannot read training config ${configPath}: ${String(err)}`);
  }
  const config = parseTrainingConfig(text);
  await fs.mkdir(runDir, { recursive: true });
  const argv = [...trainerArgv, ...trainerArgs(config, datasetRoot, splitFile, runDir)];
  try {
    await execFileAsync(argv[0]!, argv.slice(1), { maxBuffer: 64 * 1024 * 1024 });
  } catch (err) {
    const e = err as NodeJS.ErrnoException & { stderr?: string };
    if (e.code === 'ENOENT') {
      throw new RuntimeFailure(
        `trainer not found: ${argv[0]}. Install the model framework first ` +
        `(for the bundled wrapper: pip install ultralytics) or point --trainer ` +
        `at your own wrapper.`,
      );
    }
    const stderr = e.stderr ? `\ntrainer stderr:\n${e.stderr.trimEnd()}` : '';
    throw new RuntimeFailure(`trainer failed (${e.message})${stderr}`);
  }
}
