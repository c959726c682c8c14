#!/usr/bin/env node
/**
 * Detector adapter CLI.
 *
 * infer: honors the engine's backend contract
 *   (--images DIR --out DETS --timing TIMING --imgsz N) plus model flags.
 * train: launches an external trainer from an engine training-config file.
 *
 * Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
 */

import path from 'path';
import { fileURLToPath } from 'url';
import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';
import { parseAdapterConfig } from './config.js';
import { UsageError } from './errors.js';
import { inferDirectory } from './infer.js';
import { splitCommand } from './runner.js';
import { launchTraining } from './train.js';

const HERE = path.dirname(fileURLToPath(import.meta.url));

function defaultRunner(): string[] {
  return ['python3', path.resolve(HERE, '..', 'runners', 'ultralytics_runner.py')];
}

function defaultTrainer(): string[] {
  return ['python3', path.resolve(HERE, '..', 'runners', 'ultralytics_train.py')];
}

async function main(): Promise<number> {
  const parser = yargs(hideBin(process.argv))
    .scriptName('detbench-adapter')
    .strict()
    .exitProcess(false)
    .fail(false)
    .command(
      'infer',
      'run a model over a directory and emit dets-v1 + timing.json',
      (y) =>
        y
          .option('images', { type: 'string', demandOption: true })
          .option('out', { type: 'string', demandOption: true })
          .option('timing', { type: 'string', demandOption: true })
          .option('imgsz', { type: 'number', demandOption: true })
          .option('model', { type: 'string', demandOption: true, describe: 'weights path/identifier' })
          .option('runner', { type: 'string', describe: 'model-runner command (default: bundled ultralytics wrapper)' })
          .option('conf', { type: 'number', default: 0.001 })
          .option('iou', { type: 'number', default: 0.45 })
          .option('device', { type: 'string', default: 'cpu' }),
    )
    .command(
      'train',
      'launch an external trainer from a training-config file',
      (y) =>
        y
          .option('config', { type: 'string', demandOption: true })
          .option('root', { type: 'string', demandOption: true, describe: 'dataset root' })
          .option('split', { type: 'string', demandOption: true })
          .option('trainer', { type: 'string', describe: 'trainer command (default: bundled ultralytics wrapper)' })
          .option('run-dir', { type: 'string', default: 'runs/train' }),
    )
    .demandCommand(1, 'expected a subcommand: infer | train');

  const argv = await parser.parse();
  const command = argv._[0];

  if (command === 'infer') {
    const config = parseAdapterConfig({
      modelPath: argv.model,
      imageSize: argv.imgsz,
      confidence: argv.conf,
      iouThreshold: argv.iou,
      device: argv.device,
    });
    const runner = argv.runner ? splitCommand(argv.runner as string) : defaultRunner();
    await inferDirectory(
      config,
      runner,
      argv.images as string,
      argv.out as string,
      argv.timing as string,
    );
    console.log(`wrote ${argv.out} and ${argv.timing}`);
    return 0;
  }

  if (command === 'train') {
    const trainer = argv.trainer ? splitCommand(argv.trainer as string) : defaultTrainer();
    await launchTraining(
      argv.config as string,
      argv.root as string,
      argv.split as string,
      trainer,
      argv['run-dir'] as string,
    );
    console.log(`training finished; artifacts under ${argv['run-dir']}`);
    return 0;
  }

  throw new UsageError(`unknown subcommand ${String(command)}`);
}

main()
  .then((code) => process.exit(code))
  .catch((err) => {
    console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
    process.exit(err instanceof UsageError || err?.name === 'YError' ? 2 : 1);
  });
