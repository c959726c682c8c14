import { z } from 'zod';
import { UsageError } from './errors.js';

export const AdapterConfigSchema = z.object({
  modelPath: z.string().min(1, 'model path must not be empty'),
  imageSize: z.number().int().positive(),
  confidence: z.number().min(0).max(1),
  iouThreshold: z.number().min(0).max(1),
  device: z.string().min(1).default('cpu'),
});

export type AdapterConfig = z.infer<typeof AdapterConfigSchema>;

export function parseAdapterConfig(raw: unknown): AdapterConfig {
  const result = AdapterConfigSchema.safeParse(raw);
  if (!result.success) {
    const issues = result.error.issues
      .map((i) => `${i.path.join('.') || '(root)'}: ${i.message}`)
      .join('; ');
    throw new UsageError(`invalid adapter config: ${issues}`);
  }
  return result.data;
}
