/** Header-only image dimension sniffing (PNG and baseline/progressive JPEG). */

import { promises as fs } from 'fs';
import { RuntimeFailure } from './errors.js';

export interface ImageDims {
  width: number;
  height: number;
}

const PNG_SIGNATURE = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);

export function pngDims(buffer: Buffer): ImageDims | null {
  if (buffer.length < 24 || !buffer.subarray(0, 8).equals(PNG_SIGNATURE)) return null;
  // IHDR must be the first chunk: length(4) type(4) width(4) height(4)
  if (buffer.toString('latin1', 12, 16) !== 'IHDR') return null;
  return { width: buffer.readUInt32BE(16), height: buffer.readUInt32BE(20) };
}

export function jpegDims(buffer: Buffer): ImageDims | null {
  if (buffer.length < 4 || buffer[0] !== 0xff || buffer[1] !== 0xd8) return null;
  let offset = 2;
  while (offset + 9 < buffer.length) {
    if (buffer[offset] !== 0xff) {
      offset += 1;
      continue;
    }
    const marker = buffer[offset + 1]!;
    // SOF0..SOF15 except DHT(C4), JPG(C8), DAC(CC) carry frame dimensions.
    if (marker >= 0xc0 && marker <= 0xcf && ![0xc4, 0xc8, 0xcc].includes(marker)) {
      return {
        height: buffer.readUInt16BE(offset + 5),
        width: buffer.readUInt16BE(offset + 7),
      };
    }
    if (marker === 0xd8 || (marker >= 0xd0 && marker <= 0xd9)) {
      offset += 2;
      continue;
    }
    offset += 2 + buffer.readUInt16BE(offset + 2);
  }
  return null;
}

export async function readImageDims(path: string): Promise<ImageDims> {
  let buffer: Buffer;
  try {
    buffer = await fs.readFile(path);
  } catch (err) {
    throw new RuntimeFailure(`unreadable image ${path}: ${String(err)}`);
  }
  const dims = pngDims(buffer) ?? jpegDims(buffer);
  if (!dims || dims.width < 1 || dims.height < 1) {
    throw new RuntimeFailure(`cannot determine dimensions of ${path}`);
  }
  return dims;
}
