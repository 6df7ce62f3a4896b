/** RGBA raster canvas plus a dependency-free PNG encoder.
 *
 * The encoder writes IHDR/tEXt/IDAT/IEND with a fixed zlib level and no
 * timestamp chunk, so output bytes are a pure function of the drawing.
 */

import { deflateSync } from "node:zlib";
import { glyphStrokes, GLYPH_HEIGHT, GLYPH_WIDTH } from "./font.js";

export type Rgb = [number, number, number];

export function parseColor(hex: string): Rgb {
  const h = hex.replace("#", "");
  return [
    parseInt(h.slice(0, 2), 16),
    parseInt(h.slice(2, 4), 16),
    parseInt(h.slice(4, 6), 16),
  ];
}

export class Canvas {
  readonly width: number;
  readonly height: number;
  readonly data: Uint8Array;

  constructor(width: number, height: number) {
    this.width = width;
    this.height = height;
    this.data = new Uint8Array(width * height * 4).fill(255);
  }

  set(x: number, y: number, [r, g, b]: Rgb): void {
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) return;
    const i = (y * this.width + x) * 4;
    this.data[i] = r;
    this.data[i + 1] = g;
    this.data[i + 2] = b;
    this.data[i + 3] = 255;
  }

  fillRect(x: number, y: number, w: number, h: number, color: Rgb): void {
    for (let yy = y; yy < y + h; yy += 1) {
      for (let xx = x; xx < x + w; xx += 1) {
        this.set(xx, yy, color);
      }
    }
  }

  /** Bresenham line; dash pattern counts pixels, thickness adds neighbors. */
  line(
    x0: number,
    y0: number,
    x1: number,
    y1: number,
    color: Rgb,
    opts: { thickness?: number; dash?: [number, number] } = {},
  ): void {
    let ax = Math.round(x0);
    let ay = Math.round(y0);
    const bx = Math.round(x1);
    const by = Math.round(y1);
    const dx = Math.abs(bx - ax);
    const dy = -Math.abs(by - ay);
    const sx = ax < bx ? 1 : -1;
    const sy = ay < by ? 1 : -1;
    let err = dx + dy;
    let step = 0;
    const dash = opts.dash;
    const thick = opts.thickness ?? 1;
    for (;;) {
      const on = !dash || step % (dash[0] + dash[1]) < dash[0];
      if (on) {
        this.set(ax, ay, color);
        if (thick > 1) {
          this.set(ax + 1, ay, color);
          this.set(ax, ay + 1, color);
          if (thick > 2) {
            this.set(ax - 1, ay, color);
            this.set(ax, ay - 1, color);
          }
        }
      }
      if (ax === bx && ay === by) break;
      const e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        ax += sx;
      }
      if (e2 <= dx) {
        err += dx;
        ay += sy;
      }
      step += 1;
    }
  }

  polyline(points: [number, number][], color: Rgb, opts: Parameters<Canvas["line"]>[5] = {}): void {
    for (let i = 1; i < points.length; i += 1) {
      this.line(points[i - 1][0], points[i - 1][1], points[i][0], points[i][1], color, opts);
    }
  }

  marker(x: number, y: number, color: Rgb): void {
    this.fillRect(Math.round(x) - 2, Math.round(y) - 2, 5, 5, color);
  }

  /** Stroke-font text; scale 1 gives a 5x7 cell plus 1px advance gap. */
  text(x: number, y: number, value: string, color: Rgb, scale = 1): void {
    let cx = Math.round(x);
    const cy = Math.round(y);
    for (const ch of value) {
      for (const stroke of glyphStrokes(ch)) {
        for (let i = 0; i < stroke.length; i += 1) {
          const [gx, gy] = stroke[i];
          if (i > 0) {
            const [px, py] = stroke[i - 1];
            this.line(cx + px * scale, cy + py * scale, cx + gx * scale, cy + gy * scale, color);
          } else if (stroke.length === 1) {
            this.set(cx + gx * scale, cy + gy * scale, color);
          }
        }
      }
      cx += (GLYPH_WIDTH + 1) * scale;
    }
  }
}

export function textWidth(value: string, scale = 1): number {
  return value.length * (GLYPH_WIDTH + 1) * scale;
}

export function textHeight(scale = 1): number {
  return GLYPH_HEIGHT * scale;
}

// ---------------------------------------------------------------------------
// PNG encoding
// ---------------------------------------------------------------------------

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n += 1) {
    let c = n;
    for (let k = 0; k < 8; k += 1) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(buf: Uint8Array): number {
  let c = 0xffffffff;
  for (const byte of buf) {
    c = CRC_TABLE[(c ^ byte) & 0xff] ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

function chunk(type: string, body: Uint8Array): Buffer {
  const out = Buffer.alloc(12 + body.length);
  out.writeUInt32BE(body.length, 0);
  out.write(type, 4, "ascii");
  Buffer.from(body).copy(out, 8);
  const crcInput = out.subarray(4, 8 + body.length);
  out.writeUInt32BE(crc32(crcInput), 8 + body.length);
  return out;
}

/** Encode 8-bit RGBA with optional tEXt metadata pairs. */
export function encodePng(canvas: Canvas, textChunks: Record<string, string> = {}): Buffer {
  const { width, height, data } = canvas;
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(width, 0);
  ihdr.writeUInt32BE(height, 4);
  ihdr[8] = 8; // bit depth
  ihdr[9] = 6; // RGBA
  const raw = Buffer.alloc((width * 4 + 1) * height);
  for (let y = 0; y < height; y += 1) {
    raw[y * (width * 4 + 1)] = 0; // filter none
    Buffer.from(data.subarray(y * width * 4, (y + 1) * width * 4)).copy(
      raw,
      y * (width * 4 + 1) + 1,
    );
  }
  const pieces = [
    Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]),
    chunk("IHDR", ihdr),
  ];
  for (const [key, value] of Object.entries(textChunks)) {
    pieces.push(chunk("tEXt", Buffer.from(`${key}\0${value}`, "latin1")));
  }
  pieces.push(chunk("IDAT", deflateSync(raw, { level: 9 })));
  pieces.push(chunk("IEND", new Uint8Array(0)));
  return Buffer.concat(pieces);
}
