/** LUT slice heatmap: a lattice plane rendered as an upscaled pixel grid. */

import type { SlicePayload } from "./api.js";

/** RGBA bytes for a slice plane, row-major, one pixel per lattice cell. */
export function slicePixels(rows: number[][][]) {
  const size = rows.length;
  const data = new Uint8ClampedArray(size * size * 4);
  for (let i = 0; i < size; i++) {
    for (let j = 0; j < size; j++) {
      const rgb = rows[i][j];
      const at = (i * size + j) * 4;
      data[at] = Math.round(rgb[0] * 255);
      data[at + 1] = Math.round(rgb[1] * 255);
      data[at + 2] = Math.round(rgb[2] * 255);
      data[at + 3] = 255;
    }
  }
  return data;
}

/** Paint a slice onto a canvas, nearest-neighbor upscaled to its size. */
export function paintSlice(canvas: HTMLCanvasElement, slice: SlicePayload): void {
  const g = slice.grid;
  let ctx: CanvasRenderingContext2D | null = null;
  try {
    ctx = canvas.getContext("2d");
  } catch {
    ctx = null;
  }
  if (ctx === null) return;

  const buffer = document.createElement("canvas");
  buffer.width = g;
  buffer.height = g;
  const bufferCtx = buffer.getContext("2d");
  if (bufferCtx === null) return;
  bufferCtx.putImageData(new ImageData(slicePixels(slice.rows), g, g), 0, 0);

  ctx.imageSmoothingEnabled = false;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.drawImage(buffer, 0, 0, canvas.width, canvas.height);
}
