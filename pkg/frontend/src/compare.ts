/** Before/after comparison: side-by-side panes or a draggable split wipe. */

import type { CompareMode } from "./state.js";

/** Pixel width of the original-image region for a wipe position in [0, 1].
 *
 * At position 0 the divider sits at the far left and only the enhanced
 * image is visible; at 1 only the original is.
 */
export function wipeSplit(width: number, position: number): { original: number; enhanced: number } {
  const clamped = Math.min(Math.max(position, 0), 1);
  const original = Math.round(clamped * width);
  return { original, enhanced: width - original };
}

export class CompareView {
  private before: HTMLImageElement | null = null;
  private after: HTMLImageElement | null = null;
  private mode: CompareMode = "split-wipe";
  private wipe = 0.5;

  constructor(private canvas: HTMLCanvasElement) {}

  setImages(before: HTMLImageElement | null, after: HTMLImageElement | null): void {
    this.before = before;
    this.after = after;
    this.draw();
  }

  setMode(mode: CompareMode): void {
    this.mode = mode;
    this.draw();
  }

  setWipe(position: number): void {
    this.wipe = Math.min(Math.max(position, 0), 1);
    this.draw();
  }

  getWipe(): number {
    return this.wipe;
  }

  draw(): void {
    let ctx: CanvasRenderingContext2D | null = null;
    try {
      ctx = this.canvas.getContext("2d");
    } catch {
      ctx = null;
    }
    if (ctx === null) return;
    const { width, height } = this.canvas;
    ctx.clearRect(0, 0, width, height);
    const before = this.before;
    const after = this.after;
    if (before === null || after === null || !before.complete || !after.complete) return;

    if (this.mode === "side-by-side") {
      const half = Math.floor(width / 2);
      ctx.drawImage(before, 0, 0, half, height);
      ctx.drawImage(after, half, 0, width - half, height);
      return;
    }

    // Split wipe: original left of the divider, enhanced to the right.
    const { original } = wipeSplit(width, this.wipe);
    ctx.drawImage(after, 0, 0, width, height);
    if (original > 0) {
      ctx.save();
      ctx.beginPath();
      ctx.rect(0, 0, original, height);
      ctx.clip();
      ctx.drawImage(before, 0, 0, width, height);
      ctx.restore();
    }
    ctx.fillStyle = "#fff";
    ctx.fillRect(original - 1, 0, 2, height);
  }
}
