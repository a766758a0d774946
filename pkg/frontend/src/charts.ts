/** Canvas factor-curve charts.
 *
 * Geometry is computed by pure functions so tests can check the mapping
 * without a real canvas: x spans lattice indices [0, G-1], y spans the
 * min..max of the plotted curves, with a gridline at zero when it is in
 * range.
 */

import type { FactorComponent } from "./api.js";

/** The slice of CanvasRenderingContext2D the charts actually use. */
export interface Ctx2D {
  lineWidth: number;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  globalAlpha: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
}

export interface ChartLayout {
  width: number;
  height: number;
  pad: number;
}

export interface CurveRange {
  min: number;
  max: number;
}

export const AXIS_COLORS = { u: "#d44", v: "#2a2", w: "#36d" } as const;

/** Shared y-range over a component's curves; a degenerate span is widened. */
export function curveRange(curves: number[][]): CurveRange {
  let min = Infinity;
  let max = -Infinity;
  for (const curve of curves) {
    for (const value of curve) {
      if (value < min) min = value;
      if (value > max) max = value;
    }
  }
  if (!Number.isFinite(min) || !Number.isFinite(max)) return { min: -1, max: 1 };
  if (max - min < 1e-12) {
    min -= 0.5;
    max += 0.5;
  }
  return { min, max };
}

function yFor(value: number, range: CurveRange, layout: ChartLayout): number {
  const inner = layout.height - 2 * layout.pad;
  return layout.pad + ((range.max - value) / (range.max - range.min)) * inner;
}

/** Map a length-G curve to canvas points on the fixed [0, G-1] x axis. */
export function curvePoints(
  values: number[],
  range: CurveRange,
  layout: ChartLayout,
): Array<[number, number]> {
  const inner = layout.width - 2 * layout.pad;
  const span = Math.max(values.length - 1, 1);
  return values.map((value, i) => [layout.pad + (i / span) * inner, yFor(value, range, layout)]);
}

/** Canvas y of the zero gridline, or null when zero is out of range. */
export function zeroLineY(range: CurveRange, layout: ChartLayout): number | null {
  if (range.min > 0 || range.max < 0) return null;
  return yFor(0, range, layout);
}

function strokePolyline(ctx: Ctx2D, points: Array<[number, number]>): void {
  ctx.beginPath();
  points.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
  ctx.stroke();
}

/** Draw one component's u/v/w curves plus the zero gridline. */
export function drawComponentChart(ctx: Ctx2D, component: FactorComponent, layout: ChartLayout): void {
  ctx.clearRect(0, 0, layout.width, layout.height);
  const range = curveRange([component.u, component.v, component.w]);

  const zero = zeroLineY(range, layout);
  if (zero !== null) {
    ctx.strokeStyle = "#bbb";
    ctx.lineWidth = 1;
    strokePolyline(ctx, [
      [layout.pad, zero],
      [layout.width - layout.pad, zero],
    ]);
  }

  ctx.lineWidth = 1.5;
  for (const axis of ["u", "v", "w"] as const) {
    ctx.strokeStyle = AXIS_COLORS[axis];
    strokePolyline(ctx, curvePoints(component[axis], range, layout));
  }
}

/** Signed bars for the color coefficient c, drawn around a midline. */
export function drawCoefficientBar(ctx: Ctx2D, c: number[], layout: ChartLayout): void {
  ctx.clearRect(0, 0, layout.width, layout.height);
  const mid = layout.height / 2;
  const limit = Math.max(1e-12, ...c.map((value) => Math.abs(value)));
  const barWidth = (layout.width - 2 * layout.pad) / (2 * c.length);
  const colors = ["#d44", "#2a2", "#36d"];

  ctx.strokeStyle = "#bbb";
  ctx.lineWidth = 1;
  strokePolyline(ctx, [
    [layout.pad, mid],
    [layout.width - layout.pad, mid],
  ]);

  c.forEach((value, i) => {
    const x = layout.pad + (2 * i + 0.5) * barWidth;
    const extent = (value / limit) * (mid - layout.pad);
    ctx.fillStyle = colors[i % colors.length];
    if (extent >= 0) ctx.fillRect(x, mid - extent, barWidth, extent);
    else ctx.fillRect(x, mid, barWidth, -extent);
  });
}
