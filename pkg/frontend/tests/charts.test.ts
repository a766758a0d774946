import { describe, expect, it } from "vitest";

import type { FactorComponent } from "../src/api.js";
import {
  AXIS_COLORS,
  curvePoints,
  curveRange,
  drawCoefficientBar,
  drawComponentChart,
  zeroLineY,
  type ChartLayout,
  type Ctx2D,
} from "../src/charts.js";

const LAYOUT: ChartLayout = { width: 240, height: 120, pad: 6 };

/** Records every polyline so tests can check drawn geometry. */
class RecordingCtx implements Ctx2D {
  lineWidth = 1;
  strokeStyle: Ctx2D["strokeStyle"] = "#000";
  fillStyle: Ctx2D["fillStyle"] = "#000";
  globalAlpha = 1;
  polylines: Array<{ style: string; points: Array<[number, number]> }> = [];
  rects: Array<{ style: string; x: number; y: number; w: number; h: number }> = [];
  cleared = 0;
  private current: Array<[number, number]> = [];

  clearRect(): void {
    this.cleared += 1;
  }
  fillRect(x: number, y: number, w: number, h: number): void {
    this.rects.push({ style: String(this.fillStyle), x, y, w, h });
  }
  beginPath(): void {
    this.current = [];
  }
  moveTo(x: number, y: number): void {
    this.current.push([x, y]);
  }
  lineTo(x: number, y: number): void {
    this.current.push([x, y]);
  }
  stroke(): void {
    this.polylines.push({ style: String(this.strokeStyle), points: [...this.current] });
  }
}

describe("curveRange", () => {
  it("spans the min and max over all curves", () => {
    expect(curveRange([[0, 1], [-2, 0.5]])).toEqual({ min: -2, max: 1 });
  });

  it("widens a flat curve so the mapping stays finite", () => {
    const range = curveRange([[0.25, 0.25, 0.25]]);
    expect(range.min).toBeLessThan(0.25);
    expect(range.max).toBeGreaterThan(0.25);
  });
});

describe("curvePoints", () => {
  it("pins x to the fixed [0, G-1] axis across the padded width", () => {
    const points = curvePoints([0, 1, 2, 3, 4], { min: 0, max: 4 }, LAYOUT);
    expect(points).toHaveLength(5);
    expect(points[0][0]).toBe(LAYOUT.pad);
    expect(points[4][0]).toBe(LAYOUT.width - LAYOUT.pad);
    const gap = points[1][0] - points[0][0];
    for (let i = 1; i < points.length; i++) {
      expect(points[i][0] - points[i - 1][0]).toBeCloseTo(gap, 10);
    }
  });

  it("maps the y range so max is at the top pad and min at the bottom", () => {
    const points = curvePoints([-1, 3], { min: -1, max: 3 }, LAYOUT);
    expect(points[0][1]).toBe(LAYOUT.height - LAYOUT.pad);
    expect(points[1][1]).toBe(LAYOUT.pad);
  });

  it("is affine in the value", () => {
    const range = { min: 0, max: 1 };
    const [atZero] = curvePoints([0], range, LAYOUT);
    const [atHalf] = curvePoints([0.5], range, LAYOUT);
    const [atOne] = curvePoints([1], range, LAYOUT);
    expect(atHalf[1]).toBeCloseTo((atZero[1] + atOne[1]) / 2, 10);
  });
});

describe("zeroLineY", () => {
  it("returns the gridline position when zero is in range", () => {
    const y = zeroLineY({ min: -1, max: 1 }, LAYOUT);
    expect(y).toBeCloseTo(LAYOUT.height / 2, 10);
  });

  it("returns null when zero is out of range", () => {
    expect(zeroLineY({ min: 0.2, max: 1 }, LAYOUT)).toBeNull();
    expect(zeroLineY({ min: -2, max: -0.5 }, LAYOUT)).toBeNull();
  });
});

describe("drawComponentChart", () => {
  const component: FactorComponent = {
    index: 0,
    u: [0, 0.5, 1, 0.5, 0],
    v: [-1, -0.5, 0, 0.5, 1],
    w: [0.2, 0.2, 0.2, 0.2, 0.2],
    c: [0.9, 0.1, -0.2],
    magnitude: 1.5,
    scale: 1,
  };

  it("draws one length-G polyline per axis in the axis colors", () => {
    const ctx = new RecordingCtx();
    drawComponentChart(ctx, component, LAYOUT);
    const byStyle = new Map(ctx.polylines.map((line) => [line.style, line]));
    for (const axis of ["u", "v", "w"] as const) {
      const line = byStyle.get(AXIS_COLORS[axis]);
      expect(line, `missing ${axis} curve`).toBeDefined();
      expect(line!.points).toHaveLength(component[axis].length);
    }
  });

  it("draws curves that match the payload through the documented mapping", () => {
    const ctx = new RecordingCtx();
    drawComponentChart(ctx, component, LAYOUT);
    const range = curveRange([component.u, component.v, component.w]);
    const expected = curvePoints(component.v, range, LAYOUT);
    const drawn = ctx.polylines.find((line) => line.style === AXIS_COLORS.v);
    expect(drawn!.points).toEqual(expected);
  });

  it("includes the zero gridline when zero is in range", () => {
    const ctx = new RecordingCtx();
    drawComponentChart(ctx, component, LAYOUT);
    const zero = zeroLineY(curveRange([component.u, component.v, component.w]), LAYOUT)!;
    const gridline = ctx.polylines.find(
      (line) => line.points.length === 2 && line.points[0][1] === zero && line.points[1][1] === zero,
    );
    expect(gridline).toBeDefined();
  });

  it("handles a flat constant component without NaN geometry", () => {
    const flat: FactorComponent = { ...component, u: [0.3, 0.3], v: [0.3, 0.3], w: [0.3, 0.3] };
    const ctx = new RecordingCtx();
    drawComponentChart(ctx, flat, LAYOUT);
    for (const line of ctx.polylines) {
      for (const [x, y] of line.points) {
        expect(Number.isFinite(x)).toBe(true);
        expect(Number.isFinite(y)).toBe(true);
      }
    }
  });
});

describe("drawCoefficientBar", () => {
  it("draws one signed bar per channel, red-dominant for a red coefficient", () => {
    const ctx = new RecordingCtx();
    drawCoefficientBar(ctx, [0.8, 0.1, -0.1], { ...LAYOUT, width: 72 });
    expect(ctx.rects).toHaveLength(3);
    const [red, green, blue] = ctx.rects;
    expect(red.h).toBeGreaterThan(green.h);
    expect(red.h).toBeGreaterThan(Math.abs(blue.h));
    // Negative coefficient hangs below the midline.
    expect(blue.y).toBeCloseTo(LAYOUT.height / 2, 10);
  });
});
