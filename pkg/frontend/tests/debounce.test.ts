import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { debounce } from "../src/debounce.js";

describe("debounce", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("coalesces a burst into one trailing call with the last arguments", () => {
    const fn = vi.fn();
    const d = debounce(fn, 80);
    d(1);
    vi.advanceTimersByTime(40);
    d(2);
    vi.advanceTimersByTime(40);
    d(3);
    expect(fn).not.toHaveBeenCalled();
    vi.advanceTimersByTime(80);
    expect(fn).toHaveBeenCalledTimes(1);
    expect(fn).toHaveBeenCalledWith(3);
  });

  it("fires separate calls when spaced beyond the wait", () => {
    const fn = vi.fn();
    const d = debounce(fn, 80);
    d("a");
    vi.advanceTimersByTime(81);
    d("b");
    vi.advanceTimersByTime(81);
    expect(fn.mock.calls).toEqual([["a"], ["b"]]);
  });

  it("flush runs the pending call immediately and only once", () => {
    const fn = vi.fn();
    const d = debounce(fn, 80);
    d(7);
    d.flush();
    expect(fn).toHaveBeenCalledTimes(1);
    expect(fn).toHaveBeenCalledWith(7);
    vi.advanceTimersByTime(200);
    expect(fn).toHaveBeenCalledTimes(1);
  });

  it("flush without a pending call does nothing", () => {
    const fn = vi.fn();
    const d = debounce(fn, 80);
    d.flush();
    expect(fn).not.toHaveBeenCalled();
  });

  it("cancel drops the pending call", () => {
    const fn = vi.fn();
    const d = debounce(fn, 80);
    d(1);
    d.cancel();
    vi.advanceTimersByTime(200);
    expect(fn).not.toHaveBeenCalled();
  });

  it("reports pending only while a call is scheduled", () => {
    const d = debounce(() => undefined, 80);
    expect(d.pending).toBe(false);
    d();
    expect(d.pending).toBe(true);
    vi.advanceTimersByTime(80);
    expect(d.pending).toBe(false);
  });
});
