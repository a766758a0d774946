/** Viewer state and the mutation queue that keeps it honest.
 *
 * The server is the single source of truth: `scales` only ever holds values
 * the server has acknowledged. Every mutation goes through one MutationQueue,
 * which runs requests strictly in submission order and drops responses that a
 * newer submission on the same channel has superseded.
 */

import type { SessionMeta } from "./api.js";

export type CompareMode = "side-by-side" | "split-wipe";
export type SliceAxis = "r" | "g" | "b";

export interface ViewerState {
  session: SessionMeta | null;
  /** Last server-acknowledged scales, length R. */
  scales: number[];
  sliceAxis: SliceAxis;
  sliceIndex: number;
  compareMode: CompareMode;
  fitRunning: boolean;
}

export function initialState(): ViewerState {
  return {
    session: null,
    scales: [],
    sliceAxis: "b",
    sliceIndex: 0,
    compareMode: "split-wipe",
    fitRunning: false,
  };
}

/** Clamp a slice index into the lattice range [0, G). */
export function clampSliceIndex(index: number, grid: number): number {
  if (!Number.isFinite(index)) return 0;
  return Math.min(Math.max(Math.round(index), 0), grid - 1);
}

/** Scales that solo one component: exactly one nonzero entry. */
export function soloScales(scales: number[], index: number): number[] {
  const out = scales.map(() => 0);
  out[index] = scales[index] !== 0 ? scales[index] : 1;
  return out;
}

export function scalesEqual(a: number[], b: number[]): boolean {
  return a.length === b.length && a.every((value, i) => value === b[i]);
}

/** Serializes server mutations; stale responses are discarded per channel.
 *
 * Each submission gets a ticket on its channel. When the request resolves,
 * its result is applied only if no newer submission exists on that channel,
 * so a burst of slider updates settles on the last value without the UI ever
 * flashing an intermediate acknowledgement out of order.
 */
export class MutationQueue {
  private tail: Promise<void> = Promise.resolve();
  private tickets = new Map<string, number>();
  private pendingCount = 0;

  get pending(): number {
    return this.pendingCount;
  }

  submit<T>(
    channel: string,
    run: () => Promise<T>,
    apply: (value: T) => void,
    onError: (err: unknown) => void = () => undefined,
  ): Promise<void> {
    const ticket = (this.tickets.get(channel) ?? 0) + 1;
    this.tickets.set(channel, ticket);
    this.pendingCount += 1;
    this.tail = this.tail.then(async () => {
      try {
        const value = await run();
        if (this.tickets.get(channel) === ticket) apply(value);
      } catch (err) {
        if (this.tickets.get(channel) === ticket) onError(err);
      } finally {
        this.pendingCount -= 1;
      }
    });
    return this.tail;
  }

  /** Resolves once everything submitted so far has settled. */
  idle(): Promise<void> {
    return this.tail;
  }
}
