/** Operator input control: slider value plus momentary burst buttons.
 * Emitted samples are always finite, inside the configured range, and
 * throttled to the configured rate with latest-wins coalescing. */

import { InputMessage, inputMessage } from "./protocol.js";

export interface InputControlOptions {
  min: number;
  max: number;
  ratePerSec?: number;
  now?: () => number;
  send: (msg: InputMessage) => void;
}

export class InputControl {
  readonly min: number;
  readonly max: number;
  private readonly minIntervalMs: number;
  private readonly now: () => number;
  private readonly send: (msg: InputMessage) => void;
  private lastSentAt = -Infinity;
  private pending: number | null = null;
  value = 0;

  constructor(opts: InputControlOptions) {
    if (!Number.isFinite(opts.min) || !Number.isFinite(opts.max) || opts.min >= opts.max) {
      throw new Error("input range must be finite with min < max");
    }
    this.min = opts.min;
    this.max = opts.max;
    this.minIntervalMs = 1000 / (opts.ratePerSec ?? 60);
    this.now = opts.now ?? (() => Date.now());
    this.send = opts.send;
  }

  /** Slider movement; non-finite values are ignored, the rest clamped to range. */
  setValue(v: number): void {
    if (!Number.isFinite(v)) return;
    this.value = Math.min(Math.max(v, this.min), this.max);
    this.queue(this.value);
  }

  /** Momentary step command relative to the current value. */
  burst(delta: number): void {
    if (!Number.isFinite(delta)) return;
    this.queue(Math.min(Math.max(this.value + delta, this.min), this.max));
  }

  /** Timer tick: flushes a coalesced trailing sample once the window opens. */
  tick(): void {
    if (this.pending !== null) this.queue(this.pending);
  }

  private queue(v: number): void {
    const t = this.now();
    if (t - this.lastSentAt >= this.minIntervalMs) {
      this.lastSentAt = t;
      this.pending = null;
      this.send(inputMessage(v, t));
    } else {
      this.pending = v;
    }
  }
}
