/** Client-side state: decoded frames plus bounded history for the plots. */

import { ClampState, Frame, decodeFrame } from "./protocol.js";
import { RingBuffer } from "./ring.js";

export type Point = [number, number];

export interface ClampInterval {
  kind: Exclude<ClampState, "none">;
  t0: number;
  t1: number;
}

const MAX_INTERVALS = 512;

export class FrameView {
  latest: Frame | null = null;
  dropped = 0;

  readonly sTrace: RingBuffer<Point>;
  readonly srTrace: RingBuffer<Point>;
  readonly qcTrace: RingBuffer<Point>;
  readonly h1Trace: RingBuffer<Point>;
  readonly h2Trace: RingBuffer<Point>;
  readonly h3Trace: RingBuffer<Point>;
  readonly uoTrace: RingBuffer<Point>;
  readonly uLowerTrace: RingBuffer<Point>;
  readonly uUpperTrace: RingBuffer<Point>;
  readonly uAppliedTrace: RingBuffer<Point>;
  readonly clampIntervals: ClampInterval[] = [];

  private lastT: number | null = null;

  constructor(capacity = 2000) {
    this.sTrace = new RingBuffer(capacity);
    this.srTrace = new RingBuffer(capacity);
    this.qcTrace = new RingBuffer(capacity);
    this.h1Trace = new RingBuffer(capacity);
    this.h2Trace = new RingBuffer(capacity);
    this.h3Trace = new RingBuffer(capacity);
    this.uoTrace = new RingBuffer(capacity);
    this.uLowerTrace = new RingBuffer(capacity);
    this.uUpperTrace = new RingBuffer(capacity);
    this.uAppliedTrace = new RingBuffer(capacity);
  }

  /** Decode and apply one raw message; counts and reports drops. */
  ingest(raw: unknown): boolean {
    const frame = decodeFrame(raw);
    if (frame === null) {
      this.dropped++;
      console.warn("dropped malformed frame", raw);
      return false;
    }
    this.update(frame);
    return true;
  }

  update(frame: Frame): void {
    this.latest = frame;
    const t = frame.t;
    this.sTrace.push([t, frame.s]);
    this.srTrace.push([t, frame.s_r]);
    this.qcTrace.push([t, frame.qc]);
    this.h1Trace.push([t, frame.h1]);
    this.h2Trace.push([t, frame.h2]);
    this.h3Trace.push([t, frame.h3]);
    this.uoTrace.push([t, frame.u_o]);
    this.uLowerTrace.push([t, frame.u_lower]);
    this.uUpperTrace.push([t, frame.u_upper]);
    this.uAppliedTrace.push([t, frame.u_applied]);
    this.trackClamp(frame.clamp, t);
    this.lastT = t;
  }

  private trackClamp(clamp: ClampState, t: number): void {
    if (clamp === "none") return;
    const prev = this.clampIntervals[this.clampIntervals.length - 1];
    if (prev && prev.kind === clamp && this.lastT !== null && prev.t1 >= this.lastT) {
      prev.t1 = t;
      return;
    }
    const t0 = this.lastT !== null && this.lastT < t ? this.lastT : t;
    this.clampIntervals.push({ kind: clamp, t0, t1: t });
    if (this.clampIntervals.length > MAX_INTERVALS) this.clampIntervals.shift();
  }

  intervalsOf(kind: ClampInterval["kind"]): ClampInterval[] {
    return this.clampIntervals.filter((iv) => iv.kind === kind);
  }
}
