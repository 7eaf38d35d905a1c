/** Wire protocol: newline-delimited JSON, schema version 1. */

export const PROTOCOL_VERSION = 1;

export type ClampState = "none" | "lower" | "upper" | "infeasible-resolved";

const CLAMP_STATES: ReadonlySet<string> = new Set([
  "none", "lower", "upper", "infeasible-resolved",
]);

export interface Frame {
  type: "frame";
  v: number;
  t: number;
  s: number;
  s_r: number;
  qc: number;
  theta: number[];
  x: number[];
  h1: number;
  h2: number;
  h3: number;
  h_min: number;
  u_o: number;
  u_lower: number;
  u_upper: number;
  u_applied: number;
  clamp: ClampState;
  violations: number;
  paused?: boolean;
  finished?: boolean;
  fault?: string;
}

export interface Report {
  type: "report";
  v: number;
  violations: number;
  [key: string]: unknown;
}

export interface ErrorMessage {
  type: "error";
  v: number;
  code: string;
  msg: string;
}

export type ServerMessage = Frame | Report | ErrorMessage;

const NUMERIC_FIELDS = [
  "t", "s", "s_r", "qc", "h1", "h2", "h3", "h_min",
  "u_o", "u_lower", "u_upper", "u_applied",
] as const;

function finiteArray(value: unknown): value is number[] {
  return Array.isArray(value) && value.every(
    (v) => typeof v === "number" && Number.isFinite(v));
}

/** Strict frame validation; malformed frames are dropped by the caller. */
export function decodeFrame(raw: unknown): Frame | null {
  if (typeof raw !== "object" || raw === null) return null;
  const msg = raw as Record<string, unknown>;
  if (msg.type !== "frame" || msg.v !== PROTOCOL_VERSION) return null;
  for (const field of NUMERIC_FIELDS) {
    const v = msg[field];
    if (typeof v !== "number" || !Number.isFinite(v)) return null;
  }
  if (!finiteArray(msg.theta) || !finiteArray(msg.x)) return null;
  if ((msg.theta as number[]).length !== (msg.x as number[]).length) return null;
  if (typeof msg.clamp !== "string" || !CLAMP_STATES.has(msg.clamp)) return null;
  if (typeof msg.violations !== "number" || !Number.isFinite(msg.violations)) return null;
  return msg as unknown as Frame;
}

export function decodeMessage(raw: unknown): ServerMessage | null {
  if (typeof raw !== "object" || raw === null) return null;
  const msg = raw as Record<string, unknown>;
  if (msg.type === "frame") return decodeFrame(raw);
  if (msg.type === "report" && typeof msg.violations === "number") {
    return msg as unknown as Report;
  }
  if (msg.type === "error" && typeof msg.msg === "string") {
    return msg as unknown as ErrorMessage;
  }
  return null;
}

export interface InputMessage {
  type: "input";
  u_o: number;
  ct: number;
  v: number;
}

export function inputMessage(u_o: number, clientTimeMs: number): InputMessage {
  return { type: "input", u_o, ct: clientTimeMs, v: PROTOCOL_VERSION };
}
