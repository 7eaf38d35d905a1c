/** The four console panels. All safety math arrives precomputed in frames;
 * these functions only draw what the server certifies. */

import { Draw2D, Rect, drawHLine, drawSeries, drawVLine, label, padRange,
         shadeSpan } from "./plot.js";
import { FrameView } from "./view.js";

export interface PanelStats {
  series: number;
  shadedSpans: number;
  placeholder: boolean;
}

const MARGIN = 28;

function plotRect(width: number, height: number): Rect {
  return { x: MARGIN, y: 10, w: width - MARGIN - 8, h: height - MARGIN - 10 };
}

const CLAMP_COLORS: Record<string, string> = {
  lower: "#e4572e",
  upper: "#4f9dde",
  "infeasible-resolved": "#c33cc3",
};

/** Temperature excess against position, melting line, interface marker. */
export function renderProfilePanel(ctx: Draw2D, width: number, height: number,
                                   view: FrameView): PanelStats {
  ctx.clearRect(0, 0, width, height);
  const rect = plotRect(width, height);
  const frame = view.latest;
  if (!frame || frame.theta.length === 0) {
    label(ctx, rect.x + rect.w * 0.25, rect.y + rect.h * 0.5, "waiting for profile...");
    return { series: 0, shadedSpans: 0, placeholder: true };
  }
  const xr = padRange([0, Math.max(frame.s, frame.s_r)]);
  const yr = padRange([...frame.theta, 0]);
  const pts = frame.x.map((x, i) => [x, frame.theta[i]] as [number, number]);
  drawSeries(ctx, rect, pts, xr, yr, "#ffb454", 2);
  drawHLine(ctx, rect, 0, yr, "#5c6773");           // melting line
  drawVLine(ctx, rect, frame.s, xr, "#ffb454");     // interface
  drawVLine(ctx, rect, frame.s_r, xr, "#7fd962");   // setpoint
  label(ctx, rect.x, height - 8, "excess temperature vs depth");
  return { series: 1, shadedSpans: 0, placeholder: false };
}

/** Interface position history against the setpoint. */
export function renderInterfacePanel(ctx: Draw2D, width: number, height: number,
                                     view: FrameView): PanelStats {
  ctx.clearRect(0, 0, width, height);
  const rect = plotRect(width, height);
  const s = view.sTrace.toArray();
  if (s.length < 2) {
    label(ctx, rect.x + rect.w * 0.25, rect.y + rect.h * 0.5, "waiting for frames...");
    return { series: 0, shadedSpans: 0, placeholder: true };
  }
  const sr = view.srTrace.toArray();
  const xr = padRange(s.map((p) => p[0]));
  const yr = padRange([...s.map((p) => p[1]), ...sr.map((p) => p[1])]);
  drawSeries(ctx, rect, s, xr, yr, "#ffb454", 2);
  drawSeries(ctx, rect, sr, xr, yr, "#7fd962", 1);
  label(ctx, rect.x, height - 8, "interface depth vs setpoint");
  return { series: 2, shadedSpans: 0, placeholder: false };
}

/** The three barrier traces with their zero line. */
export function renderBarrierPanel(ctx: Draw2D, width: number, height: number,
                                   view: FrameView): PanelStats {
  ctx.clearRect(0, 0, width, height);
  const rect = plotRect(width, height);
  const h1 = view.h1Trace.toArray();
  if (h1.length < 2) {
    label(ctx, rect.x + rect.w * 0.25, rect.y + rect.h * 0.5, "waiting for frames...");
    return { series: 0, shadedSpans: 0, placeholder: true };
  }
  const h2 = view.h2Trace.toArray();
  const h3 = view.h3Trace.toArray();
  const xr = padRange(h1.map((p) => p[0]));
  const all = [...h1, ...h2, ...h3].map((p) => p[1]);
  const yr = padRange([...all, 0]);
  drawSeries(ctx, rect, h1, xr, yr, "#7fd962", 1.5);
  drawSeries(ctx, rect, h2, xr, yr, "#4f9dde", 1.5);
  drawSeries(ctx, rect, h3, xr, yr, "#c9a7ff", 1.5);
  drawHLine(ctx, rect, 0, yr, "#e4572e");
  label(ctx, rect.x, height - 8, "barriers: deficit / flux / backstepping");
  return { series: 3, shadedSpans: 0, placeholder: false };
}

/** Command channel: operator input, both bounds, applied value, clamp shading. */
export function renderInputPanel(ctx: Draw2D, width: number, height: number,
                                 view: FrameView): PanelStats {
  ctx.clearRect(0, 0, width, height);
  const rect = plotRect(width, height);
  const uo = view.uoTrace.toArray();
  if (uo.length < 2) {
    label(ctx, rect.x + rect.w * 0.25, rect.y + rect.h * 0.5, "waiting for frames...");
    return { series: 0, shadedSpans: 0, placeholder: true };
  }
  const lower = view.uLowerTrace.toArray();
  const upper = view.uUpperTrace.toArray();
  const applied = view.uAppliedTrace.toArray();
  const xr = padRange(uo.map((p) => p[0]));
  const yr = padRange([...uo, ...lower, ...upper, ...applied].map((p) => p[1]));
  let spans = 0;
  for (const iv of view.clampIntervals) {
    if (iv.t1 < xr.min) continue;
    shadeSpan(ctx, rect, iv.t0, iv.t1, xr, CLAMP_COLORS[iv.kind] ?? "#888888");
    spans++;
  }
  drawSeries(ctx, rect, lower, xr, yr, "#e4572e", 1);
  drawSeries(ctx, rect, upper, xr, yr, "#4f9dde", 1);
  drawSeries(ctx, rect, uo, xr, yr, "#9aa5b1", 1);
  drawSeries(ctx, rect, applied, xr, yr, "#ffffff", 2);
  const clamp = view.latest?.clamp ?? "none";
  if (clamp !== "none") {
    ctx.fillStyle = CLAMP_COLORS[clamp] ?? "#888888";
    ctx.fillRect(width - 86, 6, 80, 16);
    label(ctx, width - 82, 18, `clamp: ${clamp}`, "#0b0e14");
  }
  label(ctx, rect.x, height - 8, "command vs safety bounds");
  return { series: 4, shadedSpans: spans, placeholder: false };
}

export interface PanelContexts {
  profile: Draw2D;
  interface: Draw2D;
  barriers: Draw2D;
  input: Draw2D;
}

export function renderAll(view: FrameView, ctxs: PanelContexts,
                          width: number, height: number): Record<string, PanelStats> {
  return {
    profile: renderProfilePanel(ctxs.profile, width, height, view),
    interface: renderInterfacePanel(ctxs.interface, width, height, view),
    barriers: renderBarrierPanel(ctxs.barriers, width, height, view),
    input: renderInputPanel(ctxs.input, width, height, view),
  };
}
