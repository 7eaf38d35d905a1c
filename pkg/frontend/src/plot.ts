/** Minimal canvas line plots: series, guide lines, shaded spans, labels. */

export interface Draw2D {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
  strokeStyle: string;
  fillStyle: string;
  lineWidth: number;
  font: string;
  globalAlpha: number;
}

export interface Rect {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface Range {
  min: number;
  max: number;
}

export function padRange(values: number[], fallback: Range = { min: 0, max: 1 }): Range {
  if (!values.length) return fallback;
  let min = Infinity;
  let max = -Infinity;
  for (const v of values) {
    if (v < min) min = v;
    if (v > max) max = v;
  }
  if (!Number.isFinite(min) || !Number.isFinite(max)) return fallback;
  if (min === max) {
    const pad = Math.abs(min) * 0.1 + 1e-12;
    return { min: min - pad, max: max + pad };
  }
  const pad = (max - min) * 0.08;
  return { min: min - pad, max: max + pad };
}

export function xToPx(x: number, r: Range, rect: Rect): number {
  return rect.x + ((x - r.min) / (r.max - r.min)) * rect.w;
}

export function yToPx(y: number, r: Range, rect: Rect): number {
  return rect.y + rect.h - ((y - r.min) / (r.max - r.min)) * rect.h;
}

export function drawSeries(ctx: Draw2D, rect: Rect, pts: [number, number][],
                           xr: Range, yr: Range, color: string, width = 1.5): void {
  if (pts.length < 2) return;
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.beginPath();
  ctx.moveTo(xToPx(pts[0][0], xr, rect), yToPx(pts[0][1], yr, rect));
  for (let i = 1; i < pts.length; i++) {
    ctx.lineTo(xToPx(pts[i][0], xr, rect), yToPx(pts[i][1], yr, rect));
  }
  ctx.stroke();
}

export function drawHLine(ctx: Draw2D, rect: Rect, y: number, yr: Range,
                          color: string): void {
  if (y < yr.min || y > yr.max) return;
  ctx.strokeStyle = color;
  ctx.lineWidth = 1;
  ctx.beginPath();
  const py = yToPx(y, yr, rect);
  ctx.moveTo(rect.x, py);
  ctx.lineTo(rect.x + rect.w, py);
  ctx.stroke();
}

export function drawVLine(ctx: Draw2D, rect: Rect, x: number, xr: Range,
                          color: string): void {
  if (x < xr.min || x > xr.max) return;
  ctx.strokeStyle = color;
  ctx.lineWidth = 1;
  ctx.beginPath();
  const px = xToPx(x, xr, rect);
  ctx.moveTo(px, rect.y);
  ctx.lineTo(px, rect.y + rect.h);
  ctx.stroke();
}

export function shadeSpan(ctx: Draw2D, rect: Rect, x0: number, x1: number,
                          xr: Range, color: string, alpha = 0.25): void {
  const a = Math.max(x0, xr.min);
  const b = Math.min(x1, xr.max);
  if (b < a) return;
  const p0 = xToPx(a, xr, rect);
  const p1 = xToPx(b, xr, rect);
  ctx.globalAlpha = alpha;
  ctx.fillStyle = color;
  ctx.fillRect(p0, rect.y, Math.max(p1 - p0, 1), rect.h);
  ctx.globalAlpha = 1.0;
}

export function label(ctx: Draw2D, x: number, y: number, text: string,
                      color = "#9aa5b1"): void {
  ctx.fillStyle = color;
  ctx.font = "11px monospace";
  ctx.fillText(text, x, y);
}
