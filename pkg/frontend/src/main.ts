/** DOM bootstrap: wires the live socket, panels, and the input control. */

import { InputControl } from "./input.js";
import { connect } from "./net.js";
import { PanelContexts, renderAll } from "./panels.js";
import { Draw2D } from "./plot.js";
import { FrameView } from "./view.js";

const U_RANGE = 2e7;  // slider span [W/(m^2 s)]

function canvasCtx(id: string): Draw2D {
  const el = document.getElementById(id) as HTMLCanvasElement;
  return el.getContext("2d") as unknown as Draw2D;
}

function start(): void {
  const view = new FrameView();
  const banner = document.getElementById("banner") as HTMLElement;
  const readout = document.getElementById("readout") as HTMLElement;

  const conn = connect({
    url: `ws://${location.host}/`,
    onMessage: (msg) => {
      const m = msg as { type?: string; msg?: string; violations?: number };
      if (m.type === "frame") view.ingest(msg);
      else if (m.type === "error") banner.textContent = `service: ${m.msg}`;
      else if (m.type === "report") {
        banner.textContent = `run complete: ${m.violations} violations`;
      }
    },
    onStatus: (status) => {
      banner.textContent = status === "open" ? "" : `connection ${status}...`;
    },
  });

  const control = new InputControl({
    min: -U_RANGE,
    max: U_RANGE,
    send: (msg) => conn.send(msg),
  });

  const slider = document.getElementById("u-slider") as HTMLInputElement;
  slider.addEventListener("input", () => {
    control.setValue(Number(slider.value) * U_RANGE);
  });
  (document.getElementById("burst-heat") as HTMLElement).addEventListener(
    "click", () => control.burst(U_RANGE / 4));
  (document.getElementById("burst-cool") as HTMLElement).addEventListener(
    "click", () => control.burst(-U_RANGE / 4));
  for (const [id, type] of [["pause", "pause"], ["resume", "resume"],
                            ["reset", "reset"]] as const) {
    (document.getElementById(id) as HTMLElement).addEventListener(
      "click", () => conn.send({ type, v: 1 }));
  }
  const timescale = document.getElementById("timescale") as HTMLInputElement;
  timescale.addEventListener("change", () => {
    const r = Number(timescale.value);
    if (Number.isFinite(r) && r > 0) conn.send({ type: "set_timescale", r, v: 1 });
  });

  const ctxs: PanelContexts = {
    profile: canvasCtx("panel-profile"),
    interface: canvasCtx("panel-interface"),
    barriers: canvasCtx("panel-barriers"),
    input: canvasCtx("panel-input"),
  };

  function loop(): void {
    control.tick();
    renderAll(view, ctxs, 460, 240);
    const f = view.latest;
    if (f) {
      readout.textContent =
        `t=${f.t.toFixed(4)}s  s=${(f.s * 1e3).toFixed(4)}mm  ` +
        `qc=${f.qc.toExponential(2)}  violations=${f.violations}` +
        (f.paused ? "  [paused]" : "") + (f.finished ? "  [done]" : "");
    }
    requestAnimationFrame(loop);
  }
  requestAnimationFrame(loop);
}

window.addEventListener("DOMContentLoaded", start);
