#!/usr/bin/env python3
"""Record a frame fixture for the console tests.

Replays the filtered-sinusoid scenario through the live-session engine,
ingesting the operator signal at 1 ms cadence and capturing one protocol
frame per millisecond of simulation time. The resulting newline-delimited
JSON is exactly what the service would stream.
"""

import dataclasses
import json
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from meltsafe.config import load_config_file
from meltsafe.service import SessionEngine

REPO = pathlib.Path(__file__).resolve().parents[1]
OUT = REPO / "frontend" / "tests" / "fixtures" / "scenario_frames.ndjson"

if __name__ == "__main__":
    cfg = load_config_file(REPO / "configs" / "qp_sine.cfg")
    cfg = dataclasses.replace(cfg, horizon=0.3)
    engine = SessionEngine(cfg)
    signal = cfg.operator_signal
    frames = []
    while not engine.finished:
        engine.ingest(signal(engine.sim.state.t))
        engine.advance(2e-3)
        frame = engine.frame()
        # profile samples only feed plots; 6 digits keeps the fixture small
        frame["theta"] = [float(f"{v:.6g}") for v in frame["theta"]]
        frame["x"] = [float(f"{v:.6g}") for v in frame["x"]]
        frames.append(frame)
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with OUT.open("w") as f:
        for frame in frames:
            f.write(json.dumps(frame) + "\n")
    clamps = {fr["clamp"] for fr in frames}
    print(f"wrote {len(frames)} frames to {OUT} (clamp kinds seen: {sorted(clamps)})")
