import asyncio
import dataclasses
import json

import numpy as np
import pytest

from conftest import config_text
from meltsafe.config import load_config
from meltsafe.scenario import run_scenario
from meltsafe.service import OperatorService, SessionEngine, serve_forever
from test_config import NONDIM_QP

LIVE_NONDIM = NONDIM_QP.replace("operator.kind = sinusoid", "operator.kind = live") \
                       .replace("operator.amplitude = 0.5", "") \
                       .replace("operator.period = 0.05", "") \
                       .replace("run.horizon = 0.05", "run.horizon = 0.02")


def live_cfg(**overrides):
    cfg = load_config(LIVE_NONDIM, name="live-test")
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


class TestSessionEngine:
    def test_default_hold_is_zero(self):
        eng = SessionEngine(live_cfg())
        assert eng.held_uo == 0.0
        eng.advance(0.005)
        frame = eng.frame()
        assert frame["u_o"] == 0.0
        assert frame["violations"] == 0

    def test_rejects_non_finite(self):
        eng = SessionEngine(live_cfg())
        eng.ingest(1.5)
        for bad in (float("nan"), float("inf"), float("-inf"), "text", None):
            assert not eng.ingest(bad)
        assert eng.held_uo == 1.5

    def test_pause_slicing_does_not_change_trajectory(self):
        # identical ingest sequences indexed by simulation time give identical
        # trajectories no matter how the advance calls are sliced
        plan = [(0.004, 0.3), (0.008, -0.6), (0.012, 0.9)]

        def run(chunks):
            eng = SessionEngine(live_cfg())
            next_input = 0
            t = 0.0
            for chunk in chunks:
                target = t + chunk
                while next_input < len(plan) and plan[next_input][0] <= target + 1e-15:
                    eng.advance(plan[next_input][0] - t)
                    t = plan[next_input][0]
                    eng.ingest(plan[next_input][1])
                    next_input += 1
                eng.advance(target - t)
                t = target
            return eng.sim.state.s, eng.sim.qc, eng.sim.state.t

        a = run([0.02])
        b = run([0.001] * 20)
        c = run([0.0035, 0.0005, 0.006, 0.01])
        assert a == b == c

    def test_finishes_at_horizon(self):
        eng = SessionEngine(live_cfg())
        eng.advance(1.0)
        assert eng.finished
        assert eng.sim.state.t == pytest.approx(0.02, rel=1e-9)
        rep = eng.report()
        assert rep["violations"] == 0
        assert rep["type"] == "report"

    def test_replay_matches_batch(self):
        # a live session fed the batch operator signal at a 0.2 ms cadence
        # reproduces the batch trajectory closely, clamps included
        cfg_batch = load_config(NONDIM_QP.replace("run.horizon = 0.05",
                                                  "run.horizon = 0.02"))
        cfg_batch = dataclasses.replace(cfg_batch, decimate=1)
        records, report = run_scenario(cfg_batch)

        eng = SessionEngine(live_cfg())
        sig = cfg_batch.operator_signal
        cadence = 2e-4
        clamps = []
        t = 0.0
        while not eng.finished:
            eng.ingest(sig(eng.sim.state.t))
            eng.advance(cadence)
            t += cadence
        assert eng.sim.state.s == pytest.approx(records[-1].s, rel=1e-2)
        assert eng.sim.monitor.violations == []

    def test_frame_profile_is_decimated(self):
        cfg = load_config(config_text("live.cfg"), name="live")
        eng = SessionEngine(cfg)
        frame = eng.frame()
        assert len(frame["theta"]) <= 128
        assert len(frame["theta"]) == len(frame["x"])
        assert frame["x"][-1] == pytest.approx(frame["s"], rel=1e-12)
        assert frame["v"] == 1

    def test_solver_failure_faults_the_session(self, monkeypatch):
        eng = SessionEngine(live_cfg())

        def boom(*a, **kw):
            raise RuntimeError("synthetic solver failure")

        monkeypatch.setattr(eng.sim, "advance", boom)
        eng.advance(0.01)
        assert eng.faulted is not None
        assert "synthetic solver failure" in eng.frame()["fault"]
        assert eng.report()["fault"] is not None
        # a faulted session stops consuming time
        assert eng.advance(0.01) == 0


class TestOperatorService:
    def test_authority_is_exclusive(self):
        svc = OperatorService(live_cfg(), fps=100)
        a, _ = svc.register()
        b, _ = svc.register()
        assert svc.handle(a, {"type": "resume"}) is None
        err = svc.handle(b, {"type": "input", "u_o": 1.0})
        assert err["type"] == "error" and err["code"] == "read-only"
        svc.unregister(a)
        assert svc.handle(b, {"type": "input", "u_o": 1.0}) is None

    def test_reset_rebuilds_engine(self):
        svc = OperatorService(live_cfg(), fps=100)
        cid, _ = svc.register()
        svc.handle(cid, {"type": "resume"})
        svc.engine.advance(0.01)
        t_before = svc.engine.sim.state.t
        assert t_before > 0.0
        svc.handle(cid, {"type": "reset"})
        assert svc.engine.sim.state.t == 0.0

    def test_timescale_validation(self):
        svc = OperatorService(live_cfg(), fps=100)
        cid, _ = svc.register()
        assert svc.handle(cid, {"type": "set_timescale", "r": 2.0}) is None
        assert svc.engine.timescale == 2.0
        err = svc.handle(cid, {"type": "set_timescale", "r": -1.0})
        assert err["code"] == "bad-timescale"
        err = svc.handle(cid, {"type": "set_timescale", "r": "fast"})
        assert err["code"] == "bad-timescale"

    def test_unknown_type(self):
        svc = OperatorService(live_cfg(), fps=100)
        cid, _ = svc.register()
        assert svc.handle(cid, {"type": "warp"})["code"] == "bad-type"


async def _tcp_fuzz_session(port: int, seed: int) -> dict:
    reader, writer = await asyncio.open_connection("127.0.0.1", port)
    rng = np.random.default_rng(seed)

    async def send(obj):
        writer.write((json.dumps(obj) + "\n").encode())
        await writer.drain()

    await send({"type": "reset", "v": 1})
    await send({"type": "set_timescale", "r": 0.2, "v": 1})
    await send({"type": "resume", "v": 1})
    report = None
    while report is None:
        line = await asyncio.wait_for(reader.readline(), timeout=60)
        msg = json.loads(line)
        if msg["type"] == "frame":
            # frames always expose the saturation of the held sample
            med = sorted((msg["u_lower"], msg["u_o"], msg["u_upper"]))[1]
            assert msg["u_applied"] == pytest.approx(med, rel=1e-12, abs=1e-12)
            u = float(rng.choice([rng.uniform(-2, 2), rng.uniform(-1e9, 1e9)]))
            await send({"type": "input", "u_o": u, "ct": 0, "v": 1})
        elif msg["type"] == "report":
            report = msg
    writer.close()
    return report


@pytest.mark.parametrize("seed", [0, 1])
def test_live_tcp_fuzz_stays_safe(seed):
    async def main():
        cfg = live_cfg()
        ready = asyncio.Event()
        port = 8750 + seed * 2
        task = asyncio.create_task(serve_forever(cfg, port, fps=200, ready=ready))
        await asyncio.wait_for(ready.wait(), timeout=10)
        try:
            report = await _tcp_fuzz_session(port + 1, seed)
        finally:
            task.cancel()
        assert report["violations"] == 0
        assert report["fault"] is None

    asyncio.run(main())
