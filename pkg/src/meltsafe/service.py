"""Real-time session engine and network service for live operator input.

One simulation loop owns all mutable session state; network handlers talk to
it only from the single event loop (commands in, frames out), so no two
writers ever race. Operator samples are zero-order held: the latest finite
sample applies from the next simulation step until replaced. Safety
monitoring runs every simulation step regardless of the frame rate.

Transports: WebSocket (primary, also serves the console's static assets on
the same port) and a raw TCP fallback speaking newline-delimited JSON on
port+1. Every message carries a schema version field "v": 1.
"""

import asyncio
import json
import math
import time
from http import HTTPStatus
from pathlib import Path

import numpy as np

from .config import ScenarioConfig
from .scenario import ClosedLoopSim
from .verification import SafetyTolerances

PROTOCOL_VERSION = 1
FRAME_POINTS = 128
INGEST_MIN_INTERVAL = 1e-3  # 1 kHz rate limit; faster samples coalesce
_STEP_EPS = 1e-12


class SessionEngine:
    """Deterministic core of a live session.

    Advancing is measured in simulation seconds and consumed in whole solver
    steps; the fractional remainder carries over, so the trajectory depends
    only on the ingest sequence indexed by simulation time, not on how the
    advance calls are sliced (pausing included).
    """

    def __init__(self, cfg: ScenarioConfig, tolerances: SafetyTolerances | None = None):
        self.cfg = cfg
        self.sim = ClosedLoopSim(cfg, tolerances)
        self.held_uo = 0.0
        self.paused = True
        self.timescale = cfg.timescale
        self.finished = False
        self.faulted: str | None = None
        self._pending = 0.0

    def ingest(self, u_o) -> bool:
        """Replace the held operator sample; rejects non-finite values."""
        try:
            value = float(u_o)
        except (TypeError, ValueError):
            return False
        if not math.isfinite(value):
            return False
        self.held_uo = value
        return True

    def advance(self, sim_seconds: float, max_steps: int = 50000) -> int:
        """Consume up to sim_seconds of simulation time in whole steps.

        Returns the number of steps taken. A backlog larger than max_steps
        is dropped to keep the loop responsive at extreme timescales.
        """
        if self.finished or self.faulted:
            return 0
        self._pending += sim_seconds
        steps = 0
        while steps < max_steps:
            dt = self.sim.step_dt()
            remaining = self.cfg.horizon - self.sim.state.t
            if remaining <= _STEP_EPS * max(1.0, self.cfg.horizon):
                self.finished = True
                break
            dt_eff = min(dt, remaining)
            if self._pending < dt_eff * (1.0 - 1e-9):
                break
            bundle = self.sim.bundle()
            decision = self.sim.decide(bundle, self.held_uo)
            self.sim.monitor_now(bundle)
            try:
                self.sim.advance(decision, dt_eff)
            except Exception as e:  # solver failure: session faults, final frame says why
                self.faulted = f"{type(e).__name__}: {e}"
                break
            self._pending -= dt_eff
            steps += 1
        if steps >= max_steps:
            self._pending = 0.0
        if self.cfg.horizon - self.sim.state.t <= _STEP_EPS * max(1.0, self.cfg.horizon):
            self.finished = True
        return steps

    def frame(self) -> dict:
        """Snapshot message; decision fields are evaluated at the current state."""
        sim = self.sim
        bundle = sim.bundle()
        decision = sim.decide(bundle, self.held_uo)
        if sim.two_phase:
            theta = sim.state.theta_l
        else:
            theta = sim.state.theta
        n = theta.size - 1
        stride = max(1, -(-theta.size // FRAME_POINTS))
        idx = np.arange(0, theta.size, stride)
        if idx[-1] != n:
            idx = np.append(idx, n)
        x = idx / n * sim.state.s
        msg = {
            "type": "frame",
            "v": PROTOCOL_VERSION,
            "t": float(sim.state.t),
            "s": float(sim.state.s),
            "s_r": float(self.cfg.spec.s_r),
            "qc": float(sim.qc),
            "theta": [float(v) for v in theta[idx]],
            "x": [float(v) for v in x],
            "h1": float(bundle.h1),
            "h2": float(bundle.h2),
            "h3": float(bundle.h3),
            "h_min": float(bundle.h_min),
            "u_o": float(self.held_uo),
            "u_lower": float(decision.u_lower),
            "u_upper": float(decision.u_upper),
            "u_applied": float(decision.u_applied),
            "clamp": decision.clamp,
            "violations": len(sim.monitor.violations),
            "paused": self.paused,
            "finished": self.finished,
        }
        if self.faulted:
            msg["fault"] = self.faulted
        return msg

    def report(self) -> dict:
        sim = self.sim
        total = max(1, sum(sim.clamp_counts.values()))
        kinds: dict[str, int] = {}
        for v in sim.monitor.violations:
            kinds[v.kind] = kinds.get(v.kind, 0) + 1
        return {
            "type": "report",
            "v": PROTOCOL_VERSION,
            "violations": len(sim.monitor.violations),
            "violation_kinds": kinds,
            "clamp_stats": {k: c / total for k, c in sim.clamp_counts.items()},
            "t": float(sim.state.t),
            "s": float(sim.state.s),
            "qc": float(sim.qc),
            "steps": sim.steps_taken,
            "fault": self.faulted,
        }


def _error(code: str, msg: str) -> dict:
    return {"type": "error", "v": PROTOCOL_VERSION, "code": code, "msg": msg}


class OperatorService:
    """Network front end: session lifecycle, authority, broadcast."""

    def __init__(self, cfg: ScenarioConfig, fps: float | None = None,
                 timescale: float | None = None,
                 static_root: Path | None = None):
        self.cfg = cfg
        self.fps = fps if fps is not None else cfg.frame_rate
        self.engine = SessionEngine(cfg)
        if timescale is not None:
            self.engine.timescale = timescale
        self.clients: dict[int, asyncio.Queue] = {}
        self.controller_id: int | None = None
        self._next_id = 0
        self._last_ingest = 0.0
        self._report_sent = False
        self.static_root = static_root

    # -- client bookkeeping -------------------------------------------------

    def register(self) -> tuple[int, asyncio.Queue]:
        cid = self._next_id
        self._next_id += 1
        q: asyncio.Queue = asyncio.Queue(maxsize=64)
        self.clients[cid] = q
        self._offer(q, self.engine.frame())
        return cid, q

    def unregister(self, cid: int):
        self.clients.pop(cid, None)
        if self.controller_id == cid:
            self.controller_id = None

    @staticmethod
    def _offer(q: asyncio.Queue, msg: dict):
        try:
            q.put_nowait(msg)
        except asyncio.QueueFull:
            # drop oldest frame; a live console only needs the latest
            try:
                q.get_nowait()
            except asyncio.QueueEmpty:
                pass
            try:
                q.put_nowait(msg)
            except asyncio.QueueFull:
                pass

    def broadcast(self, msg: dict):
        for q in self.clients.values():
            self._offer(q, msg)

    # -- command handling ----------------------------------------------------

    def _claims_authority(self, cid: int) -> bool:
        """First client to send a mutating command steers; others are read-only."""
        if self.controller_id is None:
            self.controller_id = cid
        return self.controller_id == cid

    def handle(self, cid: int, msg: dict) -> dict | None:
        mtype = msg.get("type")
        if mtype == "input":
            if not self._claims_authority(cid):
                return _error("read-only", "another client holds control authority")
            now = time.monotonic()
            if now - self._last_ingest < INGEST_MIN_INTERVAL:
                # coalesce to the latest sample, no error
                self.engine.ingest(msg.get("u_o"))
                return None
            self._last_ingest = now
            if not self.engine.ingest(msg.get("u_o")):
                return _error("bad-input", "operator sample must be a finite number")
            return None
        if mtype in ("pause", "resume", "reset", "set_timescale"):
            if not self._claims_authority(cid):
                return _error("read-only", "another client holds control authority")
        if mtype == "pause":
            self.engine.paused = True
            return None
        if mtype == "resume":
            self.engine.paused = False
            return None
        if mtype == "reset":
            timescale = self.engine.timescale
            self.engine = SessionEngine(self.cfg)
            self.engine.timescale = timescale
            self._report_sent = False
            self.broadcast(self.engine.frame())
            return None
        if mtype == "set_timescale":
            try:
                r = float(msg.get("r"))
            except (TypeError, ValueError):
                return _error("bad-timescale", "r must be a positive number")
            if not (math.isfinite(r) and r > 0.0):
                return _error("bad-timescale", "r must be a positive number")
            self.engine.timescale = r
            return None
        return _error("bad-type", f"unknown message type {mtype!r}")

    # -- simulation ticker ----------------------------------------------------

    async def run_loop(self):
        period = 1.0 / self.fps
        last = time.monotonic()
        while True:
            await asyncio.sleep(period)
            now = time.monotonic()
            wall_dt = now - last
            last = now
            if not self.engine.paused:
                self.engine.advance(wall_dt * self.engine.timescale)
            self.broadcast(self.engine.frame())
            if (self.engine.finished or self.engine.faulted) and not self._report_sent:
                self.broadcast(self.engine.report())
                self._report_sent = True

    # -- transports -----------------------------------------------------------

    async def _serve_client(self, cid: int, q: asyncio.Queue, send, recv_iter):
        async def writer():
            while True:
                msg = await q.get()
                await send(json.dumps(msg) + "\n")

        wtask = asyncio.create_task(writer())
        try:
            async for raw in recv_iter:
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    self._offer(q, _error("bad-json", "message is not valid JSON"))
                    continue
                reply = self.handle(cid, msg)
                if reply is not None:
                    self._offer(q, reply)
        finally:
            wtask.cancel()

    async def handle_websocket(self, connection):
        cid, q = self.register()
        try:
            await self._serve_client(cid, q, connection.send, connection)
        except Exception:
            pass
        finally:
            self.unregister(cid)

    async def handle_tcp(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        cid, q = self.register()

        async def send(text: str):
            writer.write(text.encode())
            await writer.drain()

        async def lines():
            while True:
                line = await reader.readline()
                if not line:
                    return
                yield line.decode().strip()

        try:
            await self._serve_client(cid, q, send, lines())
        except (ConnectionResetError, BrokenPipeError):
            pass
        finally:
            self.unregister(cid)
            writer.close()

    def process_static_request(self, connection, request):
        """Serve the console's static assets over plain HTTP on the WS port."""
        from websockets.datastructures import Headers
        from websockets.http11 import Response

        if "upgrade" in request.headers.get("Connection", "").lower():
            return None
        if self.static_root is None:
            return connection.respond(HTTPStatus.NOT_FOUND, "console assets not built\n")
        rel = request.path.lstrip("/") or "index.html"
        target = (self.static_root / rel).resolve()
        if not str(target).startswith(str(self.static_root.resolve())) or not target.is_file():
            return connection.respond(HTTPStatus.NOT_FOUND, "not found\n")
        body = target.read_bytes()
        ctype = {"html": "text/html; charset=utf-8", "js": "text/javascript",
                 "css": "text/css", "map": "application/json",
                 "json": "application/json"}.get(target.suffix.lstrip("."),
                                                 "application/octet-stream")
        headers = Headers()
        headers["Content-Type"] = ctype
        headers["Content-Length"] = str(len(body))
        return Response(HTTPStatus.OK, "OK", headers, body)


async def serve_forever(cfg: ScenarioConfig, port: int, timescale: float | None = None,
                        fps: float | None = None, host: str = "127.0.0.1",
                        static_root=None, tcp_port: int | None = None,
                        ready: asyncio.Event | None = None):
    """Run the service: WebSocket + static on `port`, TCP fallback on `port`+1."""
    from websockets.asyncio.server import serve as ws_serve

    service = OperatorService(cfg, fps=fps, timescale=timescale,
                              static_root=Path(static_root) if static_root else None)
    if tcp_port is None:
        tcp_port = port + 1
    tcp_server = await asyncio.start_server(service.handle_tcp, host, tcp_port)
    loop_task = asyncio.create_task(service.run_loop())
    try:
        async with ws_serve(service.handle_websocket, host, port,
                            process_request=service.process_static_request):
            if ready is not None:
                ready.set()
            await asyncio.Future()
    finally:
        loop_task.cancel()
        tcp_server.close()
        await tcp_server.wait_closed()
