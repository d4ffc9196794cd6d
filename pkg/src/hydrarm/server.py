"""Live HTTP/WebSocket service around one simulated arm.

A single stepping loop owns the plant state and runs at the 10 Hz frame
rate in wall-clock time, advancing the simulation by ten fixed dt steps
per tick, exactly like the headless scripted runner.  Handlers never touch
the state directly: commands go through a last-writer-wins slot that the
loop applies at the next tick, and frame broadcast uses per-client queues
of depth one so a slow consumer only drops frames.
"""

from __future__ import annotations

import asyncio
import contextlib
import re
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse

from .control import RegulatorConfig, regulate
from .data import write_runlog
from .geometry import ArmGeometry
from .nnet import Checkpoint
from .models import predict_ik
from .plant import (LOG_RATE, ArmState, PlantConfig, RunRow, initial_state,
                    observe, step)

FRAME_DT = 1.0 / LOG_RATE


class SimLoop:
    """Owns the arm state; one tick = one 10 Hz frame of 100 Hz substeps."""

    def __init__(self, cfg: PlantConfig, noise: bool = False,
                 geom: ArmGeometry | None = None):
        self.cfg = cfg
        self.geom = geom or ArmGeometry()
        self.noise_cfg = cfg if noise else replace(
            cfg, pressure_noise=0.0, marker_noise=0.0)
        self.rng = np.random.default_rng(cfg.seed)
        self.state: ArmState = initial_state(cfg)
        self.mode = "manual"
        self.valves = (0,) * 8
        self.targets: list[float] | None = None
        self.rc = RegulatorConfig()
        self.pending: dict | None = None
        self.frame: dict = {}
        self.recording: list[RunRow] | None = None
        self.subscribers: set[asyncio.Queue] = set()
        self.steps_per_tick = round(FRAME_DT / cfg.dt)
        self._make_frame()

    def submit(self, command: dict) -> None:
        """Queue a command; the latest submission wins at the next tick."""
        self.pending = command

    def tick(self) -> dict:
        """Apply pending commands, advance one frame, snapshot, broadcast."""
        if self.pending is not None:
            cmd, self.pending = self.pending, None
            if "valves" in cmd:
                self.mode = "manual"
                self.valves = tuple(cmd["valves"])
                self.targets = None
            elif "targets" in cmd:
                self.mode = "regulate"
                self.targets = [float(v) for v in cmd["targets"]]
        if self.mode == "regulate" and self.targets is not None:
            self.valves = regulate(self.targets, self.state.p, self.rc)
        frame = self._make_frame()
        if self.recording is not None:
            p, markers = self._observe()
            self.recording.append(RunRow(
                t=round(len(self.recording) / LOG_RATE, 6), p=p,
                u=self.valves, markers=markers,
                theta=self.state.theta.copy()))
        for _ in range(self.steps_per_tick):
            self.state = step(self.state, self.valves, self.cfg)
        self._broadcast(frame)
        return frame

    def _observe(self):
        return observe(self.state, self.noise_cfg, self.rng, self.geom)

    def _make_frame(self) -> dict:
        p, markers = self._observe()
        self.frame = {
            "t": round(self.state.t, 6),
            "p": [float(v) for v in p],
            "u": list(self.valves),
            "markers": [[m.x, m.y, m.phi] for m in markers],
            "theta": [float(v) for v in self.state.theta],
            "mode": self.mode,
        }
        return self.frame

    def _broadcast(self, frame: dict) -> None:
        for q in list(self.subscribers):
            if q.full():
                with contextlib.suppress(asyncio.QueueEmpty):
                    q.get_nowait()
            with contextlib.suppress(asyncio.QueueFull):
                q.put_nowait(frame)

    def start_recording(self) -> None:
        self.recording = []

    def stop_recording(self) -> list[RunRow]:
        rows, self.recording = self.recording or [], None
        return rows


def _sanitize(name: str) -> str:
    cleaned = re.sub(r"[^A-Za-z0-9._-]+", "_", name).strip("._")
    return cleaned or "run"


def create_app(cfg: PlantConfig | None = None,
               fk_ckpt: Checkpoint | None = None,
               ik_ckpt: Checkpoint | None = None,
               noise: bool = False,
               runs_dir: str = "runs") -> FastAPI:
    cfg = cfg or PlantConfig()
    loop = SimLoop(cfg, noise=noise)
    app = FastAPI(title="hydrarm")
    app.state.sim = loop

    async def _run_loop():
        next_tick = time.monotonic()
        while True:
            loop.tick()
            next_tick += FRAME_DT
            delay = next_tick - time.monotonic()
            if delay < -1.0:  # fell far behind (suspended process): resync
                next_tick = time.monotonic()
                delay = 0.0
            await asyncio.sleep(max(0.0, delay))

    @app.on_event("startup")
    async def _start():
        app.state.ticker = asyncio.create_task(_run_loop())

    @app.on_event("shutdown")
    async def _stop():
        app.state.ticker.cancel()
        with contextlib.suppress(asyncio.CancelledError):
            await app.state.ticker

    @app.get("/state")
    async def get_state():
        return loop.frame

    @app.post("/valves")
    async def post_valves(body: dict):
        u = body.get("u")
        if (not isinstance(u, list) or len(u) != 8
                or any(v not in (0, 1, True, False) for v in u)):
            raise HTTPException(400, "body must be {'u': [8 x 0/1]}")
        loop.submit({"valves": [int(v) for v in u]})
        return {"ok": True, "mode": "manual"}

    @app.post("/ik")
    async def post_ik(body: dict):
        if ik_ckpt is None:
            raise HTTPException(409, "no inverse model loaded")
        markers = body.get("markers")
        if (not isinstance(markers, list) or len(markers) != 10
                or any(not isinstance(m, list) or len(m) < 2 for m in markers)):
            raise HTTPException(400, "body must be {'markers': [[x, y] x 10]}")
        try:
            pressures = predict_ik(ik_ckpt, [(m[0], m[1]) for m in markers])
        except (ValueError, TypeError) as exc:
            raise HTTPException(400, str(exc))
        return {"pressures": [float(v) for v in pressures]}

    @app.post("/regulate")
    async def post_regulate(body: dict):
        targets = body.get("targets")
        if (not isinstance(targets, list) or len(targets) != 4
                or any(not isinstance(v, (int, float)) for v in targets)):
            raise HTTPException(400, "body must be {'targets': [4 x kPa]}")
        loop.submit({"targets": targets})
        return {"ok": True, "mode": "regulate"}

    @app.post("/record")
    async def post_record(body: dict):
        action = body.get("action")
        if action == "start":
            loop.start_recording()
            return {"ok": True, "recording": True}
        if action == "stop":
            rows = loop.stop_recording()
            name = _sanitize(str(body.get("name", "run")))
            path = Path(runs_dir) / f"{name}.jsonl"
            path.parent.mkdir(parents=True, exist_ok=True)
            write_runlog(rows, path)
            return {"ok": True, "recording": False,
                    "rows": len(rows), "path": str(path)}
        raise HTTPException(400, "action must be 'start' or 'stop'")

    @app.websocket("/stream")
    async def stream(ws: WebSocket):
        await ws.accept()
        q: asyncio.Queue = asyncio.Queue(maxsize=1)
        loop.subscribers.add(q)
        try:
            while True:
                frame = await q.get()
                await ws.send_json(frame)
        except WebSocketDisconnect:
            pass
        finally:
            loop.subscribers.discard(q)

    @app.exception_handler(404)
    async def not_found(request, exc):
        return JSONResponse({"detail": "unknown route"}, status_code=404)

    static_dir = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if static_dir.is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=static_dir, html=True),
                  name="console")
    return app
