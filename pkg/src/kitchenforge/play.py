"""Interactive play sessions: a human client versus the belief-tracking robot.

The session core (`PlaySession`) is transport-free and advances one tick at
a time: consume the most recent buffered key (stay if none), query the QMDP
robot, step the engine, log the tick, and emit wire messages. The FastAPI
layer (`create_app`) exposes it over a WebSocket carrying JSON messages
with a ``type`` field:

    client -> server:  create, start, key
    server -> client:  state, event, summary, error

``create`` names a bundled layout (``layout``), sends an inline grid
(``grid`` with ``/`` row separators), or reattaches to a paused session
(``session``). The first ``state`` carries the full grid; later ones are
deltas. Disconnecting pauses the session; its id can be reattached. Logs
use the engine's episode-log line format, so an offline replay reproduces
every broadcast state exactly and the final summary equals the metrics
module's recomputation.
"""

from __future__ import annotations

import asyncio
import itertools
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from . import engine as eng
from . import planning as pl
from .engine import Action, EpisodeLog, TimestepRecord
from .grid import KitchenGrid, POT, check_solvability, parse_grid, serialize_grid
from .metrics import fluency_bc, workload_bc

DEFAULT_TICK_MS = 200

_KEY_ACTIONS = {a.value: a for a in Action}


def _pose_dict(pose) -> dict:
    return {"pos": list(pose.position), "dir": pose.orientation}


def _pots_list(pots) -> list[dict]:
    return [
        {
            "tile": list(tile),
            "onions": pot.onion_count,
            "timer": pot.cook_timer,
            "ready": pot.ready,
        }
        for tile, pot in sorted(pots.items())
    ]


class PlaySession:
    """One game: engine state, robot controller, key buffer, and log."""

    def __init__(
        self,
        session_id: str,
        grid: KitchenGrid,
        seed: int,
        tick_ms: int = DEFAULT_TICK_MS,
        horizon: int = eng.HORIZON,
        joint_node_cap: int = 20000,
    ):
        report = check_solvability(grid)
        if not report.is_solvable:
            raise ValueError(f"layout is not solvable: {report.violations[0].message}")
        self.session_id = session_id
        self.grid = grid
        self.seed = seed
        self.tick_ms = tick_ms
        self.state = eng.init_state(grid, seed, horizon)
        self.log = EpisodeLog(grid, seed)
        table = pl.MotionPlanTable(grid)
        model = pl.QmdpModel(
            table, num_pots=len(grid.find_all(POT)), joint_node_cap=joint_node_cap
        )
        self.robot = pl.QmdpRobotController(model)
        self.started = False
        self.connected = True
        self._pending_key: str | None = None
        self._unstuck_mode = False
        self._prev_poses = list(self.state.poses)
        self._summary_sent = False

    # -- client input ------------------------------------------------------

    def buffer_key(self, key: str) -> None:
        """Last writer wins within a tick."""
        if key not in _KEY_ACTIONS:
            raise ValueError(f"unknown key {key!r}")
        self._pending_key = key

    def start(self) -> None:
        self.started = True

    @property
    def done(self) -> bool:
        return self.state.done

    # -- game loop ---------------------------------------------------------

    def tick(self) -> list[dict]:
        """Advance one tick; returns the messages to broadcast."""
        if not self.started or self.done:
            return []
        if self._unstuck_mode:
            actions = eng.auto_unstuck(self.state)
        else:
            key = self._pending_key or "stay"
            human = _KEY_ACTIONS[key]
            robot = self.robot.action(self.state)
            actions = (human, robot)
        self._pending_key = None

        self.state, events = eng.step(self.state, *actions)
        self.log.records.append(
            TimestepRecord(
                clock=self.state.clock,
                actions=[a.value for a in actions],
                poses=list(self.state.poses),
                held=[h.value for h in self.state.held],
                pots=dict(self.state.pots),
                events=events,
                unstuck=self._unstuck_mode,
            )
        )
        stuck_now = self.state.poses == self._prev_poses
        if self._unstuck_mode and not stuck_now:
            self._unstuck_mode = False
        elif not self._unstuck_mode and eng.detect_stuck(self.log.records):
            self._unstuck_mode = True
        self._prev_poses = list(self.state.poses)

        messages = [self.state_message()]
        for ev in events:
            messages.append(
                {
                    "type": "event",
                    "session": self.session_id,
                    "clock": ev.clock,
                    "agent": ev.agent,
                    "kind": ev.kind,
                    "tile": list(ev.tile),
                }
            )
        if self.robot.belief is not None:
            messages.append(
                {
                    "type": "event",
                    "session": self.session_id,
                    "clock": self.state.clock,
                    "agent": 1,
                    "kind": "belief",
                    "belief": {
                        f"{task.kind}@{task.tile[0]},{task.tile[1]}"
                        if task.tile is not None
                        else task.kind: prob
                        for task, prob in sorted(self.robot.belief.probs.items())
                    },
                }
            )
        if self.done and not self._summary_sent:
            self._summary_sent = True
            messages.append(self.summary_message())
        return messages

    # -- wire messages -----------------------------------------------------

    def state_message(self, full: bool = False) -> dict:
        msg = {
            "type": "state",
            "session": self.session_id,
            "clock": self.state.clock,
            "poses": [_pose_dict(p) for p in self.state.poses],
            "held": [h.value for h in self.state.held],
            "pots": _pots_list(self.state.pots),
            "orders_remaining": self.state.orders_remaining,
            "unstuck": self._unstuck_mode,
            "done": self.done,
        }
        if full:
            msg["full"] = True
            msg["grid"] = serialize_grid(self.grid).replace("\n", "/")
            msg["tick_ms"] = self.tick_ms
            msg["horizon"] = self.state.horizon
        return msg

    def summary_message(self) -> dict:
        w = workload_bc(self.log)
        f = fluency_bc(self.log)
        times = self.log.delivery_times()
        return {
            "type": "summary",
            "session": self.session_id,
            "orders_delivered": len(times),
            "delivery_times": times,
            "performance": eng.performance(times, len(times), self.state.horizon),
            "workload": list(w.as_tuple()),
            "fluency": [f.concurrent_motion_pct, f.stuck_timesteps],
        }

    def log_lines(self) -> list[str]:
        return self.log.to_lines()


def replay_states(log: EpisodeLog) -> list[dict]:
    """Re-run the engine over a log's recorded actions and return the state
    message per tick (sans session id) — the oracle for broadcast fidelity."""
    state = eng.init_state(log.grid, log.seed, horizon=max(eng.HORIZON, log.length))
    out = []
    for rec in log.records:
        actions = [_KEY_ACTIONS[a] for a in rec.actions]
        state, _ = eng.step(state, *actions)
        out.append(
            {
                "clock": state.clock,
                "poses": [_pose_dict(p) for p in state.poses],
                "held": [h.value for h in state.held],
                "pots": _pots_list(state.pots),
                "orders_remaining": state.orders_remaining,
            }
        )
    return out


class SessionRegistry:
    """The only shared structure: id -> session, guarded by one lock."""

    def __init__(self):
        self._sessions: dict[str, PlaySession] = {}
        self._lock = threading.Lock()
        self._ids = itertools.count(1)

    def create(self, grid: KitchenGrid, seed: int, tick_ms: int) -> PlaySession:
        with self._lock:
            sid = f"s{next(self._ids)}"
            session = PlaySession(sid, grid, seed, tick_ms)
            self._sessions[sid] = session
            return session

    def get(self, session_id: str) -> PlaySession | None:
        with self._lock:
            return self._sessions.get(session_id)


@dataclass
class _AppState:
    registry: SessionRegistry = field(default_factory=SessionRegistry)
    layout_dir: str | None = None
    default_tick_ms: int = DEFAULT_TICK_MS


def _load_layout(app_state: _AppState, message: dict) -> KitchenGrid:
    if "grid" in message:
        return parse_grid(str(message["grid"]).replace("/", "\n"))
    name = message.get("layout")
    if not name or "/" in name or name.startswith("."):
        raise ValueError("create needs an inline grid or a layout name")
    if app_state.layout_dir is None:
        raise ValueError("no layout directory configured")
    path = Path(app_state.layout_dir) / f"{name}.txt"
    if not path.exists():
        raise ValueError(f"unknown layout {name!r}")
    return parse_grid(path.read_text())


def create_app(
    layout_dir: str | None = None,
    default_tick_ms: int = DEFAULT_TICK_MS,
    static_dir: str | None = None,
):
    """Build the FastAPI application serving the play protocol on /ws.

    ``static_dir`` optionally serves a built browser client at ``/``.
    """
    app = FastAPI(title="kitchenforge play service")
    app_state = _AppState(layout_dir=layout_dir, default_tick_ms=default_tick_ms)
    app.state.play = app_state

    async def run_loop(ws: WebSocket, session: PlaySession):
        while session.connected and not session.done:
            await asyncio.sleep(session.tick_ms / 1000.0)
            if not session.started:
                continue
            for msg in session.tick():
                await ws.send_json(msg)

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        session: PlaySession | None = None
        loop_task = None
        try:
            while True:
                message = await ws.receive_json()
                kind = message.get("type")
                if kind == "create":
                    try:
                        if "session" in message:
                            session = app_state.registry.get(message["session"])
                            if session is None:
                                raise ValueError(f"unknown session {message['session']!r}")
                        else:
                            grid = _load_layout(app_state, message)
                            session = app_state.registry.create(
                                grid,
                                int(message.get("seed", 0)),
                                int(message.get("tick_ms", app_state.default_tick_ms)),
                            )
                    except Exception as exc:
                        await ws.send_json({"type": "error", "message": str(exc)})
                        continue
                    session.connected = True
                    await ws.send_json(session.state_message(full=True))
                    if session.started and loop_task is None:
                        loop_task = asyncio.create_task(run_loop(ws, session))
                elif session is None:
                    await ws.send_json({"type": "error", "message": "create a session first"})
                elif kind == "start":
                    session.start()
                    if loop_task is None or loop_task.done():
                        loop_task = asyncio.create_task(run_loop(ws, session))
                elif kind == "key":
                    try:
                        session.buffer_key(str(message.get("key")))
                    except ValueError as exc:
                        await ws.send_json({"type": "error", "message": str(exc)})
                else:
                    await ws.send_json(
                        {"type": "error", "message": f"unknown message type {kind!r}"}
                    )
        except WebSocketDisconnect:
            pass
        finally:
            if session is not None:
                session.connected = False  # pause; reattachable by id
            if loop_task is not None:
                loop_task.cancel()

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="client")

    return app
