"""HTTP JSON API over sessions.

One writer per session: commands take the session lock and are applied in
arrival order. Reads serve the snapshot cached after the last tick, so a
long-running tick never blocks them.
"""

from __future__ import annotations

import threading
import time
import uuid

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles

from chi_walk.scenarios import builtin_scenario
from chi_walk.session import Session, SessionError
from chi_walk.world import scenario_from_dict


class SessionHandle:
    def __init__(self, session: Session):
        self.session = session
        self.lock = threading.Lock()
        self.snapshot = session.state_dict()
        self.event_signal = threading.Condition()

    def apply(self, command: dict) -> dict:
        with self.lock:
            delta = self.session.tick(command)
            self.snapshot = self.session.state_dict()
        with self.event_signal:
            self.event_signal.notify_all()
        return delta


class SessionStore:
    def __init__(self):
        self._handles: dict = {}
        self._lock = threading.Lock()

    def create(self, session: Session) -> str:
        sid = uuid.uuid4().hex[:12]
        with self._lock:
            self._handles[sid] = SessionHandle(session)
        return sid

    def get(self, sid: str) -> SessionHandle:
        handle = self._handles.get(sid)
        if handle is None:
            raise HTTPException(status_code=404, detail=f"no session {sid}")
        return handle

    def ids(self) -> list:
        return sorted(self._handles)


def create_app(store: SessionStore | None = None,
               static_dir: str | None = None) -> FastAPI:
    store = store or SessionStore()
    app = FastAPI(title="chi-walk session service")
    app.state.store = store
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])

    @app.post("/sessions")
    def create_session(body: dict):
        try:
            if "scenario" in body:
                scenario = scenario_from_dict(body["scenario"])
            else:
                name = body.get("builtin", "office17")
                scenario = builtin_scenario(name, seed=int(body.get("scenario_seed", 1)))
            seed = int(body.get("seed", 0))
            session = Session(scenario, seed=seed)
            if body.get("objectives"):
                session.tick({"type": "objectives",
                              "objectives": body["objectives"]})
        except (ValueError, SessionError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        sid = store.create(session)
        return {"id": sid}

    @app.get("/sessions")
    def list_sessions():
        return {"sessions": store.ids()}

    @app.get("/sessions/{sid}/state")
    def get_state(sid: str):
        return store.get(sid).snapshot

    @app.post("/sessions/{sid}/command")
    def post_command(sid: str, body: dict):
        handle = store.get(sid)
        try:
            delta = handle.apply(body)
        except SessionError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return {"delta": delta, "events": len(handle.session.events)}

    @app.get("/sessions/{sid}/suggestions")
    def get_suggestions(sid: str):
        return store.get(sid).snapshot["state"]["suggestions"]

    @app.get("/sessions/{sid}/events")
    def get_events(sid: str, since: int = 0, timeout: float = 0.0):
        handle = store.get(sid)
        deadline = time.monotonic() + min(timeout, 30.0)
        while True:
            events = handle.snapshot["events"]
            if len(events) > since or time.monotonic() >= deadline:
                return {"events": events[since:], "next": len(events)}
            with handle.event_signal:
                handle.event_signal.wait(timeout=0.1)

    if static_dir:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
