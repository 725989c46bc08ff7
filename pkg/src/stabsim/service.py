"""JSON/HTTP session service for the interactive graph UI.

Sessions live in an LRU-capped in-memory store; requests for one
session are serialized by a per-session lock while distinct sessions
proceed concurrently. The service reuses the exact operation dispatch
table of the CLI, so protocol semantics cannot drift between the two
front ends.
"""

from __future__ import annotations

import threading
import uuid
from collections import OrderedDict
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse, PlainTextResponse
from pydantic import BaseModel

from . import optics
from .session import OpError, Session, dispatch, export_session, replay

MAX_SESSIONS = 128


class SessionStore:
    def __init__(self, cap: int = MAX_SESSIONS):
        self.cap = cap
        self._items: OrderedDict[str, tuple[Session, threading.Lock]] = OrderedDict()
        self._lock = threading.Lock()

    def create(self, seed: int) -> Session:
        with self._lock:
            sid = uuid.uuid4().hex[:12]
            session = Session(id=sid, seed=seed)
            self._items[sid] = (session, threading.Lock())
            while len(self._items) > self.cap:
                self._items.popitem(last=False)
            return session

    def get(self, sid: str) -> tuple[Session, threading.Lock]:
        with self._lock:
            if sid not in self._items:
                raise KeyError(sid)
            self._items.move_to_end(sid)
            return self._items[sid]

    def replace(self, sid: str, session: Session) -> None:
        with self._lock:
            _, lock = self._items[sid]
            self._items[sid] = (session, lock)

    def discard(self, sid: str) -> None:
        with self._lock:
            del self._items[sid]


class NewSessionBody(BaseModel):
    seed: int = 0


class OpBody(BaseModel):
    op: str
    args: dict = {}


class ChoiceBody(BaseModel):
    choice: list[int] | None = None
    index: int | None = None


class KrausBody(BaseModel):
    builder: str | None = None
    circuit: str | None = None


_BUILDERS = {
    "type1": optics.build_type1,
    "type1_x": optics.build_type1_x,
    "type1_cz": optics.build_type1_cz,
    "type1_xx": optics.build_type1_xx,
    "type2": optics.build_type2,
    "type2_flip": optics.build_type2_flip,
    "ghz3": lambda: optics.build_ghz_fusion(3),
    "ghz4": lambda: optics.build_ghz_fusion(4),
}


def create_app(store: SessionStore | None = None) -> FastAPI:
    app = FastAPI(title="stabsim session service")
    store = store or SessionStore()

    def _get(sid: str):
        try:
            return store.get(sid)
        except KeyError:
            raise HTTPException(404, f"unknown session {sid!r}") from None

    @app.post("/api/session")
    def new_session(body: NewSessionBody | None = None):
        seed = body.seed if body else 0
        session = store.create(seed)
        return {"id": session.id, "snapshot": session.snapshot()}

    @app.get("/api/session/{sid}")
    def get_session(sid: str):
        session, lock = _get(sid)
        with lock:
            return session.snapshot()

    @app.post("/api/session/{sid}/op")
    def run_op(sid: str, body: OpBody):
        session, lock = _get(sid)
        with lock:
            if session.pending is not None and body.op != "choice":
                raise HTTPException(409, "a choice is pending; resolve it first")
            try:
                result = dispatch(session, body.op, body.args)
            except OpError as err:
                raise HTTPException(400, str(err)) from None
            status = result.get("status", "ok")
            return {
                "status": status,
                "result": result,
                "choices": result.get("choices"),
                "snapshot": session.snapshot(),
            }

    @app.post("/api/session/{sid}/choice")
    def run_choice(sid: str, body: ChoiceBody):
        session, lock = _get(sid)
        with lock:
            if session.pending is None:
                raise HTTPException(409, "no choice is pending")
            args = {}
            if body.choice is not None:
                args["choice"] = body.choice
            if body.index is not None:
                args["index"] = body.index
            try:
                result = dispatch(session, "choice", args)
            except OpError as err:
                raise HTTPException(400, str(err)) from None
            return {
                "status": result.get("status", "ok"),
                "result": result,
                "choices": result.get("choices"),
                "snapshot": session.snapshot(),
            }

    @app.post("/api/session/{sid}/clone")
    def clone(sid: str):
        """Speculative child session (replayed copy) for choice previews."""
        session, lock = _get(sid)
        with lock:
            child = store.create(session.seed)
            # replay re-runs the recorded ops, so a pending choice in the
            # parent re-materializes in the clone
            rebuilt = replay(session.seed, session.history, session_id=child.id)
            store.replace(child.id, rebuilt)
            return {"id": child.id, "snapshot": rebuilt.snapshot()}

    @app.delete("/api/session/{sid}")
    def discard(sid: str):
        try:
            store.discard(sid)
        except KeyError:
            raise HTTPException(404, f"unknown session {sid!r}") from None
        return {"status": "ok"}

    @app.post("/api/session/{sid}/undo")
    def undo(sid: str):
        session, lock = _get(sid)
        with lock:
            if not session.history:
                raise HTTPException(400, "nothing to undo")
            rebuilt = replay(session.seed, session.history[:-1], session_id=session.id)
            store.replace(sid, rebuilt)
            return {"status": "ok", "snapshot": rebuilt.snapshot()}

    @app.get("/api/session/{sid}/export")
    def export(sid: str, format: str = "json"):
        session, lock = _get(sid)
        with lock:
            try:
                return PlainTextResponse(export_session(session, format))
            except OpError as err:
                raise HTTPException(400, str(err)) from None

    @app.post("/api/lo/kraus")
    def lo_kraus(body: KrausBody):
        if body.builder:
            if body.builder not in _BUILDERS:
                raise HTTPException(400, f"unknown builder {body.builder!r}")
            circuit = _BUILDERS[body.builder]()
        elif body.circuit:
            try:
                circuit = optics.LOCircuit.from_json(body.circuit)
            except Exception as err:
                raise HTTPException(400, f"bad circuit JSON: {err}") from None
        else:
            raise HTTPException(400, "provide 'builder' or 'circuit'")
        return PlainTextResponse(
            optics.extract_kraus(circuit).report_json(), media_type="application/json"
        )

    ui_dir = Path(__file__).resolve().parent.parent.parent / "webui" / "dist"

    @app.get("/ui")
    def ui_index():
        index = ui_dir / "index.html"
        if not index.exists():
            raise HTTPException(404, "web UI not built")
        return FileResponse(index)

    @app.get("/ui/{path:path}")
    def ui_assets(path: str):
        target = (ui_dir / path).resolve()
        if not target.exists() or ui_dir.resolve() not in target.parents:
            raise HTTPException(404, "not found")
        return FileResponse(target)

    return app
