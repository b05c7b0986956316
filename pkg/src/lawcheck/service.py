"""Interactive wizard service: human-answered questionnaire traversal.

Sessions hold only the answer history; frontier and status are recomputed
from the graph on every operation, so stored state can never diverge from
what a replay would produce. The service never calls a language model:
the interactive path stays deterministic and offline.

HTTP+JSON surface:
    POST /sessions                       -> {session_id, question, ...}
    POST /sessions/{id}/answers          -> {question | verdict, ...}
    POST /sessions/{id}/undo             -> previous payload
    GET  /sessions/{id}                  -> current payload
    GET  /graph/meta                     -> graph facts
Errors are JSON {code, message} with a matching HTTP status.
"""

from __future__ import annotations

import json
import logging
import secrets
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .engine import assess_aiact
from .graph import AnswerMap, DecisionGraph, TraversalError, traverse

logger = logging.getLogger(__name__)

STATUS_IN_PROGRESS = "in_progress"
STATUS_COMPLETE = "complete"


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


class CreateSessionBody(BaseModel):
    graph_version: str | None = None


class AnswerBody(BaseModel):
    question_id: str
    selected: list[int]


@dataclass
class WizardSession:
    session_id: str
    graph_version: str
    history: list[tuple[str, tuple[int, ...]]] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def answer_map(self) -> AnswerMap:
        return AnswerMap(entries={qid: sel for qid, sel in self.history})


class SessionStore:
    def __init__(self, snapshot_dir: str | Path | None = None):
        self._sessions: dict[str, WizardSession] = {}
        self._lock = threading.Lock()
        self.snapshot_dir = Path(snapshot_dir) if snapshot_dir else None
        if self.snapshot_dir is not None:
            self.snapshot_dir.mkdir(parents=True, exist_ok=True)

    def create(self, graph_version: str) -> WizardSession:
        session = WizardSession(session_id=secrets.token_hex(16), graph_version=graph_version)
        with self._lock:
            self._sessions[session.session_id] = session
        self.snapshot(session)
        return session

    def get(self, session_id: str) -> WizardSession:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise ApiError(404, "unknown_session", f"no session {session_id!r}")
        return session

    def snapshot(self, session: WizardSession) -> None:
        if self.snapshot_dir is None:
            return
        path = self.snapshot_dir / f"{session.session_id}.json"
        path.write_text(
            json.dumps(
                {
                    "session_id": session.session_id,
                    "graph_version": session.graph_version,
                    "history": [[qid, list(sel)] for qid, sel in session.history],
                },
                ensure_ascii=False,
            ),
            "utf-8",
        )


def _question_payload(graph: DecisionGraph, question_id: str) -> dict:
    node = graph.questions[question_id]
    return {
        "id": node.id,
        "text": node.text,
        "options": [{"index": e.index, "label": e.label} for e in node.options],
        "background": node.background,
        "nota_index": node.nota_index,
    }


def _state_payload(graph: DecisionGraph, session: WizardSession) -> dict:
    result = traverse(graph, session.answer_map())
    payload: dict = {
        "session_id": session.session_id,
        "graph_version": session.graph_version,
        "history_length": len(session.history),
        "answered": [
            {"question_id": qid, "selected": list(sel)} for qid, sel in session.history
        ],
    }
    if result.unanswered:
        payload["status"] = STATUS_IN_PROGRESS
        payload["question"] = _question_payload(graph, result.unanswered[0])
        payload["pending_questions"] = list(result.unanswered)
    else:
        payload["status"] = STATUS_COMPLETE
        payload["verdict"] = assess_aiact(result, graph).to_json()
    return payload


def create_app(
    graph: DecisionGraph,
    snapshot_dir: str | Path | None = None,
    cors_origins: list[str] | None = None,
) -> FastAPI:
    app = FastAPI(title="compliance wizard", version=graph.version)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins or ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = SessionStore(snapshot_dir)
    app.state.graph = graph
    app.state.store = store

    @app.exception_handler(ApiError)
    async def handle_api_error(_: Request, exc: ApiError) -> JSONResponse:
        return JSONResponse(
            status_code=exc.status, content={"code": exc.code, "message": exc.message}
        )

    @app.get("/graph/meta")
    def graph_meta() -> dict:
        return {
            "version": graph.version,
            "root": graph.root,
            "question_count": len(graph.questions),
            "leaf_count": len(graph.leaves),
            "nota_question_count": len(graph.nota_question_ids()),
        }

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody | None = None) -> dict:
        wanted = body.graph_version if body else None
        if wanted is not None and wanted != graph.version:
            raise ApiError(
                404, "unknown_version", f"graph version {wanted!r} is not served"
            )
        session = store.create(graph.version)
        return _state_payload(graph, session)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        session = store.get(session_id)
        with session.lock:
            return _state_payload(graph, session)

    @app.post("/sessions/{session_id}/answers")
    def submit_answer(session_id: str, body: AnswerBody) -> dict:
        session = store.get(session_id)
        with session.lock:
            result = traverse(graph, session.answer_map())
            if not result.unanswered:
                raise ApiError(409, "session_complete", "session already complete")
            if body.question_id not in result.unanswered:
                raise ApiError(
                    409,
                    "stale_question",
                    f"question {body.question_id!r} is not awaiting an answer",
                )
            if not body.selected:
                raise ApiError(
                    422, "invalid_selection", "select at least one option"
                )
            candidate = session.answer_map().entries | {
                body.question_id: tuple(dict.fromkeys(body.selected))
            }
            try:
                AnswerMap(entries=candidate).validate_against(graph)
            except TraversalError as exc:
                raise ApiError(422, "invalid_selection", str(exc)) from exc
            session.history.append(
                (body.question_id, tuple(dict.fromkeys(body.selected)))
            )
            store.snapshot(session)
            return _state_payload(graph, session)

    @app.post("/sessions/{session_id}/undo")
    def undo(session_id: str) -> dict:
        session = store.get(session_id)
        with session.lock:
            if not session.history:
                raise ApiError(409, "empty_history", "nothing to undo")
            session.history.pop()
            store.snapshot(session)
            return _state_payload(graph, session)

    return app
