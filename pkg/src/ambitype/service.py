"""Local HTTP adapter over typing sessions.

A thin JSON layer for the demo UI: every endpoint maps onto one library
call, so a transcript captured over HTTP equals the same calls made
directly against Session. Models are immutable and shared; each session
carries its own lock, so concurrent clients interleave safely while one
session's requests apply in arrival order.

Demo tool: binds localhost by default, no auth, sessions live in memory.
"""

from __future__ import annotations

import json
import threading
import uuid
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Dict, List, Optional
from urllib.parse import parse_qs, urlparse

from .engine import Candidate, EngineConfig, Session
from .errors import InputError
from .modelfile import ModelSet

MAX_BODY = 1 << 16


class _SessionEntry:
    def __init__(self, session: Session):
        self.session = session
        self.lock = threading.Lock()


class ServiceState:
    """Shared registry of loaded models and live sessions."""

    def __init__(self, models: Dict[str, ModelSet],
                 config: Optional[EngineConfig] = None):
        if not models:
            raise ValueError("need at least one model")
        self.models = dict(models)
        self.config = config or EngineConfig()
        self.sessions: Dict[str, _SessionEntry] = {}
        self.lock = threading.Lock()

    def create_session(self, language: str, mode: Optional[str]) -> str:
        model = self.models.get(language)
        if model is None:
            raise KeyError(f"no model loaded for language {language!r}")
        session = Session(model, config=self.config, mode=mode)
        sid = uuid.uuid4().hex
        with self.lock:
            self.sessions[sid] = _SessionEntry(session)
        return sid

    def entry(self, sid: str) -> Optional[_SessionEntry]:
        with self.lock:
            return self.sessions.get(sid)


def _candidate_json(c: Candidate) -> dict:
    return {"surface": c.surface, "score": c.score, "source": c.source}


def _compose_view(session: Session, candidates: List[Candidate]) -> dict:
    preview = candidates[0].surface if candidates else session.composing
    return {
        "composing": session.composing,
        "preview": preview,
        "candidates": [_candidate_json(c) for c in candidates],
    }


def make_handler(state: ServiceState):
    """Build the request handler class bound to one ServiceState."""

    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        # ------------------------------------------------------- plumbing

        def log_message(self, fmt, *args):
            pass  # tests and demo runs stay quiet

        def _reply(self, status: int, payload: dict):
            body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def _error(self, status: int, message: str):
            self._reply(status, {"error": message})

        def _json_body(self) -> Optional[dict]:
            try:
                length = int(self.headers.get("Content-Length") or 0)
            except ValueError:
                return None
            if length < 0 or length > MAX_BODY:
                return None
            raw = self.rfile.read(length) if length else b"{}"
            try:
                parsed = json.loads(raw.decode("utf-8") or "{}")
            except (UnicodeDecodeError, json.JSONDecodeError):
                return None
            return parsed if isinstance(parsed, dict) else None

        # --------------------------------------------------------- routes

        def do_OPTIONS(self):
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods",
                             "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Content-Length", "0")
            self.end_headers()

        def do_GET(self):
            url = urlparse(self.path)
            parts = [p for p in url.path.split("/") if p]
            if parts == ["v1", "health"]:
                self._reply(200, {"status": "ok",
                                  "languages": sorted(state.models)})
                return
            if len(parts) == 3 and parts[:2] == ["v1", "layout"]:
                model = state.models.get(parts[2])
                if model is None:
                    self._error(404, f"no model for language {parts[2]!r}")
                elif model.layout is None:
                    self._error(404, f"language {parts[2]!r} has no key layout")
                else:
                    self._reply(200, model.layout.raw)
                return
            if (len(parts) == 4 and parts[:2] == ["v1", "session"]
                    and parts[3] == "predict"):
                entry = state.entry(parts[2])
                if entry is None:
                    self._error(404, "unknown session")
                    return
                try:
                    k = int(parse_qs(url.query).get("k", ["3"])[0])
                except ValueError:
                    self._error(400, "k must be an integer")
                    return
                if k < 1:
                    self._error(400, "k must be >= 1")
                    return
                with entry.lock:
                    cands = entry.session.predict(k)
                self._reply(200,
                            {"candidates": [_candidate_json(c) for c in cands]})
                return
            self._error(404, "unknown route")

        def do_POST(self):
            parts = [p for p in urlparse(self.path).path.split("/") if p]
            body = self._json_body()
            if body is None:
                self._error(400, "body must be a JSON object")
                return
            if parts == ["v1", "session"]:
                self._create_session(body)
                return
            if len(parts) == 4 and parts[:2] == ["v1", "session"]:
                entry = state.entry(parts[2])
                if entry is None:
                    self._error(404, "unknown session")
                    return
                action = parts[3]
                if action == "key":
                    self._press_key(entry, body)
                elif action == "backspace":
                    self._backspace(entry)
                elif action == "commit":
                    self._commit(entry, body)
                else:
                    self._error(404, "unknown route")
                return
            self._error(404, "unknown route")

        # -------------------------------------------------------- actions

        def _create_session(self, body: dict):
            language = body.get("language")
            mode = body.get("mode")
            if not isinstance(language, str):
                self._error(400, "language must be a string")
                return
            if mode is not None and not isinstance(mode, str):
                self._error(400, "mode must be a string when given")
                return
            try:
                sid = state.create_session(language, mode)
            except (KeyError, InputError) as exc:
                self._error(400, str(exc))
                return
            self._reply(200, {"sessionId": sid})

        def _press_key(self, entry: _SessionEntry, body: dict):
            key = body.get("key")
            if not isinstance(key, str):
                self._error(400, "key must be a string")
                return
            with entry.lock:
                try:
                    cands = entry.session.press_key(key)
                except InputError as exc:
                    self._error(400, str(exc))
                    return
                self._reply(200, _compose_view(entry.session, cands))

        def _backspace(self, entry: _SessionEntry):
            with entry.lock:
                entry.session.backspace()
                cands = entry.session.current_candidates()
                self._reply(200, _compose_view(entry.session, cands))

        def _commit(self, entry: _SessionEntry, body: dict):
            surface = body.get("surface")
            if not isinstance(surface, str):
                self._error(400, "surface must be a string")
                return
            with entry.lock:
                try:
                    entry.session.commit(surface)
                except InputError as exc:
                    self._error(400, str(exc))
                    return
                self._reply(200, {"context": list(entry.session.context_tokens)})

    return Handler


def make_server(models: Dict[str, ModelSet], host: str = "127.0.0.1",
                port: int = 0,
                config: Optional[EngineConfig] = None) -> ThreadingHTTPServer:
    """Bind (not yet serving); port 0 picks a free one, handy for tests."""
    state = ServiceState(models, config)
    server = ThreadingHTTPServer((host, port), make_handler(state))
    server.state = state  # reachable from tests and the serve command
    return server
