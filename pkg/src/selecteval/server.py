"""Annotation collection service: serves the browser UI and a small JSON
API, persisting judgments to an append-only journal that survives restarts.

Endpoints:
    GET  /api/task?annotator=ID  next unjudged task for this annotator
    POST /api/judgment           {task_id, candidate_id, annotator_id, score}
    GET  /api/progress           collection status
    GET  /                       static UI assets
"""

from __future__ import annotations

import json
import logging
import os
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .annotation import (
    ANNOTATORS_PER_CANDIDATE,
    SCORE_MAX,
    SCORE_MIN,
    Task,
    read_tasks,
)

log = logging.getLogger(__name__)

FALLBACK_PAGE = """<!doctype html>
<html><head><meta charset="utf-8"><title>annotation</title></head>
<body><p>No UI assets found. Build the frontend (see README) and restart with
--ui-dir pointing at its dist/ directory. The JSON API under /api/ is live.</p>
</body></html>
"""

DEFAULT_INSTRUCTIONS = (
    "Read the three-turn conversation, then rate the shown response. "
    "5 = clearly an appropriate response for this context, "
    "1 = cannot be considered appropriate at all. "
    "Give 0 only when the response is ungrammatical."
)


class AnnotationService:
    """Task assignment plus journaled judgment intake (transport-agnostic)."""

    def __init__(
        self,
        tasks: list[Task],
        journal_path: str | Path,
        required: int = ANNOTATORS_PER_CANDIDATE,
        instructions: str = DEFAULT_INSTRUCTIONS,
    ):
        self.tasks = tasks
        self.by_task_id = {t.task_id: t for t in tasks}
        self.journal_path = Path(journal_path)
        self.required = required
        self.instructions = instructions
        self._lock = threading.Lock()
        # candidate key is (question_id, candidate_id): judgments are per
        # question even if the same utterance appears in several pools.
        self._judged_by: dict[tuple[str, str], set[str]] = {}
        self._count: dict[tuple[str, str], int] = {}
        self._replay()

    def _key(self, task: Task) -> tuple[str, str]:
        return (task.question_id, task.candidate_id)

    def _replay(self) -> None:
        if not self.journal_path.exists():
            return
        replayed = 0
        with open(self.journal_path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError:
                    log.warning("journal: skipping corrupt line")
                    continue
                ok, error, _ = self._register(record)
                if ok:
                    replayed += 1
                else:
                    log.warning("journal: skipping record (%s)", error)
        log.info("journal replay: %d judgments", replayed)

    def _register(self, record: dict) -> tuple[bool, str | None, int]:
        """Validate a judgment against the task list and in-memory state.
        Returns (accepted, error message, http-ish status)."""
        try:
            task_id = str(record["task_id"])
            cid = str(record["candidate_id"])
            annotator = str(record["annotator_id"])
            score = record["score"]
        except (KeyError, TypeError):
            return False, "missing field (task_id, candidate_id, annotator_id, score)", 400
        if not annotator.strip():
            return False, "empty annotator_id", 400
        if not isinstance(score, int) or isinstance(score, bool):
            return False, "score must be an integer", 400
        if not SCORE_MIN <= score <= SCORE_MAX:
            return False, f"score {score} outside [{SCORE_MIN},{SCORE_MAX}]", 400
        task = self.by_task_id.get(task_id)
        if task is None:
            return False, f"unknown task_id {task_id}", 400
        if task.candidate_id != cid:
            return False, "candidate_id does not match task", 400
        key = self._key(task)
        judged = self._judged_by.setdefault(key, set())
        if annotator in judged:
            return False, "duplicate judgment for this candidate and annotator", 409
        judged.add(annotator)
        self._count[key] = self._count.get(key, 0) + 1
        return True, None, 201

    def next_task(self, annotator_id: str) -> Task | None:
        """First task (in file order) this annotator has not judged and that
        still needs judgments. Idempotent until the annotator submits."""
        with self._lock:
            for task in self.tasks:
                key = self._key(task)
                if self._count.get(key, 0) >= self.required:
                    continue
                if annotator_id in self._judged_by.get(key, set()):
                    continue
                return task
        return None

    def submit(self, record: dict) -> tuple[bool, str | None, int]:
        """Validate, persist (fsync), and account one judgment."""
        with self._lock:
            ok, error, status = self._register(record)
            if not ok:
                return ok, error, status
            line = json.dumps(
                {
                    "task_id": record["task_id"],
                    "candidate_id": record["candidate_id"],
                    "annotator_id": record["annotator_id"],
                    "score": record["score"],
                },
                ensure_ascii=False,
            )
            with open(self.journal_path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            return True, None, 201


    def progress(self) -> dict:
        with self._lock:
            total_needed = len(self.tasks) * self.required
            collected = sum(min(c, self.required) for c in self._count.values())
            candidates_done = sum(1 for c in self._count.values() if c >= self.required)
            return {
                "tasks": len(self.tasks),
                "judgments_per_candidate": self.required,
                "judgments_needed": total_needed,
                "judgments_collected": collected,
                "candidates_complete": candidates_done,
                "complete": collected >= total_needed,
            }


class _Handler(BaseHTTPRequestHandler):
    service: AnnotationService
    ui_dir: Path | None

    def log_message(self, fmt, *args):
        log.debug("http: " + fmt, *args)

    def _send_json(self, payload: dict, status: int = 200) -> None:
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Cache-Control", "no-store")
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        url = urlparse(self.path)
        if url.path == "/api/task":
            annotator = parse_qs(url.query).get("annotator", [""])[0].strip()
            if not annotator:
                self._send_json({"error": "annotator query parameter required"}, 400)
                return
            task = self.service.next_task(annotator)
            if task is None:
                self._send_json({"task": None, "instructions": self.service.instructions})
                return
            self._send_json(
                {
                    "task": {
                        "task_id": task.task_id,
                        "question_id": task.question_id,
                        "context": list(task.context),
                        "candidate_id": task.candidate_id,
                        "candidate_text": task.candidate_text,
                    },
                    "instructions": self.service.instructions,
                }
            )
        elif url.path == "/api/progress":
            self._send_json(self.service.progress())
        elif url.path.startswith("/api/"):
            self._send_json({"error": "not found"}, 404)
        else:
            self._send_static(url.path)

    def do_POST(self):
        url = urlparse(self.path)
        if url.path != "/api/judgment":
            self._send_json({"error": "not found"}, 404)
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            record = json.loads(self.rfile.read(length).decode("utf-8"))
        except (ValueError, json.JSONDecodeError):
            self._send_json({"error": "invalid JSON body"}, 400)
            return
        ok, error, status = self.service.submit(record)
        if ok:
            self._send_json({"accepted": True}, status)
        else:
            self._send_json({"accepted": False, "error": error}, status)

    def _send_static(self, path: str) -> None:
        if path == "/":
            path = "/index.html"
        if self.ui_dir is None:
            body = FALLBACK_PAGE.encode("utf-8")
            self.send_response(200)
            self.send_header("Content-Type", "text/html; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)
            return
        target = (self.ui_dir / path.lstrip("/")).resolve()
        if not target.is_relative_to(self.ui_dir.resolve()) or not target.is_file():
            self._send_json({"error": "not found"}, 404)
            return
        types = {".html": "text/html; charset=utf-8", ".js": "text/javascript; charset=utf-8",
                 ".css": "text/css; charset=utf-8", ".map": "application/json",
                 ".svg": "image/svg+xml"}
        body = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", types.get(target.suffix, "application/octet-stream"))
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def make_server(
    tasks_path: str | Path,
    journal_path: str | Path,
    port: int = 8765,
    required: int = ANNOTATORS_PER_CANDIDATE,
    ui_dir: str | Path | None = None,
    host: str = "127.0.0.1",
    instructions: str = DEFAULT_INSTRUCTIONS,
) -> ThreadingHTTPServer:
    tasks = read_tasks(tasks_path)
    if not tasks:
        raise ValueError(f"no tasks in {tasks_path}")
    service = AnnotationService(tasks, journal_path, required=required, instructions=instructions)
    handler = type("Handler", (_Handler,), {
        "service": service,
        "ui_dir": Path(ui_dir) if ui_dir else None,
    })
    return ThreadingHTTPServer((host, port), handler)


def serve(
    tasks_path: str | Path,
    journal_path: str | Path,
    port: int = 8765,
    required: int = ANNOTATORS_PER_CANDIDATE,
    ui_dir: str | Path | None = None,
    host: str = "127.0.0.1",
    instructions: str = DEFAULT_INSTRUCTIONS,
) -> None:
    server = make_server(tasks_path, journal_path, port, required, ui_dir, host, instructions)
    bound_port = server.server_address[1]
    print(f"annotation server listening on http://{host}:{bound_port}/", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
