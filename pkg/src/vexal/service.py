"""Session manager and HTTP API for live labeling sessions.

`SessionManager` owns the session lifecycle against a storage directory:
every state transition is persisted as a schema-versioned JSON document
(written to a temp file, then renamed) so a long-lived human session
survives restarts; the dataset is re-derived from its recorded path,
checksum, and split seed. The FastAPI wrapper in `build_app` is a thin
transport: the CLI's simulated-oracle mode calls the manager directly.
"""

import hashlib
import json
import os
import threading
import time
import uuid
from pathlib import Path
from typing import Dict, Optional

from . import loop
from .dataset import Pool, load_csv, split_half
from .errors import (IntegrityError, InvalidStateError, ProtocolError,
                     VexalError)

SCHEMA_VERSION = 1


class NotFoundError(VexalError):
    """Unknown session id or dataset path."""


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class SessionRecord:
    def __init__(self, session_id: str, state: loop.SessionState,
                 pool: Pool, pool_ref: dict, created: float):
        self.session_id = session_id
        self.state = state
        self.pool = pool
        self.pool_ref = pool_ref
        self.created = created
        self.updated = created
        self.lock = threading.RLock()


class SessionManager:
    """Thread-safe registry of labeling sessions, persisted per session."""

    def __init__(self, storage_dir, asset_root=None):
        self.storage_dir = Path(storage_dir)
        self.storage_dir.mkdir(parents=True, exist_ok=True)
        self.asset_root = Path(asset_root) if asset_root else None
        self._records: Dict[str, SessionRecord] = {}
        self._registry_lock = threading.Lock()

    # -- lifecycle ---------------------------------------------------------

    def create_session(self, dataset_path, strategy: str, K: int, T: int,
                       seed: int = 0, split_seed: Optional[int] = None,
                       hyperparameters: Optional[dict] = None) -> str:
        path = Path(dataset_path)
        if not path.is_file():
            raise NotFoundError(f"dataset not found: {path}")
        if strategy not in loop.STRATEGIES:
            raise ValueError(
                f"unknown strategy {strategy!r}; allowed: "
                + ", ".join(loop.STRATEGIES))
        if split_seed is None:
            split_seed = seed + 1
        config = loop.SessionConfig(strategy=strategy, K=K, T=T, seed=seed,
                                    **(hyperparameters or {}))
        pool = split_half(load_csv(path), seed=split_seed)
        state = loop.start_session(pool, config)
        session_id = uuid.uuid4().hex
        record = SessionRecord(
            session_id=session_id, state=state, pool=pool,
            pool_ref={"path": str(path), "sha256": _sha256(path),
                      "split_seed": split_seed},
            created=time.time(),
        )
        with self._registry_lock:
            self._records[session_id] = record
        self._persist(record)
        return session_id

    def _record(self, session_id: str) -> SessionRecord:
        with self._registry_lock:
            rec = self._records.get(session_id)
        if rec is None:
            rec = self._load(session_id)
            if rec is None:
                raise NotFoundError(f"unknown session {session_id!r}")
            with self._registry_lock:
                rec = self._records.setdefault(session_id, rec)
        return rec

    # -- operations ---------------------------------------------------------

    def get_display(self, session_id: str) -> dict:
        rec = self._record(session_id)
        with rec.lock:
            state = rec.state
            if state.pending_display is None:
                raise InvalidStateError(
                    f"session finished all {state.T} iterations; "
                    "no display awaits labels")
            items = []
            for sid in state.pending_display.sample_ids:
                sample = rec.pool.sample(sid)
                preview = [float(v) for v in sample.features[:8]]
                items.append({
                    "sample_id": sid,
                    "thumbnail_before": sample.thumbnail_before,
                    "thumbnail_after": sample.thumbnail_after,
                    "feature_preview": preview,
                })
            return {
                "session_id": session_id,
                "iteration": state.t,
                "total_iterations": state.T,
                "items": items,
            }

    def submit_labels(self, session_id: str, labels: Dict[int, int]) -> dict:
        rec = self._record(session_id)
        with rec.lock:
            state = rec.state
            if state.pending_display is None:
                raise InvalidStateError(
                    "no display awaits labels; the session is complete")
            normalized = {}
            for key, value in labels.items():
                sid = int(key)
                if sid in normalized:
                    raise ProtocolError(f"duplicate label for sample {sid}")
                normalized[sid] = value
            submitted = frozenset(normalized)
            if submitted != frozenset(state.pending_display.sample_ids):
                for past, _ in state.displays:
                    if submitted == frozenset(past.sample_ids):
                        raise InvalidStateError(
                            "these labels cover an already consumed display")
            loop.run_iteration(state, lambda ids: normalized, rec.pool)
            rec.updated = time.time()
            self._persist(rec)
            last = state.metrics[-1]
            return {
                "t": state.t,
                "eer_if_available": last.eer_percent,
                "next_display_ready": state.pending_display is not None,
            }

    def get_metrics(self, session_id: str) -> list:
        rec = self._record(session_id)
        with rec.lock:
            return [m.to_dict() for m in rec.state.metrics]

    # -- persistence ---------------------------------------------------------

    def _path_for(self, session_id: str) -> Path:
        return self.storage_dir / f"session-{session_id}.json"

    def _persist(self, rec: SessionRecord) -> None:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "session_id": rec.session_id,
            "pool_ref": rec.pool_ref,
            "created": rec.created,
            "updated": rec.updated,
            "state": rec.state.to_dict(),
        }
        target = self._path_for(rec.session_id)
        tmp = target.with_suffix(".json.tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, target)

    def _load(self, session_id: str) -> Optional[SessionRecord]:
        path = self._path_for(session_id)
        if not path.is_file():
            return None
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise IntegrityError(
                f"session file {path} has unsupported schema "
                f"{doc.get('schema_version')!r}")
        ref = doc["pool_ref"]
        dataset = Path(ref["path"])
        if not dataset.is_file():
            raise NotFoundError(f"dataset behind session moved: {dataset}")
        digest = _sha256(dataset)
        if digest != ref["sha256"]:
            raise IntegrityError(
                f"dataset {dataset} changed since the session started")
        pool = split_half(load_csv(dataset), seed=ref["split_seed"])
        rec = SessionRecord(
            session_id=doc["session_id"],
            state=loop.SessionState.from_dict(doc["state"]),
            pool=pool, pool_ref=ref, created=doc["created"],
        )
        rec.updated = doc["updated"]
        return rec


def build_app(manager: SessionManager):
    """FastAPI wrapper over a SessionManager; errors map to
    {code, message} bodies with conventional status codes."""
    from fastapi import FastAPI, Request
    from fastapi.responses import FileResponse, JSONResponse
    from pydantic import BaseModel

    class CreateSessionBody(BaseModel):
        dataset_path: str
        strategy: str
        K: int
        T: int
        seed: int = 0
        split_seed: Optional[int] = None
        hyperparameters: Optional[dict] = None

    class SubmitLabelsBody(BaseModel):
        labels: Dict[int, int]

    app = FastAPI(title="vexal labeling service")

    def _error(status: int, code: str, message: str) -> JSONResponse:
        return JSONResponse(status_code=status,
                            content={"code": code, "message": message})

    @app.exception_handler(NotFoundError)
    async def _not_found(request: Request, exc: NotFoundError):
        return _error(404, "not_found", str(exc))

    @app.exception_handler(InvalidStateError)
    async def _conflict(request: Request, exc: InvalidStateError):
        return _error(409, "conflict", str(exc))

    @app.exception_handler(ProtocolError)
    async def _protocol(request: Request, exc: ProtocolError):
        return _error(422, "protocol_error", str(exc))

    @app.exception_handler(ValueError)
    async def _invalid(request: Request, exc: ValueError):
        return _error(422, "invalid_config", str(exc))

    @app.exception_handler(VexalError)
    async def _generic(request: Request, exc: VexalError):
        return _error(400, "bad_request", str(exc))

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    async def create_session(body: CreateSessionBody):
        session_id = manager.create_session(
            dataset_path=body.dataset_path, strategy=body.strategy,
            K=body.K, T=body.T, seed=body.seed, split_seed=body.split_seed,
            hyperparameters=body.hyperparameters)
        return {"session_id": session_id}

    @app.get("/sessions/{session_id}/display")
    async def get_display(session_id: str):
        return manager.get_display(session_id)

    @app.post("/sessions/{session_id}/labels")
    async def submit_labels(session_id: str, body: SubmitLabelsBody):
        return manager.submit_labels(session_id, body.labels)

    @app.get("/sessions/{session_id}/metrics")
    async def get_metrics(session_id: str):
        return manager.get_metrics(session_id)

    @app.get("/assets/{asset_path:path}")
    async def get_asset(asset_path: str):
        if manager.asset_root is None:
            raise NotFoundError("no asset root configured")
        root = manager.asset_root.resolve()
        target = (root / asset_path).resolve()
        if root not in target.parents and target != root:
            raise NotFoundError("asset outside the configured root")
        if not target.is_file():
            raise NotFoundError(f"no such asset: {asset_path}")
        return FileResponse(target)

    return app
