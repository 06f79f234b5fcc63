"""HTTP facade: search, feedback, and model inspection over JSON.

Search responses carry an opaque ``rsvs_token`` identifying a server-side
snapshot of the per-engine scores that produced the displayed ranking.
Feedback must present that token, which guarantees the learning update uses
exactly the numbers the user saw, even if the corpus or models move on in the
meantime. Snapshots expire after a TTL (default one hour).
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .clustering import load_cluster_model
from .corpus import load_corpus
from .engines import ENGINE_IDS
from .pipeline import SearchPipeline
from .usermodel import FeedbackEvent, ModelStore, StoreConfig

DEFAULT_SNAPSHOT_TTL = 3600.0


class ApiFault(Exception):
    """Maps one-to-one onto the JSON error body {code, message}."""

    STATUS = {"bad_request": 400, "not_found": 404, "conflict": 409, "internal": 500}

    def __init__(self, code: str, message: str):
        assert code in self.STATUS
        super().__init__(message)
        self.code = code
        self.message = message

    @property
    def status(self) -> int:
        return self.STATUS[self.code]


@dataclass
class Snapshot:
    query_id: str
    expires_at: float
    rsvs: dict[str, tuple[float, ...]]
    memberships: dict[str, tuple[float, ...]]


@dataclass
class SnapshotCache:
    ttl: float = DEFAULT_SNAPSHOT_TTL
    _entries: dict[str, Snapshot] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock)

    def put(self, snapshot: Snapshot) -> str:
        token = uuid.uuid4().hex
        with self._lock:
            now = time.monotonic()
            self._entries = {t: s for t, s in self._entries.items() if s.expires_at > now}
            self._entries[token] = snapshot
        return token

    def get(self, token: str) -> Snapshot | None:
        with self._lock:
            snap = self._entries.get(token)
            if snap is None or snap.expires_at <= time.monotonic():
                self._entries.pop(token, None)
                return None
            return snap


class FeedbackBody(BaseModel):
    user: str
    qid: str
    doc: str
    judgment: str
    rsvs_token: str


def weights_payload(store: ModelStore) -> dict:
    """Public-model payload shared by GET /weights and the CLI export."""
    return {
        "engines": list(store.config.engines),
        "k": store.config.k,
        "mode": store.config.mode,
        "epsilon": store.config.epsilon,
        "t_saturation": store.config.t_saturation,
        "weights": store.public.public_weights.to_lists(),
        "total_feedback": store.public.total_feedback,
    }


def user_payload(store: ModelStore, user_id: str) -> dict:
    user = store.users[user_id]
    return {
        "user_id": user.user_id,
        "weights": user.private_weights.to_lists(),
        "feedback_count": user.feedback_count,
        "p": user.p,
    }


def create_app(pipeline: SearchPipeline, snapshot_ttl: float = DEFAULT_SNAPSHOT_TTL) -> FastAPI:
    app = FastAPI(title="mimor", docs_url=None, redoc_url=None)
    # the browser console is served from its own origin; no credentials/auth
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    snapshots = SnapshotCache(ttl=snapshot_ttl)
    app.state.pipeline = pipeline
    app.state.snapshots = snapshots

    @app.exception_handler(ApiFault)
    async def _fault_handler(_request: Request, fault: ApiFault) -> JSONResponse:
        return JSONResponse(
            status_code=fault.status, content={"code": fault.code, "message": fault.message}
        )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "doc_count": len(pipeline.corpus)}

    @app.get("/search")
    def search(q: str = "", user: str = "guest", mode: str = "", k: int = 10) -> dict:
        if not q.strip():
            raise ApiFault("bad_request", "query must not be empty")
        if k < 1:
            raise ApiFault("bad_request", "k must be >= 1")
        try:
            execution, hits = pipeline.rank(q, user_id=user, mode=mode or None, top_k=k)
        except ValueError as exc:
            raise ApiFault("bad_request", str(exc)) from exc
        snapshot = Snapshot(
            query_id=execution.query_id,
            expires_at=time.monotonic() + snapshots.ttl,
            rsvs={h.doc_id: h.rsvs for h in hits},
            memberships={h.doc_id: h.membership for h in hits},
        )
        token = snapshots.put(snapshot)
        return {
            "query_id": execution.query_id,
            "user": user,
            "mode": mode or pipeline.mode,
            "rsvs_token": token,
            "results": [
                {
                    "doc_id": h.doc_id,
                    "rank": i + 1,
                    "score": h.score,
                    "rsvs": {e: v for e, v in zip(ENGINE_IDS, h.rsvs)},
                    "membership": list(h.membership),
                }
                for i, h in enumerate(hits)
            ],
        }

    @app.post("/feedback")
    def feedback(body: FeedbackBody) -> dict:
        if body.judgment not in ("relevant", "nonrelevant"):
            raise ApiFault("bad_request", "judgment must be 'relevant' or 'nonrelevant'")
        snap = snapshots.get(body.rsvs_token)
        if snap is None:
            raise ApiFault("not_found", "unknown or expired rsvs_token; re-run the query")
        if snap.query_id != body.qid:
            raise ApiFault("conflict", "rsvs_token belongs to a different query execution")
        if body.doc not in pipeline.corpus:
            raise ApiFault("not_found", f"unknown document id: {body.doc!r}")
        if body.doc not in snap.rsvs:
            raise ApiFault("bad_request", "document was not part of that result page")
        event = FeedbackEvent.now(body.user, body.qid, body.doc, body.judgment)
        try:
            user_model, public = pipeline.store.record_feedback(
                event, snap.rsvs[body.doc], snap.memberships[body.doc]
            )
        except ValueError as exc:
            raise ApiFault("bad_request", str(exc)) from exc
        if pipeline.store.data_dir is not None:
            pipeline.store.save()
        return {
            "user": {
                "user_id": user_model.user_id,
                "feedback_count": user_model.feedback_count,
                "p": user_model.p,
                "weights": user_model.private_weights.to_lists(),
            },
            "public": {
                "weights": public.public_weights.to_lists(),
                "total_feedback": public.total_feedback,
            },
        }

    @app.get("/model/{user_id}")
    def model(user_id: str) -> dict:
        if not pipeline.store.has_user(user_id):
            raise ApiFault("not_found", f"unknown user: {user_id!r}")
        return user_payload(pipeline.store, user_id)

    @app.get("/weights")
    def weights() -> dict:
        return weights_payload(pipeline.store)

    @app.get("/clusters/{doc_id}")
    def clusters(doc_id: str) -> dict:
        if doc_id not in pipeline.corpus:
            raise ApiFault("not_found", f"unknown document id: {doc_id!r}")
        if pipeline.cluster_model is None:
            return {"doc_id": doc_id, "membership": [1.0]}
        if doc_id not in pipeline.corpus.features:
            raise ApiFault("conflict", f"document {doc_id!r} has no feature vector (empty text)")
        memb = pipeline.membership_for(doc_id)
        return {"doc_id": doc_id, "membership": list(memb)}

    return app


def load_pipeline(
    data_dir: Path | str,
    mode: str | None = None,
    epsilon: float | None = None,
    t_saturation: int | None = None,
) -> SearchPipeline:
    """Wire a pipeline from an on-disk data directory.

    Layout: ``corpus.jsonl`` (required), ``cluster.json`` (optional),
    ``config.json`` (optional overrides), ``models/`` (persisted weights,
    created on demand).
    """
    root = Path(data_dir)
    corpus_path = root / "corpus.jsonl"
    if not corpus_path.exists():
        raise FileNotFoundError(f"no corpus at {corpus_path}; run ingest first")
    corpus = load_corpus(corpus_path)

    cluster_model = None
    cluster_path = root / "cluster.json"
    if cluster_path.exists():
        cluster_model = load_cluster_model(cluster_path)

    file_cfg: dict = {}
    config_path = root / "config.json"
    if config_path.exists():
        file_cfg = json.loads(config_path.read_text(encoding="utf-8"))

    default_mode = "clustered" if cluster_model is not None else "blended"
    active_mode = mode or file_cfg.get("mode", default_mode)
    if active_mode in ("flat", "blended"):
        # single-column weights; any fitted cluster model is left unused
        cluster_model = None
    k = cluster_model.k if cluster_model is not None else 1
    config = StoreConfig(
        engines=ENGINE_IDS,
        k=k,
        epsilon=epsilon if epsilon is not None else float(file_cfg.get("epsilon", 0.05)),
        t_saturation=(
            t_saturation if t_saturation is not None else int(file_cfg.get("t_saturation", 50))
        ),
        mode=active_mode,
    )
    store = ModelStore.load(config, root / "models", doc_exists=lambda d: d in corpus)
    return SearchPipeline(corpus, store, cluster_model)


def serve(data_dir: Path | str, host: str = "127.0.0.1", port: int = 8000) -> None:
    import uvicorn

    pipeline = load_pipeline(data_dir)
    app = create_app(pipeline)
    uvicorn.run(app, host=host, port=port)
