"""Query execution: run every engine, look up weights, fuse, and rank.

The pipeline owns the frozen corpus, the optional cluster model, and the
model store, and is the one place where mode dispatch happens. Ranking is a
pure read; feedback is forwarded to the store together with the score
snapshot of the execution being judged, so learning uses exactly the numbers
that produced the displayed ranking.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass

from .clustering import ClusterModel, MembershipVector, membership
from .corpus import Corpus, tokenize
from .engines import ENGINE_IDS, RsvList, score_all
from .fusion import (
    fuse_blended,
    fuse_blended_clustered,
    fuse_clustered,
    fuse_flat,
)
from .usermodel import FeedbackEvent, ModelStore, PublicModel, UserModel

_FLAT_MEMBERSHIP = MembershipVector((1.0,))


@dataclass(frozen=True)
class RankedHit:
    doc_id: str
    score: float
    rsvs: tuple[float, ...]  # normalized, registry order
    membership: tuple[float, ...]


@dataclass
class QueryExecution:
    """One query's normalized per-engine scores, reusable for feedback."""

    query_id: str
    query_text: str
    rsv_lists: list[RsvList]

    def candidates(self) -> list[str]:
        seen: dict[str, None] = {}
        for rsv in self.rsv_lists:
            for doc_id in rsv.scores:
                seen.setdefault(doc_id)
        return list(seen)

    def rsvs_for(self, doc_id: str) -> tuple[float, ...]:
        """Per-engine normalized scores; 0 where an engine did not retrieve."""
        return tuple(rsv.scores.get(doc_id, 0.0) for rsv in self.rsv_lists)


class SearchPipeline:
    def __init__(
        self,
        corpus: Corpus,
        store: ModelStore,
        cluster_model: ClusterModel | None = None,
    ):
        if tuple(store.config.engines) != ENGINE_IDS:
            raise ValueError(
                f"store registry {store.config.engines!r} does not match engines {ENGINE_IDS!r}"
            )
        if cluster_model is not None and cluster_model.k != store.config.k:
            raise ValueError(
                f"cluster model has K={cluster_model.k} but store expects K={store.config.k}"
            )
        self.corpus = corpus
        self.store = store
        self.cluster_model = cluster_model
        self._memberships: dict[str, MembershipVector] = {}

    @property
    def mode(self) -> str:
        return self.store.config.mode

    def execute(self, query_text: str, query_id: str = "") -> QueryExecution:
        terms = tokenize(query_text)
        if not terms:
            raise ValueError("query is empty after tokenization")
        qid = query_id or uuid.uuid4().hex
        return QueryExecution(
            query_id=qid,
            query_text=query_text,
            rsv_lists=score_all(terms, self.corpus.index, qid),
        )

    def membership_for(self, doc_id: str) -> MembershipVector:
        """Cluster membership of a document (cached; model is frozen)."""
        if self.cluster_model is None:
            return _FLAT_MEMBERSHIP
        cached = self._memberships.get(doc_id)
        if cached is None:
            features = self.corpus.features.get(doc_id)
            if features is None:
                raise ValueError(f"document {doc_id!r} has no feature vector")
            cached = membership(self.cluster_model, features)
            self._memberships[doc_id] = cached
        return cached

    def _check_mode(self, mode: str) -> None:
        if mode in ("flat", "blended"):
            if self.store.config.k != 1:
                raise ValueError(f"mode {mode!r} requires K=1, store has K={self.store.config.k}")
        elif mode in ("clustered", "blended-clustered"):
            if self.cluster_model is None or not self.cluster_model.fitted:
                raise ValueError(f"mode {mode!r} requires a fitted cluster model")
        else:
            raise ValueError(f"unknown mode: {mode!r}")

    def fused_score(
        self, user: UserModel, mode: str, memb: MembershipVector, rsvs: tuple[float, ...]
    ) -> float:
        public = self.store.public.public_weights
        private = user.private_weights
        if mode == "flat":
            return fuse_flat(public.column(0), rsvs)
        if mode == "clustered":
            return fuse_clustered(public, memb, rsvs)
        if mode == "blended":
            return fuse_blended(private.column(0), public.column(0), user.p, rsvs)
        if mode == "blended-clustered":
            return fuse_blended_clustered(private, public, user.p, memb, rsvs)
        raise ValueError(f"unknown mode: {mode!r}")

    def rank(
        self,
        query_text: str,
        user_id: str = "guest",
        mode: str | None = None,
        top_k: int = 10,
        execution: QueryExecution | None = None,
    ) -> tuple[QueryExecution, list[RankedHit]]:
        """Score every document retrieved by at least one engine and rank.

        Sorting is by fused score descending with ties broken by ascending
        doc id; the list is truncated to ``top_k``.
        """
        if top_k < 1:
            raise ValueError("top_k must be >= 1")
        active_mode = mode or self.mode
        self._check_mode(active_mode)
        execution = execution or self.execute(query_text)
        user = self.store.user(user_id)
        hits = []
        for doc_id in execution.candidates():
            rsvs = execution.rsvs_for(doc_id)
            memb = self.membership_for(doc_id)
            fused = self.fused_score(user, active_mode, memb, rsvs)
            hits.append(RankedHit(doc_id, fused, rsvs, tuple(memb)))
        hits.sort(key=lambda h: (-h.score, h.doc_id))
        return execution, hits[:top_k]

    def feedback(
        self,
        user_id: str,
        execution: QueryExecution,
        doc_id: str,
        judgment: str,
    ) -> tuple[UserModel, PublicModel]:
        """Record one judgment against a prior execution's score snapshot."""
        if doc_id not in self.corpus:
            raise ValueError(f"unknown document id: {doc_id!r}")
        event = FeedbackEvent.now(user_id, execution.query_id, doc_id, judgment)
        rsvs = execution.rsvs_for(doc_id)
        if self.cluster_model is None:
            memb: MembershipVector | tuple[float, ...] = _FLAT_MEMBERSHIP
        elif doc_id in self.corpus.features:
            memb = self.membership_for(doc_id)
        elif not any(rsvs):
            # Featureless documents are never retrieved; keep the update a
            # no-op instead of refusing the (still counted) judgment.
            memb = tuple(0.0 for _ in range(self.store.config.k))
        else:
            memb = self.membership_for(doc_id)
        return self.store.record_feedback(event, rsvs, memb)
