"""Retrieval scorers and score normalization.

Three deterministic engines score documents against a query; their raw
retrieval status values live on incompatible scales, so each result list is
min-max normalized per (query, engine) before fusion. The engine order below
is a fixed registry: weight vectors are positional, so the order is part of
any persisted model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

from .corpus import InvertedIndex

#: Registry order. Never reorder without discarding persisted weights.
ENGINE_IDS: tuple[str, ...] = ("tfidf", "bm25", "overlap")

BM25_K1 = 1.2
BM25_B = 0.75


@dataclass(frozen=True)
class RsvList:
    """Per-query, per-engine retrieval status values.

    Documents absent from ``scores`` carry an implicit RSV of 0 in fusion.
    """

    query_id: str
    engine_id: str
    scores: dict[str, float] = field(default_factory=dict)
    normalized: bool = False


def _candidates(query_terms: Sequence[str], index: InvertedIndex) -> list[str]:
    """Doc ids containing at least one query term, in stable first-seen order."""
    seen: dict[str, None] = {}
    for term in query_terms:
        for doc_id, _tf in index.postings.get(term, ()):
            seen.setdefault(doc_id)
    return list(seen)


def _tfidf_idf(n_docs: int, df: int) -> float:
    # Smoothed so a term present in every document still carries weight;
    # otherwise a single-document corpus would score 0 everywhere.
    return 1.0 + math.log(n_docs / df)


def _score_tfidf(query_terms: Sequence[str], index: InvertedIndex) -> dict[str, float]:
    n = index.doc_count
    q_freqs: dict[str, int] = {}
    for term in query_terms:
        q_freqs[term] = q_freqs.get(term, 0) + 1
    q_weights = {
        term: (1.0 + math.log(tf)) * _tfidf_idf(n, len(index.postings[term]))
        for term, tf in q_freqs.items()
        if term in index.postings
    }
    if not q_weights:
        return {}
    q_norm = math.sqrt(sum(w * w for w in q_weights.values()))
    scores: dict[str, float] = {}
    for doc_id in _candidates(query_terms, index):
        doc_freqs = index.doc_terms[doc_id]
        d_norm_sq = 0.0
        for term, tf in doc_freqs.items():
            w = (1.0 + math.log(tf)) * _tfidf_idf(n, len(index.postings[term]))
            d_norm_sq += w * w
        d_norm = math.sqrt(d_norm_sq)
        dot = 0.0
        for term, qw in q_weights.items():
            tf = doc_freqs.get(term)
            if tf:
                dot += qw * (1.0 + math.log(tf)) * _tfidf_idf(n, len(index.postings[term]))
        if d_norm > 0 and q_norm > 0:
            scores[doc_id] = dot / (q_norm * d_norm)
    return scores


def _score_bm25(query_terms: Sequence[str], index: InvertedIndex) -> dict[str, float]:
    n = index.doc_count
    avgdl = index.avg_doc_length
    scores: dict[str, float] = {}
    seen_terms: dict[str, None] = {}
    for term in query_terms:
        seen_terms.setdefault(term)
    for doc_id in _candidates(query_terms, index):
        doc_freqs = index.doc_terms[doc_id]
        dl = index.doc_lengths[doc_id]
        s = 0.0
        for term in seen_terms:
            tf = doc_freqs.get(term)
            if not tf:
                continue
            df = len(index.postings[term])
            idf = math.log(1.0 + (n - df + 0.5) / (df + 0.5))
            denom = tf + BM25_K1 * (1.0 - BM25_B + BM25_B * dl / avgdl)
            s += idf * tf * (BM25_K1 + 1.0) / denom
        scores[doc_id] = s
    return scores


def _score_overlap(query_terms: Sequence[str], index: InvertedIndex) -> dict[str, float]:
    q_set = set(query_terms)
    scores: dict[str, float] = {}
    for doc_id in _candidates(query_terms, index):
        d_set = index.doc_terms[doc_id]
        inter = sum(1 for t in q_set if t in d_set)
        scores[doc_id] = 2.0 * inter / (len(q_set) + len(d_set))
    return scores


_SCORERS = {
    "tfidf": _score_tfidf,
    "bm25": _score_bm25,
    "overlap": _score_overlap,
}


def score(
    engine_id: str,
    query_terms: Sequence[str],
    index: InvertedIndex,
    query_id: str = "",
) -> RsvList:
    """Raw scores for every document containing at least one query term.

    ``tfidf`` is the cosine of log-tf / smoothed-idf weighted vectors, ``bm25``
    uses k1=1.2 and b=0.75 with a non-negative idf, and ``overlap`` is the Dice
    coefficient of the query and document term sets.
    """
    if engine_id not in _SCORERS:
        raise ValueError(f"unknown engine id: {engine_id!r}")
    if not query_terms:
        raise ValueError("query is empty after tokenization")
    scores = _SCORERS[engine_id](query_terms, index)
    return RsvList(query_id=query_id, engine_id=engine_id, scores=scores)


def normalize(rsv: RsvList) -> RsvList:
    """Min-max normalize one result list into [0, 1]; idempotent.

    When all retrieved scores are equal (single-result lists included), every
    retrieved document gets 0.5: the engine neither dominates nor vanishes.
    """
    if rsv.normalized:
        return rsv
    if not rsv.scores:
        return replace(rsv, normalized=True)
    lo = min(rsv.scores.values())
    hi = max(rsv.scores.values())
    if hi == lo:
        norm = {doc_id: 0.5 for doc_id in rsv.scores}
    else:
        span = hi - lo
        norm = {doc_id: (s - lo) / span for doc_id, s in rsv.scores.items()}
    return replace(rsv, scores=norm, normalized=True)


def score_all(
    query_terms: Sequence[str],
    index: InvertedIndex,
    query_id: str = "",
) -> list[RsvList]:
    """Normalized result lists for every registered engine, in registry order."""
    return [normalize(score(e, query_terms, index, query_id)) for e in ENGINE_IDS]
