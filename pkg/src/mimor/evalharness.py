"""Replay relevance judgments as simulated feedback and measure quality.

The harness treats a qrels file as a stand-in user: relevant documents in the
top of a ranking earn +1 feedback, documents explicitly judged nonrelevant
earn -1, and everything unjudged is skipped (the data contains no verdict, so
none is invented). After each pass over the query set the weights are frozen
and MAP / P@5 / P@10 are computed for the fused ranking, each single engine,
and the static sum baselines.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Sequence

from .clustering import ClusterModel
from .corpus import Corpus
from .engines import ENGINE_IDS, RsvList
from .pipeline import SearchPipeline
from .usermodel import FeedbackEvent, ModelStore, StoreConfig

log = logging.getLogger(__name__)

SIM_USER = "sim"


class QrelParseError(ValueError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"bad qrels line {line}: {reason}")
        self.line = line


@dataclass
class QrelSet:
    """Binary relevance judgments: per query, who is relevant and who is
    explicitly judged nonrelevant."""

    relevant: dict[str, set[str]] = field(default_factory=dict)
    nonrelevant: dict[str, set[str]] = field(default_factory=dict)

    def add(self, qid: str, doc_id: str, rel: int) -> None:
        bucket = self.relevant if rel == 1 else self.nonrelevant
        bucket.setdefault(qid, set()).add(doc_id)

    def has_query(self, qid: str) -> bool:
        return qid in self.relevant or qid in self.nonrelevant

    def judgment_for(self, qid: str, doc_id: str) -> str | None:
        if doc_id in self.relevant.get(qid, ()):
            return "relevant"
        if doc_id in self.nonrelevant.get(qid, ()):
            return "nonrelevant"
        return None


def load_qrels(path) -> QrelSet:
    """Parse TREC 4-column qrels (``qid 0 docid rel`` with rel in {0, 1})."""
    qrels = QrelSet()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise QrelParseError(lineno, f"expected 4 fields, got {len(parts)}")
            qid, _iter, doc_id, rel_str = parts
            if rel_str not in ("0", "1"):
                raise QrelParseError(lineno, f"relevance must be 0 or 1, got {rel_str!r}")
            qrels.add(qid, doc_id, int(rel_str))
    return qrels


def average_precision(ranked: Sequence[str], relevant: set[str]) -> float:
    """Mean of precision at each relevant rank; misses contribute zero."""
    if not relevant:
        raise ValueError("average precision is undefined for an empty relevant set")
    hits = 0
    total = 0.0
    for rank, doc_id in enumerate(ranked, start=1):
        if doc_id in relevant:
            hits += 1
            total += hits / rank
    return total / len(relevant)


def precision_at_k(ranked: Sequence[str], relevant: set[str], k: int) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    hits = sum(1 for doc_id in ranked[:k] if doc_id in relevant)
    return hits / k


def combsum(rsv_lists: Sequence[RsvList]) -> dict[str, float]:
    """Sum of normalized scores per document across result lists."""
    fused: dict[str, float] = {}
    for rsv in rsv_lists:
        for doc_id, s in rsv.scores.items():
            fused[doc_id] = fused.get(doc_id, 0.0) + s
    return fused


def combmnz(rsv_lists: Sequence[RsvList]) -> dict[str, float]:
    """combsum times the number of lists scoring the document nonzero."""
    sums = combsum(rsv_lists)
    counts: dict[str, int] = {}
    for rsv in rsv_lists:
        for doc_id, s in rsv.scores.items():
            if s != 0.0:
                counts[doc_id] = counts.get(doc_id, 0) + 1
    return {doc_id: s * counts.get(doc_id, 0) for doc_id, s in sums.items()}


@dataclass(frozen=True)
class SessionConfig:
    epsilon: float = 0.05
    t_saturation: int = 50
    mode: str = "clustered"
    judge_depth: int = 10
    iterations: int = 5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.judge_depth < 1:
            raise ValueError("judge_depth must be >= 1")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


@dataclass
class MetricsReport:
    """Per-iteration metrics and weight snapshots from one simulated session."""

    mode: str
    seed: int
    systems: tuple[str, ...]
    iterations: list[dict] = field(default_factory=list)

    @property
    def final(self) -> dict:
        return self.iterations[-1]

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "systems": list(self.systems),
            "iterations": self.iterations,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def summary_table(self) -> str:
        lines = [f"{'system':<12} {'MAP':>8} {'P@5':>8} {'P@10':>8}"]
        for name, m in self.final["metrics"].items():
            lines.append(f"{name:<12} {m['map']:>8.4f} {m['p5']:>8.4f} {m['p10']:>8.4f}")
        return "\n".join(lines)


def _rank_by_scores(scores: dict[str, float]) -> list[str]:
    return [doc for doc, _ in sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))]


def _metric_rows(
    rankings: dict[str, list[str]], qrels: QrelSet, qids: Sequence[str]
) -> dict[str, float]:
    ap, p5, p10 = [], [], []
    for qid in qids:
        relevant = qrels.relevant.get(qid, set())
        if not relevant:
            continue
        ranked = rankings[qid]
        ap.append(average_precision(ranked, relevant))
        p5.append(precision_at_k(ranked, relevant, 5))
        p10.append(precision_at_k(ranked, relevant, 10))
    n = len(ap)
    if n == 0:
        return {"map": 0.0, "p5": 0.0, "p10": 0.0}
    return {"map": sum(ap) / n, "p5": sum(p5) / n, "p10": sum(p10) / n}


def simulate_session(
    corpus: Corpus,
    queries: Sequence[tuple[str, str]],
    qrels: QrelSet,
    config: SessionConfig,
    cluster_model: ClusterModel | None = None,
) -> MetricsReport:
    """Run feedback iterations over the query set and measure per iteration.

    Each iteration ranks every query with the current weights, judges the
    top ``judge_depth`` documents against the qrels, and feeds those judgments
    back. Metrics are then computed with the weights frozen, so learning and
    measurement never interleave. The session owns an isolated in-memory model
    store and cannot touch any live deployment state.
    """
    k = cluster_model.k if cluster_model is not None else 1
    store = ModelStore(
        StoreConfig(
            engines=ENGINE_IDS,
            k=k,
            epsilon=config.epsilon,
            t_saturation=config.t_saturation,
            mode=config.mode,
        )
    )
    pipeline = SearchPipeline(corpus, store, cluster_model)

    usable: list[tuple[str, str]] = []
    for qid, text in queries:
        if not qrels.has_query(qid):
            log.warning("query %r has no qrels entry; skipped", qid)
            continue
        usable.append((qid, text))

    executions = {qid: pipeline.execute(text, qid) for qid, text in usable}
    qids = [qid for qid, _ in usable]
    report = MetricsReport(mode=config.mode, seed=config.seed, systems=ENGINE_IDS)

    for _iteration in range(config.iterations):
        # learning pass
        for qid, _text in usable:
            execution = executions[qid]
            _, hits = pipeline.rank(
                "", user_id=SIM_USER, mode=config.mode,
                top_k=config.judge_depth, execution=execution,
            )
            for hit in hits:
                judgment = qrels.judgment_for(qid, hit.doc_id)
                if judgment is None:
                    continue
                event = FeedbackEvent(SIM_USER, qid, hit.doc_id, judgment)
                store.record_feedback(event, hit.rsvs, hit.membership)

        # measurement pass with frozen weights
        fused_rankings: dict[str, list[str]] = {}
        engine_rankings: dict[str, dict[str, list[str]]] = {e: {} for e in ENGINE_IDS}
        combsum_rankings: dict[str, list[str]] = {}
        combmnz_rankings: dict[str, list[str]] = {}
        for qid, _text in usable:
            execution = executions[qid]
            _, hits = pipeline.rank(
                "", user_id=SIM_USER, mode=config.mode,
                top_k=max(len(execution.candidates()), 1), execution=execution,
            )
            fused_rankings[qid] = [h.doc_id for h in hits]
            for rsv in execution.rsv_lists:
                engine_rankings[rsv.engine_id][qid] = _rank_by_scores(rsv.scores)
            combsum_rankings[qid] = _rank_by_scores(combsum(execution.rsv_lists))
            combmnz_rankings[qid] = _rank_by_scores(combmnz(execution.rsv_lists))

        metrics = {"fused": _metric_rows(fused_rankings, qrels, qids)}
        for engine_id in ENGINE_IDS:
            metrics[engine_id] = _metric_rows(engine_rankings[engine_id], qrels, qids)
        metrics["combsum"] = _metric_rows(combsum_rankings, qrels, qids)
        metrics["combmnz"] = _metric_rows(combmnz_rankings, qrels, qids)

        user = store.user(SIM_USER)
        report.iterations.append(
            {
                "metrics": metrics,
                "public_weights": store.public.public_weights.to_lists(),
                "private_weights": user.private_weights.to_lists(),
                "feedback_count": user.feedback_count,
                "p": user.p,
            }
        )
    return report
