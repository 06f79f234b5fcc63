"""Command line interface; each subcommand maps onto one module operation."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import clustering, corpus as corpus_mod, evalharness
from .service import load_pipeline, weights_payload


def _print(payload: dict, as_json: bool, text: str) -> None:
    if as_json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


def cmd_ingest(args: argparse.Namespace) -> int:
    out = Path(args.out)
    with open(args.input, "rb") as fh:
        built, stats = corpus_mod.ingest(fh, args.format)
    out.mkdir(parents=True, exist_ok=True)
    corpus_mod.save_corpus(built, out / "corpus.jsonl")
    _print(stats, args.json, f"ingested {stats['doc_count']} docs, {stats['term_count']} terms -> {out}")
    return 0


def cmd_cluster(args: argparse.Namespace) -> int:
    data = Path(args.data)
    built = corpus_mod.load_corpus(data / "corpus.jsonl")
    if args.rules:
        model = clustering.rule_model(clustering.load_rules(args.rules))
    else:
        features = list(built.features.values())
        model = clustering.fit_fuzzy(
            features, k=args.k, m=args.m, tol=args.tol, max_iter=args.max_iter, seed=args.seed
        )
    clustering.save_cluster_model(model, data / "cluster.json")
    if args.export_assignments:
        with open(args.export_assignments, "w", encoding="utf-8") as fh:
            for doc_id, memb in clustering.membership_rows(model, built.features):
                fh.write(json.dumps({"id": doc_id, "membership": list(memb)}) + "\n")
    payload = {"k": model.k, "mode": model.mode, "iterations": len(model.objective_history)}
    _print(payload, args.json, f"cluster model (K={model.k}, {model.mode}) -> {data / 'cluster.json'}")
    return 0


def cmd_search(args: argparse.Namespace) -> int:
    pipeline = load_pipeline(args.data, mode=args.mode)
    _, hits = pipeline.rank(args.q, user_id=args.user, top_k=args.k)
    payload = {
        "query": args.q,
        "mode": pipeline.mode,
        "results": [
            {
                "doc_id": h.doc_id,
                "rank": i + 1,
                "score": h.score,
                "rsvs": {e: v for e, v in zip(pipeline.store.config.engines, h.rsvs)},
                "membership": list(h.membership),
            }
            for i, h in enumerate(hits)
        ],
    }
    lines = [f"{i + 1:>3}. {h.doc_id}  {h.score:.6f}" for i, h in enumerate(hits)]
    _print(payload, args.json, "\n".join(lines) if lines else "(no results)")
    return 0


def cmd_feedback(args: argparse.Namespace) -> int:
    pipeline = load_pipeline(args.data, mode=args.mode)
    execution = pipeline.execute(args.q, args.qid or "")
    user, public = pipeline.feedback(args.user, execution, args.doc, args.judgment)
    pipeline.store.save()
    payload = {
        "user_id": user.user_id,
        "feedback_count": user.feedback_count,
        "p": user.p,
        "private_weights": user.private_weights.to_lists(),
        "public_weights": public.public_weights.to_lists(),
    }
    _print(payload, args.json, f"recorded {args.judgment} for {args.doc} (n={user.feedback_count}, p={user.p:.3f})")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    data = Path(args.data)
    built = corpus_mod.load_corpus(data / "corpus.jsonl")
    cluster_model = None
    needs_clusters = args.mode in ("clustered", "blended-clustered")
    if needs_clusters and (data / "cluster.json").exists():
        cluster_model = clustering.load_cluster_model(data / "cluster.json")
    queries = []
    with open(args.queries, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                record = json.loads(line)
                queries.append((record["qid"], record["text"]))
    qrels = evalharness.load_qrels(args.qrels)
    config = evalharness.SessionConfig(
        epsilon=args.epsilon,
        mode=args.mode,
        judge_depth=args.depth,
        iterations=args.iterations,
        seed=args.seed,
    )
    report = evalharness.simulate_session(built, queries, qrels, config, cluster_model)
    if args.report:
        Path(args.report).write_text(report.to_json(), encoding="utf-8")
    _print(report.to_dict(), args.json, report.summary_table())
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from .service import serve

    serve(args.data, host=args.host, port=args.port)
    return 0


def cmd_export_weights(args: argparse.Namespace) -> int:
    pipeline = load_pipeline(args.data)
    payload = weights_payload(pipeline.store)
    Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")
    _print(payload, args.json, f"public weights -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mimor", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_data(p: argparse.ArgumentParser) -> None:
        import os

        p.add_argument("--data", default=os.environ.get("MIMOR_DATA_DIR", "data"),
                       help="data directory (default: $MIMOR_DATA_DIR or ./data)")

    def add_json(p: argparse.ArgumentParser) -> None:
        p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("ingest", help="build a corpus from a document stream")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=["jsonl", "trec-text"], default="jsonl")
    p.add_argument("--out", required=True)
    add_json(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("cluster", help="fit document clusters on the corpus features")
    add_data(p)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--m", type=float, default=2.0)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rules", help="JSON rule file for hard (overlapping) clusters")
    p.add_argument("--export-assignments", help="write per-doc memberships as JSONL")
    add_json(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("search", help="rank documents for a query")
    add_data(p)
    p.add_argument("--q", required=True)
    p.add_argument("--user", default="guest")
    p.add_argument("--mode", default=None)
    p.add_argument("--k", type=int, default=10)
    add_json(p)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("feedback", help="record one relevance judgment")
    add_data(p)
    p.add_argument("--q", required=True, help="query text (scores are recomputed)")
    p.add_argument("--doc", required=True)
    p.add_argument("--judgment", choices=["relevant", "nonrelevant"], required=True)
    p.add_argument("--user", default="guest")
    p.add_argument("--qid", default="")
    p.add_argument("--mode", default=None)
    add_json(p)
    p.set_defaults(func=cmd_feedback)

    p = sub.add_parser("simulate", help="replay qrels as feedback and measure")
    add_data(p)
    p.add_argument("--queries", required=True, help="JSONL of {qid, text}")
    p.add_argument("--qrels", required=True, help="TREC qrels file")
    p.add_argument("--mode", default="clustered",
                   choices=["flat", "clustered", "blended", "blended-clustered"])
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--depth", type=int, default=10)
    p.add_argument("--iterations", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="write the full JSON report here")
    add_json(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("serve", help="run the HTTP service")
    add_data(p)
    p.add_argument("--host", default="127.0.0.1")
    import os

    p.add_argument("--port", type=int, default=int(os.environ.get("MIMOR_PORT", "8000")))
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("export-weights", help="dump the public weight matrix")
    add_data(p)
    p.add_argument("--out", required=True)
    add_json(p)
    p.set_defaults(func=cmd_export_weights)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
