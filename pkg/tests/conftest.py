import io
import json

import pytest

from mimor.corpus import ingest


def make_corpus(docs: dict[str, str]):
    """Build a corpus from {doc_id: text} via the normal JSONL ingest path."""
    lines = [json.dumps({"id": doc_id, "text": text}) for doc_id, text in docs.items()]
    stream = io.BytesIO(("\n".join(lines) + "\n").encode("utf-8"))
    corpus, _ = ingest(stream, "jsonl")
    return corpus


@pytest.fixture
def toy_corpus():
    """Small fixed corpus exercising all three engines."""
    return make_corpus(
        {
            "d1": "a b",
            "d2": "a a a b b c",
            "d3": "fusion of retrieval systems improves quality",
            "d4": "retrieval engines score documents. fusion merges the scores.",
            "d5": "completely unrelated text about gardening and tulips",
        }
    )
