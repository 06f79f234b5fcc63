"""Document ingestion, tokenization, inverted index, and formal text features.

A corpus is built once from a JSONL or TREC-text stream and is immutable
afterwards: the index and the cached feature vectors stay consistent for the
lifetime of the engine instance. Re-ingest to change the collection.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Iterator

_TOKEN_RE = re.compile(r"[^\W_]+")
_SENTENCE_SPLIT_RE = re.compile(r"[.!?]")

#: Feature order used everywhere memberships and centroids are positional.
FEATURE_NAMES = (
    "doc_length",
    "avg_sentence_length",
    "type_token_ratio",
    "avg_word_length",
)


class DuplicateDocumentError(ValueError):
    """Raised when two documents share the same id."""

    def __init__(self, doc_id: str):
        super().__init__(f"duplicate document id: {doc_id!r}")
        self.doc_id = doc_id


class MalformedRecordError(ValueError):
    """Raised when an input record cannot be parsed; carries the line number."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"malformed record at line {line}: {reason}")
        self.line = line


def tokenize(text: str) -> list[str]:
    """Lowercase and split into maximal alphanumeric runs, order preserved.

    No stemming and no stopword removal; underscores and any punctuation act
    as separators. Empty text yields an empty list.
    """
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    token_count: int
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("document id must be non-empty")

    @classmethod
    def from_text(cls, doc_id: str, text: str, meta: dict[str, str] | None = None) -> "Document":
        return cls(id=doc_id, text=text, token_count=len(tokenize(text)), meta=meta or {})


@dataclass(frozen=True)
class FeatureVector:
    """Formal document properties that drive clustering.

    Length is the token count; the remaining three act as cheap, resource-free
    proxies for how difficult or syntactically complex a text is.
    """

    doc_length: float
    avg_sentence_length: float
    type_token_ratio: float
    avg_word_length: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (
            self.doc_length,
            self.avg_sentence_length,
            self.type_token_ratio,
            self.avg_word_length,
        )


def extract_features(doc: Document) -> FeatureVector:
    """Compute the feature vector of a document with at least one token.

    Sentences are the segments between terminal punctuation ('.', '!', '?');
    a text without terminal punctuation counts as a single sentence.
    """
    tokens = tokenize(doc.text)
    if not tokens:
        raise ValueError(f"cannot extract features from empty document {doc.id!r}")
    sentences = [s for s in _SENTENCE_SPLIT_RE.split(doc.text) if tokenize(s)]
    n_sentences = max(len(sentences), 1)
    return FeatureVector(
        doc_length=float(len(tokens)),
        avg_sentence_length=len(tokens) / n_sentences,
        type_token_ratio=len(set(tokens)) / len(tokens),
        avg_word_length=sum(len(t) for t in tokens) / len(tokens),
    )


class InvertedIndex:
    """Term -> (doc id, term frequency) postings plus per-document statistics."""

    def __init__(self) -> None:
        self.postings: dict[str, list[tuple[str, int]]] = {}
        self.doc_terms: dict[str, dict[str, int]] = {}
        self.doc_lengths: dict[str, int] = {}

    def add_document(self, doc: Document) -> None:
        tokens = tokenize(doc.text)
        freqs: dict[str, int] = {}
        for tok in tokens:
            freqs[tok] = freqs.get(tok, 0) + 1
        self.doc_terms[doc.id] = freqs
        self.doc_lengths[doc.id] = len(tokens)
        for term, tf in freqs.items():
            self.postings.setdefault(term, []).append((doc.id, tf))

    @property
    def doc_count(self) -> int:
        return len(self.doc_lengths)

    @property
    def term_count(self) -> int:
        return len(self.postings)

    @property
    def avg_doc_length(self) -> float:
        if not self.doc_lengths:
            return 0.0
        return sum(self.doc_lengths.values()) / len(self.doc_lengths)


class Corpus:
    """An immutable document collection with its index and cached features."""

    def __init__(self) -> None:
        self.documents: dict[str, Document] = {}
        self.features: dict[str, FeatureVector] = {}
        self.index = InvertedIndex()

    def add(self, doc: Document) -> None:
        if doc.id in self.documents:
            raise DuplicateDocumentError(doc.id)
        self.documents[doc.id] = doc
        self.index.add_document(doc)
        if doc.token_count >= 1:
            self.features[doc.id] = extract_features(doc)

    def __len__(self) -> int:
        return len(self.documents)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self.documents

    def doc_ids(self) -> list[str]:
        return list(self.documents.keys())

    def stats(self) -> dict[str, int]:
        return {"doc_count": len(self.documents), "term_count": self.index.term_count}


def _iter_jsonl(stream: Iterable[bytes]) -> Iterator[Document]:
    for lineno, raw in enumerate(stream, start=1):
        line = raw.decode("utf-8").strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecordError(lineno, f"invalid JSON ({exc.msg})") from exc
        if not isinstance(record, dict):
            raise MalformedRecordError(lineno, "record is not a JSON object")
        doc_id = record.get("id")
        text = record.get("text")
        if not isinstance(doc_id, str) or not doc_id:
            raise MalformedRecordError(lineno, "missing or empty 'id'")
        if not isinstance(text, str):
            raise MalformedRecordError(lineno, "missing 'text'")
        meta = record.get("meta") or {}
        if not isinstance(meta, dict):
            raise MalformedRecordError(lineno, "'meta' must be an object")
        yield Document.from_text(doc_id, text, {str(k): str(v) for k, v in meta.items()})


def _iter_trec_text(stream: Iterable[bytes]) -> Iterator[Document]:
    doc_id: str | None = None
    text_parts: list[str] = []
    in_doc = False
    in_text = False
    for lineno, raw in enumerate(stream, start=1):
        line = raw.decode("utf-8").rstrip("\n")
        stripped = line.strip()
        if stripped == "<DOC>":
            if in_doc:
                raise MalformedRecordError(lineno, "nested <DOC>")
            in_doc, doc_id, text_parts = True, None, []
        elif stripped == "</DOC>":
            if not in_doc:
                raise MalformedRecordError(lineno, "</DOC> without <DOC>")
            if doc_id is None:
                raise MalformedRecordError(lineno, "document without <DOCNO>")
            yield Document.from_text(doc_id, "\n".join(text_parts))
            in_doc = False
        elif stripped.startswith("<DOCNO>"):
            if not in_doc:
                raise MalformedRecordError(lineno, "<DOCNO> outside <DOC>")
            doc_id = stripped.removeprefix("<DOCNO>").removesuffix("</DOCNO>").strip()
            if not doc_id:
                raise MalformedRecordError(lineno, "empty <DOCNO>")
        elif stripped == "<TEXT>":
            in_text = True
        elif stripped == "</TEXT>":
            in_text = False
        elif in_text:
            text_parts.append(line)
    if in_doc:
        raise MalformedRecordError(lineno, "unterminated <DOC>")


def ingest(stream: BinaryIO | Iterable[bytes], fmt: str = "jsonl") -> tuple[Corpus, dict[str, int]]:
    """Build a corpus from a byte stream; returns the corpus and its stats.

    Supported formats: ``jsonl`` (one ``{"id", "text", "meta"?}`` object per
    line, UTF-8) and ``trec-text`` (classic <DOC>/<DOCNO>/<TEXT> markup).
    """
    if fmt == "jsonl":
        docs = _iter_jsonl(stream)
    elif fmt == "trec-text":
        docs = _iter_trec_text(stream)
    else:
        raise ValueError(f"unknown corpus format: {fmt!r}")
    corpus = Corpus()
    for doc in docs:
        corpus.add(doc)
    return corpus, corpus.stats()


def save_corpus(corpus: Corpus, path) -> None:
    """Write the corpus back out as normalized JSONL (ingest round-trips it)."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus.documents.values():
            record: dict[str, object] = {"id": doc.id, "text": doc.text}
            if doc.meta:
                record["meta"] = doc.meta
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_corpus(path) -> Corpus:
    with open(path, "rb") as fh:
        corpus, _ = ingest(fh, "jsonl")
    return corpus
