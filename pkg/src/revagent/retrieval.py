"""Okapi BM25 over code diffs, plus candidate-comment retrieval per category.

Similarity is always computed over diff text, never over comments. The idf
uses the nonnegative form ln(1 + (N - df + 0.5) / (df + 0.5)) so scores stay
monotone and ties break stably on tiny corpora; ties are resolved by
ascending doc id for reproducibility.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from revagent.candidates import CandidateComment, CandidateSource
from revagent.corpus import DiffHunk, EmptyCorpusError, IssueCategory

INDEX_FORMAT = "BM25v1"


class DuplicateDocIdError(ValueError):
    pass


class EmptyCategoryIndexError(Exception):
    pass


class NoHitError(Exception):
    """No indexed document shares a term with the query."""


class IndexFormatError(Exception):
    """Persisted index file is corrupt or carries the wrong format header."""


@dataclass(frozen=True)
class CodeTokenizerConfig:
    lowercase: bool = True
    split_identifiers: bool = True
    max_token_len: int = 64

    def __post_init__(self) -> None:
        if self.max_token_len < 1:
            raise ValueError("max_token_len must be >= 1")

    def to_dict(self) -> dict:
        return {
            "lowercase": self.lowercase,
            "split_identifiers": self.split_identifiers,
            "max_token_len": self.max_token_len,
        }


_NON_ALNUM = re.compile(r"[^0-9A-Za-z]+")
# camelCase / ALLCAPS / digit-run boundaries inside an identifier chunk.
_IDENTIFIER_PIECE = re.compile(r"[A-Z]+(?![a-z])|[A-Z][a-z]*|[a-z]+|[0-9]+")


def tokenize_code(text: str, cfg: CodeTokenizerConfig = CodeTokenizerConfig()) -> list[str]:
    """Split on non-alphanumerics, then (optionally) on identifier boundaries.

    Identifier splitting separates camelCase humps, ALLCAPS runs, and digit
    runs ("getUserName_v2" -> get, user, name, v, 2). Lowercasing is applied
    last; empty tokens and tokens longer than max_token_len are dropped.
    Alphanumeric means ASCII [0-9A-Za-z].
    """
    tokens: list[str] = []
    for chunk in _NON_ALNUM.split(text):
        if not chunk:
            continue
        pieces = _IDENTIFIER_PIECE.findall(chunk) if cfg.split_identifiers else [chunk]
        for piece in pieces:
            if cfg.lowercase:
                piece = piece.lower()
            if piece and len(piece) <= cfg.max_token_len:
                tokens.append(piece)
    return tokens


@dataclass(frozen=True)
class Bm25Index:
    doc_ids: tuple[str, ...]
    doc_lengths: tuple[int, ...]
    postings: dict[str, tuple[tuple[int, int], ...]]  # term -> ((doc ordinal, tf), ...)
    avg_doc_len: float
    k1: float
    b: float
    tokenizer: CodeTokenizerConfig = field(default_factory=CodeTokenizerConfig)

    def __len__(self) -> int:
        return len(self.doc_ids)

    def idf(self, term: str) -> float:
        df = len(self.postings.get(term, ()))
        if df == 0:
            return 0.0
        n = len(self.doc_ids)
        return math.log(1.0 + (n - df + 0.5) / (df + 0.5))


@dataclass(frozen=True)
class RetrievalHit:
    doc_id: str
    score: float
    rank: int


def build_index(
    docs: list[tuple[str, str]],
    cfg: CodeTokenizerConfig = CodeTokenizerConfig(),
    k1: float = 1.2,
    b: float = 0.75,
) -> Bm25Index:
    """Build an inverted index over (doc_id, text) pairs."""
    if not docs:
        raise EmptyCorpusError("cannot index an empty document list")
    if k1 <= 0:
        raise ValueError("k1 must be > 0")
    if not 0 <= b <= 1:
        raise ValueError("b must be in [0, 1]")

    doc_ids: list[str] = []
    doc_lengths: list[int] = []
    postings: dict[str, list[tuple[int, int]]] = {}
    seen: set[str] = set()
    for ordinal, (doc_id, text) in enumerate(docs):
        if doc_id in seen:
            raise DuplicateDocIdError(f"duplicate doc id: {doc_id!r}")
        seen.add(doc_id)
        tokens = tokenize_code(text, cfg)
        doc_ids.append(doc_id)
        doc_lengths.append(len(tokens))
        counts: dict[str, int] = {}
        for token in tokens:
            counts[token] = counts.get(token, 0) + 1
        for term, tf in counts.items():
            postings.setdefault(term, []).append((ordinal, tf))

    avg_doc_len = sum(doc_lengths) / len(doc_lengths)
    return Bm25Index(
        doc_ids=tuple(doc_ids),
        doc_lengths=tuple(doc_lengths),
        postings={t: tuple(ps) for t, ps in postings.items()},
        avg_doc_len=avg_doc_len,
        k1=k1,
        b=b,
        tokenizer=cfg,
    )


def query(
    index: Bm25Index,
    query_text: str,
    k: int,
    *,
    exclude_doc_ids: set[str] | None = None,
) -> list[RetrievalHit]:
    """Top-k documents by Okapi BM25 score.

    Query-token multiplicity counts: a term occurring twice in the query
    contributes two score terms. Only documents with score > 0 are returned,
    ordered by (score desc, doc_id asc).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    scores: dict[int, float] = {}
    for term in tokenize_code(query_text, index.tokenizer):
        idf = index.idf(term)
        if idf == 0.0:
            continue
        for ordinal, tf in index.postings[term]:
            norm = index.k1 * (
                1.0 - index.b + index.b * index.doc_lengths[ordinal] / index.avg_doc_len
            )
            scores[ordinal] = scores.get(ordinal, 0.0) + idf * tf * (index.k1 + 1.0) / (tf + norm)

    excluded = exclude_doc_ids or set()
    scored = [
        (score, index.doc_ids[ordinal])
        for ordinal, score in scores.items()
        if score > 0.0 and index.doc_ids[ordinal] not in excluded
    ]
    scored.sort(key=lambda pair: (-pair[0], pair[1]))
    return [
        RetrievalHit(doc_id=doc_id, score=score, rank=rank)
        for rank, (score, doc_id) in enumerate(scored[:k], start=1)
    ]


CategoryIndices = dict[IssueCategory, tuple[Bm25Index, dict[str, str]]]


def ccr(
    x: DiffHunk,
    c: IssueCategory,
    category_indices: CategoryIndices,
    *,
    exclude_doc_id: str | None = None,
) -> CandidateComment:
    """Retrieve the comment of the most similar category-c diff as a candidate.

    ``exclude_doc_id`` keeps a record from retrieving its own comment when the
    query diff itself belongs to the indexed corpus.
    """
    if c not in category_indices:
        raise EmptyCategoryIndexError(f"no index for category {c.value}")
    index, comments = category_indices[c]
    if not index.doc_ids:
        raise EmptyCategoryIndexError(f"empty index for category {c.value}")
    exclude = {exclude_doc_id} if exclude_doc_id is not None else None
    hits = query(index, x.raw_text, k=1, exclude_doc_ids=exclude)
    if not hits:
        raise NoHitError(f"no category-{c.value} document overlaps the query diff")
    return CandidateComment(
        category=c, text=comments[hits[0].doc_id], source=CandidateSource.RETRIEVED
    )


def fewshot_exemplars(
    records,
    diff: DiffHunk,
    k: int = 3,
    cfg: CodeTokenizerConfig = CodeTokenizerConfig(),
    k1: float = 1.2,
    b: float = 0.75,
    exclude_id: str | None = None,
) -> list[tuple[DiffHunk, str]]:
    """Top-k most diff-similar (diff, comment) pairs, most similar first.

    Feeds prompts.fewshot_prompt, which renders them in reverse so the most
    similar exemplar lands next to the query. Callers iterating many queries
    over the same records should build the index once via build_index and use
    query() directly; this helper favors convenience.
    """
    by_id = {record.id: record for record in records}
    index = build_index([(r.id, r.diff.raw_text) for r in records], cfg, k1=k1, b=b)
    exclude = {exclude_id} if exclude_id is not None else None
    hits = query(index, diff.raw_text, k=k, exclude_doc_ids=exclude)
    return [(by_id[hit.doc_id].diff, by_id[hit.doc_id].comment) for hit in hits]


def save_index(path: str | Path, index: Bm25Index, comments: dict[str, str] | None = None) -> None:
    """Persist an index (and optional doc-id -> comment map) as versioned JSON."""
    payload = {
        "format": INDEX_FORMAT,
        "k1": index.k1,
        "b": index.b,
        "tokenizer": index.tokenizer.to_dict(),
        "doc_ids": list(index.doc_ids),
        "doc_lengths": list(index.doc_lengths),
        "avg_doc_len": index.avg_doc_len,
        "postings": {term: [list(p) for p in ps] for term, ps in index.postings.items()},
        "comments": comments or {},
    }
    Path(path).write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")


def load_index(path: str | Path) -> tuple[Bm25Index, dict[str, str]]:
    """Load a persisted index; IndexFormatError on corruption or wrong version."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:  # covers decode and JSON errors
        raise IndexFormatError(
            f"cannot read index file {path} (expected {INDEX_FORMAT}): {exc}"
        ) from exc
    if not isinstance(payload, dict) or payload.get("format") != INDEX_FORMAT:
        raise IndexFormatError(
            f"{path} is not a {INDEX_FORMAT} index file (format={payload.get('format')!r})"
            if isinstance(payload, dict)
            else f"{path} is not a {INDEX_FORMAT} index file"
        )
    try:
        index = Bm25Index(
            doc_ids=tuple(payload["doc_ids"]),
            doc_lengths=tuple(payload["doc_lengths"]),
            postings={
                term: tuple((int(o), int(tf)) for o, tf in ps)
                for term, ps in payload["postings"].items()
            },
            avg_doc_len=float(payload["avg_doc_len"]),
            k1=float(payload["k1"]),
            b=float(payload["b"]),
            tokenizer=CodeTokenizerConfig(**payload["tokenizer"]),
        )
        comments = dict(payload["comments"])
    except (KeyError, TypeError, ValueError) as exc:
        raise IndexFormatError(f"index file {path} is corrupt: {exc}") from exc
    return index, comments
