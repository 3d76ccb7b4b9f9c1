"""Text-similarity metrics (BLEU-4, ROUGE-L, METEOR, SBERT cosine) and reports.

All metrics share one tokenizer (lowercase, whitespace split, punctuation
isolated) and return values in [0, 100].

BLEU-4 is sentence-level with add-one smoothing on n >= 2 precisions whose raw
match count is zero. ROUGE-L is the LCS F1 (beta = 1). METEOR is the
exact-match variant: unigram alignment maximizing matches then minimizing
chunks, Fmean = 10PR / (R + 9P), penalty = 0.5 * (chunks / matches)^3.
SBERT similarity delegates embedding to a provider (HTTP service or the
deterministic hashed bag-of-words mock).
"""

from __future__ import annotations

import hashlib
import math
import re
from collections import Counter
from dataclasses import dataclass

import requests

from revagent.corpus import CANONICAL_CATEGORIES, IssueCategory


class EmptyInputError(ValueError):
    pass


class EmbedderUnavailableError(Exception):
    pass


_TOKEN = re.compile(r"\w+|[^\w\s]")


def metric_tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, isolate punctuation as separate tokens."""
    return _TOKEN.findall(text.lower())


def _ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu4(candidate: str, reference: str) -> float:
    """Sentence-level BLEU-4 with brevity penalty, scaled to [0, 100]."""
    cand = metric_tokenize(candidate)
    ref = metric_tokenize(reference)
    if not cand:
        return 0.0

    log_precision_sum = 0.0
    for n in range(1, 5):
        cand_ngrams = _ngram_counts(cand, n)
        ref_ngrams = _ngram_counts(ref, n)
        total = max(len(cand) - n + 1, 0)
        matched = sum(min(count, ref_ngrams[gram]) for gram, count in cand_ngrams.items())
        if n == 1:
            if matched == 0:
                return 0.0
            precision = matched / total
        elif matched > 0:
            precision = matched / total
        else:
            precision = 1.0 / (total + 1)
        log_precision_sum += math.log(precision)

    brevity = math.exp(1.0 - len(ref) / len(cand)) if len(cand) < len(ref) else 1.0
    return brevity * math.exp(log_precision_sum / 4.0) * 100.0


def _lcs_length(a: list[str], b: list[str]) -> int:
    # Rolling single-row LCS; the test oracle keeps the full O(nm) matrix.
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for token in a:
        current = [0]
        for j, other in enumerate(b, start=1):
            if token == other:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[-1]


def rouge_l(candidate: str, reference: str) -> float:
    """LCS-based F1 (beta = 1), scaled to [0, 100]."""
    cand = metric_tokenize(candidate)
    ref = metric_tokenize(reference)
    lcs = _lcs_length(cand, ref)
    precision = lcs / len(cand) if cand else 0.0
    recall = lcs / len(ref) if ref else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall) * 100.0


_ALIGNMENT_NODE_BUDGET = 80000


def _alignment_stats(cand: list[str], ref: list[str]) -> tuple[int, int]:
    """(matches, chunks) of the exact-match alignment that first maximizes
    matches, then minimizes chunks.

    Branch-and-bound over contiguous alignment blocks taken in candidate
    order. Consuming a block of length L lowers the attainable match count by
    exactly L, so any disjoint block cover completes to a maximum alignment;
    skipping a candidate token is only legal while its occurrences outnumber
    the reference's remaining supply. The search is seeded with a greedy
    longest-block cover and pruned with a per-suffix block-length bound.

    Chunk minimization is NP-hard in general, so the search carries a
    deterministic node budget; pathological inputs (long strings over a
    handful of repeated tokens) deterministically fall back to the best cover
    found, which is at worst the greedy one. At review-comment scale the
    budget is never reached and the result is exact.
    """
    cand_counts = Counter(cand)
    ref_counts = Counter(ref)
    matches = sum(min(count, ref_counts[token]) for token, count in cand_counts.items())
    if matches == 0:
        return 0, 0

    n, m = len(cand), len(ref)
    ref_free = [True] * m
    cand_free = [True] * n

    def block_table() -> list[list[int]]:
        # table[i][j] = longest common block starting at (i, j) over free cells
        table = [[0] * (m + 1) for _ in range(n + 1)]
        for i in range(n - 1, -1, -1):
            if not cand_free[i]:
                continue
            row, nxt, token = table[i], table[i + 1], cand[i]
            for j in range(m - 1, -1, -1):
                if ref_free[j] and ref[j] == token:
                    row[j] = 1 + nxt[j + 1]
        return table

    def greedy_cover() -> int:
        # repeatedly take the longest block; any disjoint cover is feasible
        taken = []
        remaining = matches
        blocks = 0
        while remaining > 0:
            table = block_table()
            best_len, best_at = 0, (0, 0)
            for i in range(n):
                row = table[i]
                for j in range(m):
                    if row[j] > best_len:
                        best_len, best_at = row[j], (i, j)
            i, j = best_at
            for offset in range(min(best_len, remaining)):
                cand_free[i + offset] = False
                ref_free[j + offset] = False
                taken.append((i + offset, j + offset))
            remaining -= min(best_len, remaining)
            blocks += 1
        for i, j in taken:
            cand_free[i] = True
            ref_free[j] = True
        return blocks

    best = greedy_cover()
    if best == 1:
        return matches, 1

    # longest block with candidate start >= i over the untouched strings; an
    # upper bound for any block the remaining search can still take
    full_table = block_table()
    suffix_lmax = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix_lmax[i] = max(suffix_lmax[i + 1], max(full_table[i][:m], default=0))

    ref_positions: dict[str, list[int]] = {}
    for j, token in enumerate(ref):
        ref_positions.setdefault(token, []).append(j)

    nodes = 0

    def search(i: int, remaining: int, used: int) -> None:
        nonlocal best, nodes
        if remaining == 0:
            best = min(best, used)
            return
        if i >= n:
            return
        lmax = suffix_lmax[i]
        if lmax == 0 or used + (remaining + lmax - 1) // lmax >= best:
            return
        nodes += 1
        if nodes > _ALIGNMENT_NODE_BUDGET:
            return
        token = cand[i]
        extensions = []
        for j in ref_positions.get(token, ()):
            if not ref_free[j]:
                continue
            limit = 0
            while (
                i + limit < n
                and j + limit < m
                and ref_free[j + limit]
                and cand[i + limit] == ref[j + limit]
            ):
                limit += 1
            if limit:
                extensions.append((limit, j))
        extensions.sort(reverse=True)  # long blocks first finds tight bounds early
        for limit, j in extensions:
            for length in range(limit, 0, -1):
                for offset in range(length):
                    ref_free[j + offset] = False
                    ref_counts[ref[j + offset]] -= 1
                    cand_counts[cand[i + offset]] -= 1
                search(i + length, remaining - length, used + 1)
                for offset in range(length):
                    ref_free[j + offset] = True
                    ref_counts[ref[j + offset]] += 1
                    cand_counts[cand[i + offset]] += 1
        if cand_counts[token] > ref_counts[token]:
            cand_counts[token] -= 1
            search(i + 1, remaining, used)
            cand_counts[token] += 1

    search(0, matches, 0)
    return matches, best


def meteor(candidate: str, reference: str) -> float:
    """Exact-match METEOR (no stemming or synonymy), scaled to [0, 100]."""
    cand = metric_tokenize(candidate)
    ref = metric_tokenize(reference)
    matches, chunks = _alignment_stats(cand, ref)
    if matches == 0:
        return 0.0
    precision = matches / len(cand)
    recall = matches / len(ref)
    fmean = 10.0 * precision * recall / (recall + 9.0 * precision)
    penalty = 0.5 * (chunks / matches) ** 3
    return fmean * (1.0 - penalty) * 100.0


# --- embedding providers -----------------------------------------------------

MOCK_EMBEDDER_DIM = 256


def hashed_bow_vector(text: str, dim: int = MOCK_EMBEDDER_DIM) -> list[float]:
    """Deterministic hashed bag-of-words embedding.

    For each whitespace token of the lowercased text: h = sha256(utf-8 bytes);
    index = first 4 digest bytes (big-endian) mod dim; sign = +1 if the fifth
    digest byte is even else -1; add sign at index. The vector is then
    L2-normalized (zero vectors are returned as-is).
    """
    vector = [0.0] * dim
    for token in text.lower().split():
        digest = hashlib.sha256(token.encode("utf-8")).digest()
        index = int.from_bytes(digest[:4], "big") % dim
        sign = 1.0 if digest[4] % 2 == 0 else -1.0
        vector[index] += sign
    norm = math.sqrt(sum(v * v for v in vector))
    if norm > 0.0:
        vector = [v / norm for v in vector]
    return vector


class MockEmbedder:
    """Offline embedding provider used wherever tests must avoid the network."""

    model_name = "hashed-bow-mock"

    def __init__(self, dim: int = MOCK_EMBEDDER_DIM):
        self.dim = dim

    def embed(self, texts: list[str]) -> list[list[float]]:
        return [hashed_bow_vector(text, self.dim) for text in texts]


class FixedEmbedder:
    """Maps exact strings to preset vectors; unknown text is an error."""

    model_name = "fixed"

    def __init__(self, vectors: dict[str, list[float]]):
        self.vectors = vectors

    def embed(self, texts: list[str]) -> list[list[float]]:
        return [list(self.vectors[text]) for text in texts]


class HttpEmbedder:
    """Client for the embedding service's POST /embed endpoint."""

    def __init__(self, endpoint: str, batch_size: int = 64, timeout_seconds: float = 60.0):
        self.endpoint = endpoint.rstrip("/")
        self.batch_size = batch_size
        self.timeout_seconds = timeout_seconds
        self.model_name = endpoint

    def embed(self, texts: list[str]) -> list[list[float]]:
        vectors: list[list[float]] = []
        for start in range(0, len(texts), self.batch_size):
            batch = texts[start : start + self.batch_size]
            try:
                response = requests.post(
                    f"{self.endpoint}/embed",
                    json={"texts": batch},
                    timeout=self.timeout_seconds,
                )
            except requests.RequestException as exc:
                raise EmbedderUnavailableError(f"{self.endpoint}/embed unreachable: {exc}") from exc
            if response.status_code != 200:
                raise EmbedderUnavailableError(
                    f"{self.endpoint}/embed returned HTTP {response.status_code}"
                )
            try:
                vectors.extend(response.json()["vectors"])
            except (ValueError, KeyError, TypeError) as exc:
                raise EmbedderUnavailableError(f"bad embed response: {exc}") from exc
        return vectors


def cosine_similarity(a: list[float], b: list[float]) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    norm_a = math.sqrt(sum(x * x for x in a))
    norm_b = math.sqrt(sum(y * y for y in b))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return max(-1.0, min(1.0, dot / (norm_a * norm_b)))


def sbert_sim(candidate: str, reference: str, embedder) -> float:
    """Cosine similarity of the two embedding vectors, scaled to [-100, 100]."""
    vec_c, vec_r = embedder.embed([candidate, reference])
    return cosine_similarity(vec_c, vec_r) * 100.0


# --- records and reports ------------------------------------------------------


@dataclass(frozen=True)
class EvalRecord:
    diff_id: str
    generated_comment: str
    reference_comment: str
    gold_category: IssueCategory
    predicted_category: IssueCategory | None = None

    def __post_init__(self) -> None:
        if not self.reference_comment.strip():
            raise ValueError("reference comment must be non-empty")


@dataclass(frozen=True)
class EvalTally:
    c_correct: int
    c_total: int

    def __post_init__(self) -> None:
        if not 0 <= self.c_correct <= self.c_total:
            raise ValueError("tally requires 0 <= correct <= total")

    @property
    def percentage(self) -> float:
        return 100.0 * self.c_correct / self.c_total if self.c_total else 0.0


def pred_accuracy(records: list[EvalRecord]) -> tuple[EvalTally, float]:
    """Share of records whose predicted category equals gold, as a percentage."""
    if not records:
        raise EmptyInputError("no records to score")
    missing = [r.diff_id for r in records if r.predicted_category is None]
    if missing:
        raise ValueError(f"records without predicted category: {missing[:5]}")
    correct = sum(1 for r in records if r.predicted_category is r.gold_category)
    tally = EvalTally(c_correct=correct, c_total=len(records))
    return tally, tally.percentage


@dataclass(frozen=True)
class MetricRow:
    count: int
    bleu: float
    rouge_l: float
    meteor: float
    sbert: float
    pred_acc: float | None
    pred_tally: EvalTally | None

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "bleu": self.bleu,
            "rouge_l": self.rouge_l,
            "meteor": self.meteor,
            "sbert": self.sbert,
            "pred_acc": self.pred_acc,
            "pred_correct": self.pred_tally.c_correct if self.pred_tally else None,
            "pred_total": self.pred_tally.c_total if self.pred_tally else None,
        }


@dataclass(frozen=True)
class MetricReport:
    per_category: dict[IssueCategory, MetricRow]
    aggregate: MetricRow

    def to_dict(self) -> dict:
        return {
            "per_category": {c.value: row.to_dict() for c, row in self.per_category.items()},
            "aggregate": self.aggregate.to_dict(),
        }


def _mean(values: list[float]) -> float:
    # summing in sorted order keeps report means permutation-invariant bitwise
    return sum(sorted(values)) / len(values) if values else 0.0


def _row(scores: list[tuple[float, float, float, float]], records: list[EvalRecord]) -> MetricRow:
    predicted = [r for r in records if r.predicted_category is not None]
    tally = None
    acc = None
    if predicted:
        tally, acc = pred_accuracy(predicted)
    return MetricRow(
        count=len(records),
        bleu=_mean([s[0] for s in scores]),
        rouge_l=_mean([s[1] for s in scores]),
        meteor=_mean([s[2] for s in scores]),
        sbert=_mean([s[3] for s in scores]),
        pred_acc=acc,
        pred_tally=tally,
    )


def evaluate(records: list[EvalRecord], embedder) -> MetricReport:
    """Per-gold-category and aggregate metric means.

    Aggregate rows are arithmetic means over records, not means of category
    means. Records without a predicted category (merge-mode outputs) count in
    the text metrics but are excluded from prediction-accuracy denominators.
    """
    if not records:
        raise EmptyInputError("no records to evaluate")
    generated = [r.generated_comment for r in records]
    references = [r.reference_comment for r in records]
    vectors = embedder.embed(generated + references)
    scores = []
    for i, record in enumerate(records):
        sbert = cosine_similarity(vectors[i], vectors[len(records) + i]) * 100.0
        scores.append(
            (
                bleu4(record.generated_comment, record.reference_comment),
                rouge_l(record.generated_comment, record.reference_comment),
                meteor(record.generated_comment, record.reference_comment),
                sbert,
            )
        )

    per_category = {}
    for category in CANONICAL_CATEGORIES:
        pairs = [(s, r) for s, r in zip(scores, records) if r.gold_category is category]
        per_category[category] = _row([s for s, _ in pairs], [r for _, r in pairs])
    aggregate = _row(scores, records)
    return MetricReport(per_category=per_category, aggregate=aggregate)


def render_table(report: MetricReport) -> str:
    """Plain-text table with one row per category plus the record-weighted total."""
    header = f"{'Category':<14}{'Count':>7}{'BLEU':>8}{'ROUGE-L':>9}{'METEOR':>8}{'SBERT':>8}{'Pred.Acc.':>11}"
    lines = [header, "-" * len(header)]

    def fmt(name: str, row: MetricRow) -> str:
        acc = f"{row.pred_acc:.2f}%" if row.pred_acc is not None else "-"
        return (
            f"{name:<14}{row.count:>7}{row.bleu:>8.2f}{row.rouge_l:>9.2f}"
            f"{row.meteor:>8.2f}{row.sbert:>8.2f}{acc:>11}"
        )

    for category in CANONICAL_CATEGORIES:
        lines.append(fmt(category.value.capitalize(), report.per_category[category]))
    lines.append("-" * len(header))
    lines.append(fmt("Total", report.aggregate))
    return "\n".join(lines)
