"""Corpus data model: diff hunks, review records, loading, splitting, statistics.

A corpus is a JSONL file with one record per line:

    {"id"?: str, "diff": str, "comment": str, "category": str,
     "lang"?: str, "split"?: "train"|"test"}

Records labelled "others" are treated as noise and dropped (counted), as are
malformed lines. Category labels are parsed case-insensitively.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path


class EmptyInputError(ValueError):
    """Raised when a diff hunk text is empty or whitespace-only."""


class CorpusIOError(Exception):
    """Raised when a corpus file cannot be read or written."""


class CorpusSchemaError(Exception):
    """Raised when more than half of a corpus file's lines are malformed."""


class EmptyCorpusError(Exception):
    """Raised when an operation requires a non-empty corpus."""


class IssueCategory(Enum):
    """The issue taxonomy. OTHERS is parse-only and never stored in a corpus."""

    REFACTORING = "refactoring"
    BUGFIX = "bugfix"
    TESTING = "testing"
    LOGGING = "logging"
    DOCUMENTATION = "documentation"
    OTHERS = "others"

    @classmethod
    def parse(cls, label: str) -> "IssueCategory":
        """Case-insensitive parse of one of the six labels; ValueError otherwise."""
        try:
            return cls(label.strip().lower())
        except ValueError:
            raise ValueError(f"unknown issue category: {label!r}") from None

    @property
    def canonical_index(self) -> int:
        if self is IssueCategory.OTHERS:
            raise ValueError("OTHERS has no canonical position")
        return CANONICAL_CATEGORIES.index(self)


# Fixed ordering used everywhere candidates or corpora are laid out.
CANONICAL_CATEGORIES: tuple[IssueCategory, ...] = (
    IssueCategory.REFACTORING,
    IssueCategory.BUGFIX,
    IssueCategory.TESTING,
    IssueCategory.LOGGING,
    IssueCategory.DOCUMENTATION,
)


class LineMarker(Enum):
    ADDED = "added"
    REMOVED = "removed"
    CONTEXT = "context"


@dataclass(frozen=True)
class DiffLine:
    """One classified diff line.

    ``prefix`` keeps the exact characters stripped from the raw line ('+', '-',
    a single leading space on context lines, or '') so that
    ``prefix + content`` reproduces the raw line byte-exactly.
    """

    marker: LineMarker
    content: str
    prefix: str = ""


@dataclass(frozen=True)
class DiffHunk:
    """A parsed unified-diff fragment, the unit of review."""

    id: str
    raw_text: str
    lines: tuple[DiffLine, ...]
    language_tag: str | None = None

    def rejoin(self) -> str:
        """Reassemble the hunk from its lines; equals raw_text byte-exactly."""
        return "\n".join(line.prefix + line.content for line in self.lines)

    @property
    def line_count(self) -> int:
        return len(self.lines)


class Split(Enum):
    TRAIN = "train"
    TEST = "test"


@dataclass(frozen=True)
class ReviewRecord:
    """A (diff, ground-truth comment, gold category) corpus entry."""

    diff: DiffHunk
    comment: str
    category: IssueCategory
    split: Split | None = None

    @property
    def id(self) -> str:
        return self.diff.id


@dataclass(frozen=True)
class Corpus:
    records: tuple[ReviewRecord, ...]
    dropped_others: int = 0
    dropped_malformed: int = 0

    def __len__(self) -> int:
        return len(self.records)

    def by_category(self) -> dict[IssueCategory, tuple[ReviewRecord, ...]]:
        """Per-category sub-views; they partition the records exactly."""
        views: dict[IssueCategory, list[ReviewRecord]] = {
            c: [] for c in CANONICAL_CATEGORIES
        }
        for record in self.records:
            views[record.category].append(record)
        return {c: tuple(rs) for c, rs in views.items()}


@dataclass(frozen=True)
class CategoryStats:
    count: int
    avg_code_lines: float
    avg_comment_tokens: float


@dataclass(frozen=True)
class CorpusStats:
    per_category: dict[IssueCategory, CategoryStats]
    total: CategoryStats

    def to_dict(self) -> dict:
        out = {
            c.value: {
                "count": s.count,
                "avg_code_lines": s.avg_code_lines,
                "avg_comment_tokens": s.avg_comment_tokens,
            }
            for c, s in self.per_category.items()
        }
        out["total"] = {
            "count": self.total.count,
            "avg_code_lines": self.total.avg_code_lines,
            "avg_comment_tokens": self.total.avg_comment_tokens,
        }
        return out


def parse_diff_hunk(text: str, hunk_id: str = "", language_tag: str | None = None) -> DiffHunk:
    """Classify each line of ``text`` as added ('+' prefix), removed ('-'), or context.

    Prefixes are retained in raw_text and stripped from line content; a single
    leading space on context lines (the unified-diff context marker, when
    present) is likewise stripped but remembered, so rejoin() round-trips
    byte-exactly for any input.
    """
    if not text.strip():
        raise EmptyInputError("diff hunk text is empty or whitespace-only")
    lines = []
    for raw in text.split("\n"):
        if raw.startswith("+"):
            lines.append(DiffLine(LineMarker.ADDED, raw[1:], "+"))
        elif raw.startswith("-"):
            lines.append(DiffLine(LineMarker.REMOVED, raw[1:], "-"))
        elif raw.startswith(" "):
            lines.append(DiffLine(LineMarker.CONTEXT, raw[1:], " "))
        else:
            lines.append(DiffLine(LineMarker.CONTEXT, raw, ""))
    return DiffHunk(id=hunk_id, raw_text=text, lines=tuple(lines), language_tag=language_tag)


def _parse_record(obj: dict, line_no: int) -> ReviewRecord:
    """Build a ReviewRecord from one decoded JSONL object; raises on any defect."""
    diff_text = obj["diff"]
    comment = obj["comment"]
    category_label = obj["category"]
    if not isinstance(diff_text, str) or not isinstance(comment, str):
        raise ValueError("diff and comment must be strings")
    if not isinstance(category_label, str):
        raise ValueError("category must be a string")
    category = IssueCategory.parse(category_label)
    if category is IssueCategory.OTHERS:
        # Signalled to the caller so it lands in dropped_others, not malformed.
        raise _OthersRecord()
    if not comment.strip():
        raise ValueError("comment is empty after trimming")
    record_id = obj.get("id")
    if record_id is None:
        record_id = str(line_no)
    elif not isinstance(record_id, str):
        record_id = str(record_id)
    split = None
    if "split" in obj and obj["split"] is not None:
        split_label = str(obj["split"]).strip().lower()
        if split_label not in ("train", "test"):
            raise ValueError(f"invalid split value: {obj['split']!r}")
        split = Split(split_label)
    lang = obj.get("lang")
    if lang is not None and not isinstance(lang, str):
        raise ValueError("lang must be a string when present")
    diff = parse_diff_hunk(diff_text, hunk_id=record_id, language_tag=lang)
    return ReviewRecord(diff=diff, comment=comment, category=category, split=split)


class _OthersRecord(Exception):
    pass


def load_corpus(path: str | Path) -> Corpus:
    """Load a JSONL corpus, dropping OTHERS records and malformed lines (counted).

    Blank lines are ignored entirely. Ids are synthesized from 1-based line
    numbers when absent; a duplicate id makes the later line malformed, keeping
    record ids unique. Raises CorpusSchemaError when more than half of the
    non-blank lines are malformed (a sign the file is not a corpus at all).
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CorpusIOError(f"cannot read corpus file {path}: {exc}") from exc

    records: list[ReviewRecord] = []
    seen_ids: set[str] = set()
    dropped_others = 0
    dropped_malformed = 0
    considered = 0
    for line_no, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        considered += 1
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise ValueError("line is not a JSON object")
            record = _parse_record(obj, line_no)
            if record.id in seen_ids:
                raise ValueError(f"duplicate record id: {record.id!r}")
        except _OthersRecord:
            dropped_others += 1
            continue
        except (KeyError, ValueError, EmptyInputError):
            dropped_malformed += 1
            continue
        seen_ids.add(record.id)
        records.append(record)

    if considered > 0 and dropped_malformed * 2 > considered:
        raise CorpusSchemaError(
            f"{dropped_malformed} of {considered} lines are malformed; "
            f"{path} does not look like a review corpus"
        )
    return Corpus(
        records=tuple(records),
        dropped_others=dropped_others,
        dropped_malformed=dropped_malformed,
    )


def split_corpus(corpus: Corpus, train_fraction: float, seed: int) -> tuple[Corpus, Corpus]:
    """Deterministic stratified split into (train, test).

    Each category is split independently: its records are sorted by id,
    shuffled with a single ``random.Random(seed)`` consumed in canonical
    category order, and the first floor(n * train_fraction) go to train.
    Record order within each output follows the input corpus order.
    """
    if not 0 < train_fraction < 1:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    if not corpus.records:
        raise EmptyCorpusError("cannot split an empty corpus")

    rng = random.Random(seed)
    train_ids: set[str] = set()
    views = corpus.by_category()
    for category in CANONICAL_CATEGORIES:
        ids = sorted(record.id for record in views[category])
        rng.shuffle(ids)
        n_train = math.floor(len(ids) * train_fraction)
        train_ids.update(ids[:n_train])

    train = [replace(r, split=Split.TRAIN) for r in corpus.records if r.id in train_ids]
    test = [replace(r, split=Split.TEST) for r in corpus.records if r.id not in train_ids]
    return Corpus(records=tuple(train)), Corpus(records=tuple(test))


def partition_by_split(corpus: Corpus) -> tuple[Corpus, Corpus]:
    """Partition by the records' own split labels (for corpora shipped pre-split).

    Records without a split label land in train.
    """
    train = [r for r in corpus.records if r.split is not Split.TEST]
    test = [r for r in corpus.records if r.split is Split.TEST]
    return Corpus(records=tuple(train)), Corpus(records=tuple(test))


def _mean(values: list[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def comment_token_count(comment: str) -> int:
    """Whitespace-token count; the corpus tables' token column uses this."""
    return len(comment.split())


def compute_stats(corpus: Corpus) -> CorpusStats:
    """Per-category and total record counts with mean diff lines / comment tokens."""
    per_category: dict[IssueCategory, CategoryStats] = {}
    for category, records in corpus.by_category().items():
        per_category[category] = CategoryStats(
            count=len(records),
            avg_code_lines=_mean([float(r.diff.line_count) for r in records]),
            avg_comment_tokens=_mean([float(comment_token_count(r.comment)) for r in records]),
        )
    total = CategoryStats(
        count=len(corpus.records),
        avg_code_lines=_mean([float(r.diff.line_count) for r in corpus.records]),
        avg_comment_tokens=_mean(
            [float(comment_token_count(r.comment)) for r in corpus.records]
        ),
    )
    return CorpusStats(per_category=per_category, total=total)
