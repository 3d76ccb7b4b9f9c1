"""Instruction-tuning corpus builders for the commentator and critic agents.

Commentator corpora partition the training split by gold category. Critic
instances pair each diff with five comments: the ground truth at its gold
category slot plus one candidate per remaining category, retrieved by BM25
over diff text (or generated by commentator backends in the ablation mode).
Export format is {"instruction", "input", "output"} JSONL.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from revagent.backend import GenerationRequest, parse_commentator_response
from revagent.candidates import CandidateComment, CandidateSource
from revagent.corpus import (
    CANONICAL_CATEGORIES,
    Corpus,
    IssueCategory,
    ReviewRecord,
)
from revagent.prompts import (
    commentator_instruction,
    commentator_prompt,
    critic_input_block,
    critic_instruction,
)
from revagent.retrieval import (
    CategoryIndices,
    CodeTokenizerConfig,
    EmptyCategoryIndexError,
    NoHitError,
    build_index,
    ccr,
)

logger = logging.getLogger(__name__)


class CandidateMode(Enum):
    CCR = "ccr"
    GENERATED = "generated"


@dataclass(frozen=True)
class TrainingInstance:
    instruction: str
    input: str
    output: str

    def __post_init__(self) -> None:
        if not (self.instruction and self.input and self.output):
            raise ValueError("training instance fields must be non-empty")


@dataclass
class CriticCorpusReport:
    instances: int = 0
    # category label -> {source label -> slot count}; ground-truth slots included.
    histogram: dict[str, dict[str, int]] = field(default_factory=dict)
    ccr_fallbacks: int = 0

    def bump(self, category: IssueCategory, source: str) -> None:
        per_source = self.histogram.setdefault(category.value, {})
        per_source[source] = per_source.get(source, 0) + 1

    def slot_total(self) -> int:
        return sum(n for sources in self.histogram.values() for n in sources.values())

    def to_dict(self) -> dict:
        return {
            "instances": self.instances,
            "histogram": self.histogram,
            "ccr_fallbacks": self.ccr_fallbacks,
        }


def build_commentator_corpora(train: Corpus) -> dict[IssueCategory, list[TrainingInstance]]:
    """Partition the train split into five category-specific corpora.

    Each record becomes one instance in its gold category's corpus, so the
    corpora are pairwise disjoint and jointly exhaustive.
    """
    corpora: dict[IssueCategory, list[TrainingInstance]] = {
        c: [] for c in CANONICAL_CATEGORIES
    }
    for record in train.records:
        corpora[record.category].append(
            TrainingInstance(
                instruction=commentator_instruction(record.category),
                input=record.diff.raw_text,
                output=record.comment,
            )
        )
    for category, instances in corpora.items():
        if not instances:
            logger.warning("no training records for category %s", category.value)
    return corpora


def build_category_indices(
    train: Corpus,
    cfg: CodeTokenizerConfig = CodeTokenizerConfig(),
    k1: float = 1.2,
    b: float = 0.75,
) -> CategoryIndices:
    """One BM25 index (over diff text) plus id->comment map per non-empty category."""
    indices: CategoryIndices = {}
    for category, records in train.by_category().items():
        if not records:
            continue
        index = build_index([(r.id, r.diff.raw_text) for r in records], cfg, k1=k1, b=b)
        comments = {r.id: r.comment for r in records}
        indices[category] = (index, comments)
    return indices


def _longest_comment_record(records: tuple[ReviewRecord, ...]) -> ReviewRecord:
    # Deterministic no-hit fallback: longest comment, ties to the smallest id.
    return sorted(records, key=lambda r: (-len(r.comment), r.id))[0]


def _retrieved_candidate(
    record: ReviewRecord,
    category: IssueCategory,
    indices: CategoryIndices,
    fallbacks: dict[IssueCategory, ReviewRecord],
    report: CriticCorpusReport,
) -> CandidateComment:
    try:
        candidate = ccr(record.diff, category, indices, exclude_doc_id=record.id)
        report.bump(category, "retrieved")
        return candidate
    except NoHitError:
        fallback = fallbacks[category]
        report.ccr_fallbacks += 1
        report.bump(category, "fallback")
        return CandidateComment(
            category=category, text=fallback.comment, source=CandidateSource.RETRIEVED
        )


def _generated_candidate(
    record: ReviewRecord,
    category: IssueCategory,
    backends: dict[IssueCategory, object],
    report: CriticCorpusReport,
    temperature: float,
    max_tokens: int,
) -> CandidateComment:
    backend = backends[category]
    prompt = commentator_prompt(category, record.diff)
    result = backend.complete(
        GenerationRequest.from_prompt(prompt, temperature=temperature, max_tokens=max_tokens)
    )
    candidate = parse_commentator_response(result.text, category)
    report.bump(category, candidate.source.value)
    return candidate


def build_critic_corpus(
    train: Corpus,
    mode: CandidateMode = CandidateMode.CCR,
    backends: dict[IssueCategory, object] | None = None,
    cfg: CodeTokenizerConfig = CodeTokenizerConfig(),
    k1: float = 1.2,
    b: float = 0.75,
    temperature: float = 0.0,
    max_tokens: int = 512,
) -> tuple[list[TrainingInstance], CriticCorpusReport]:
    """Build the critic's training corpus: one instance per train record.

    For each record the four non-gold categories get one candidate apiece; the
    ground-truth comment occupies its own category slot. In CCR mode the
    candidates come from per-category BM25 retrieval with the querying record
    excluded from its own category's index (self-exclusion); a query with no
    token overlap falls back to the category's longest comment, counted in
    ccr_fallbacks. In GENERATED mode the four candidates come from commentator
    backends (exactly four calls per record).
    """
    report = CriticCorpusReport()
    views = train.by_category()
    if mode is CandidateMode.CCR:
        indices = build_category_indices(train, cfg, k1=k1, b=b)
        fallbacks = {
            category: _longest_comment_record(records)
            for category, records in views.items()
            if records
        }
    else:
        if backends is None:
            raise ValueError("GENERATED mode requires commentator backends")
        indices = {}
        fallbacks = {}

    missing = [c.value for c in CANONICAL_CATEGORIES if not views[c]]
    if missing:
        raise EmptyCategoryIndexError(
            f"critic corpus needs at least one record per category; empty: {', '.join(missing)}"
        )

    instances: list[TrainingInstance] = []
    for record in train.records:
        slots: list[CandidateComment] = []
        for category in CANONICAL_CATEGORIES:
            if category is record.category:
                slots.append(
                    CandidateComment(
                        category=category,
                        text=record.comment,
                        source=CandidateSource.GROUND_TRUTH,
                    )
                )
                report.bump(category, "ground_truth")
            elif mode is CandidateMode.CCR:
                slots.append(_retrieved_candidate(record, category, indices, fallbacks, report))
            else:
                slots.append(
                    _generated_candidate(
                        record, category, backends, report, temperature, max_tokens
                    )
                )
        instances.append(
            TrainingInstance(
                instruction=critic_instruction(),
                input=critic_input_block(record.diff, slots),
                output=(
                    f"Selected Category: {record.category.value}\n"
                    f"Review Comment: {record.comment}"
                ),
            )
        )
    report.instances = len(instances)
    return instances, report


def export_jsonl(instances: list[TrainingInstance], path: str | Path) -> int:
    """Write instances as UTF-8 JSONL; returns the number of lines written."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        for instance in instances:
            handle.write(
                json.dumps(
                    {
                        "instruction": instance.instruction,
                        "input": instance.input,
                        "output": instance.output,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    return len(instances)


def load_jsonl(path: str | Path) -> list[TrainingInstance]:
    """Inverse of export_jsonl; re-importing an export yields equal instances."""
    instances = []
    for line in Path(path).read_text(encoding="utf-8").split("\n"):
        if not line.strip():
            continue
        obj = json.loads(line)
        instances.append(
            TrainingInstance(
                instruction=obj["instruction"], input=obj["input"], output=obj["output"]
            )
        )
    return instances
