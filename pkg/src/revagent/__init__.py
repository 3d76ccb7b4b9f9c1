"""Issue-oriented multi-agent review comment generation."""

from revagent.corpus import (
    CANONICAL_CATEGORIES,
    Corpus,
    DiffHunk,
    IssueCategory,
    ReviewRecord,
    compute_stats,
    load_corpus,
    parse_diff_hunk,
    split_corpus,
)
from revagent.candidates import CandidateComment, CandidateSource
from revagent.pipeline import PipelineConfig, ReviewMode, ReviewOutput, review, run_review

__all__ = [
    "CANONICAL_CATEGORIES",
    "CandidateComment",
    "CandidateSource",
    "Corpus",
    "DiffHunk",
    "IssueCategory",
    "PipelineConfig",
    "ReviewMode",
    "ReviewOutput",
    "ReviewRecord",
    "compute_stats",
    "load_corpus",
    "parse_diff_hunk",
    "review",
    "run_review",
    "split_corpus",
]
