"""Candidate review comments, shared by retrieval, prompting, and the pipeline."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from revagent.corpus import IssueCategory


class CandidateSource(Enum):
    GENERATED = "generated"
    RETRIEVED = "retrieved"
    SENTINEL = "sentinel"
    # Used only by the critic training-corpus builder, which inserts the
    # ground-truth comment at its gold category slot.
    GROUND_TRUTH = "ground_truth"


def sentinel_text(category: IssueCategory) -> str:
    """Placeholder comment for an agent that declined to review."""
    return f"No revision needed from the {category.value} perspective."


@dataclass(frozen=True)
class CandidateComment:
    """One category-tagged candidate comment, generated or retrieved."""

    category: IssueCategory
    text: str
    source: CandidateSource
    declined: bool = False
    model_name: str | None = None

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("candidate text must be non-empty")
        if (self.source is CandidateSource.SENTINEL) != self.declined:
            raise ValueError("source is SENTINEL exactly when declined")
