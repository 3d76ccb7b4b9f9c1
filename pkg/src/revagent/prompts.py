"""Deterministic rendering of commentator, critic, few-shot, and merge prompts.

Every renderer is a pure function of its inputs and produces byte-stable text;
the test suite pins the output against golden snapshot files. Prompts carry a
system message with the reviewer role sentence plus a user message with the
rest; concatenating the message contents reproduces ``rendered`` exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from revagent.candidates import CandidateComment
from revagent.corpus import CANONICAL_CATEGORIES, DiffHunk, IssueCategory


class OthersCategoryError(ValueError):
    pass


class WrongCandidateCountError(ValueError):
    pass


class DuplicateCategoryError(ValueError):
    pass


class NoExemplarsError(ValueError):
    pass


class TooManyExemplarsError(ValueError):
    pass


class MessageRole(Enum):
    SYSTEM = "system"
    USER = "user"


@dataclass(frozen=True)
class PromptText:
    rendered: str
    role_messages: tuple[tuple[MessageRole, str], ...]

    def __post_init__(self) -> None:
        joined = "".join(content for _, content in self.role_messages)
        if joined != self.rendered:
            raise ValueError("role messages must concatenate to rendered text")


# One review directive per category; each appears in exactly one commentator
# template and nowhere else.
DIRECTIVES: dict[IssueCategory, str] = {
    IssueCategory.REFACTORING: (
        "The diff hunk needs to be revised to refactor the code to improve its quality."
    ),
    IssueCategory.BUGFIX: "The diff hunk needs to be revised to fix one or more bugs.",
    IssueCategory.TESTING: (
        "The diff hunk needs to be revised since tests for this code must be written."
    ),
    IssueCategory.LOGGING: (
        "The diff hunk needs to be revised to improve the logging of its execution."
    ),
    IssueCategory.DOCUMENTATION: (
        "The diff hunk needs to be revised to be more compliant with the documentation "
        "specification."
    ),
}

ROLE_SENTENCE = "[Role] You are an expert code reviewer."

PLUS_MINUS_NOTE = (
    "[Note] Note that code changes may be marked: Code lines that begin with a plus (+) "
    "sign indicate new code, while those that begin with a minus (-) sign indicate "
    "deleted code."
)

COMMENT_FOOTER = "Please output the review comment in the following format:\n\nReview Comment:..."

CRITIC_TASK = (
    "[Task] There is a code review process where a diff hunk is analyzed from five "
    "perspectives: 'refactoring', 'bugfix', 'testing', 'logging', and 'documentation', "
    "and then the review comments are generated.\n"
    "After analysis from these different perspectives by category-specific commentator "
    "agents, you are required to evaluate the five review comments generated and select "
    "the comment that best aligns with the issues present in the target diff hunk."
)

MERGE_SENTENCE = "Please read these review comments and merge the suitable review comments."

MSC_TASK = (
    "[Task] There is a code review process where a diff hunk is analyzed from five "
    "perspectives: 'refactoring', 'bugfix', 'testing', 'logging', and 'documentation', "
    "and then the review comments are generated.\n" + MERGE_SENTENCE
)

CRITIC_DUTY = (
    "[Duty] As a meticulous and harsh critic, your duty is to scrutinize these review "
    "comments and evaluate the identified issues with scores in terms of correctness."
)

CRITIC_FOOTER = (
    "Please output your selection in the following format:\n\n"
    "Selected Category: <category>\nReview Comment: <text>"
)

MSC_FOOTER = "Please output the merged review comment in the following format:\n\nReview Comment: <text>"


def _require_reviewable(category: IssueCategory) -> None:
    if category is IssueCategory.OTHERS:
        raise OthersCategoryError("no commentator exists for the OTHERS category")


def _split_role(rendered: str) -> PromptText:
    """Package rendered text as a system (role sentence) + user message pair."""
    head = ROLE_SENTENCE + "\n\n"
    assert rendered.startswith(head)
    return PromptText(
        rendered=rendered,
        role_messages=(
            (MessageRole.SYSTEM, head),
            (MessageRole.USER, rendered[len(head):]),
        ),
    )


def commentator_instruction(category: IssueCategory) -> str:
    """Prompt head (role, task with embedded directive, plus/minus note)."""
    _require_reviewable(category)
    directive = DIRECTIVES[category]
    embedded = directive[0].lower() + directive[1:]
    task = (
        f"[Task] Give you a diff hunk, your task is to decide whether {embedded}\n"
        "If the response to the above point is True, then write a code review."
    )
    return f"{ROLE_SENTENCE}\n\n{task}\n\n{PLUS_MINUS_NOTE}"


def commentator_prompt(category: IssueCategory, diff: DiffHunk) -> PromptText:
    """Full single-shot commentator prompt for one category."""
    rendered = (
        f"{commentator_instruction(category)}\n\n"
        f"For the new diff hunk:\n\n{diff.raw_text}\n\n{COMMENT_FOOTER}"
    )
    return _split_role(rendered)


def fewshot_prompt(
    category: IssueCategory,
    diff: DiffHunk,
    exemplars: list[tuple[DiffHunk, str]],
) -> PromptText:
    """Commentator prompt with retrieved (diff -> comment) examples.

    Exemplars must arrive in retrieval-rank order (most similar first); they
    are rendered in reverse so the most similar example sits right before the
    query diff.
    """
    _require_reviewable(category)
    if not exemplars:
        raise NoExemplarsError("few-shot prompt needs at least one exemplar")
    if len(exemplars) > 8:
        raise TooManyExemplarsError(f"at most 8 exemplars supported, got {len(exemplars)}")
    blocks = [
        f"For the diff hunk:\n\n{ex_diff.raw_text}\n\nReview Comment: {ex_comment}"
        for ex_diff, ex_comment in reversed(exemplars)
    ]
    rendered = (
        f"{commentator_instruction(category)}\n\n"
        "Here are some examples of diff hunks and their review comments:\n\n"
        + "\n\n".join(blocks)
        + f"\n\nFor the new diff hunk:\n\n{diff.raw_text}\n\n{COMMENT_FOOTER}"
    )
    return _split_role(rendered)


def canonical_candidates(candidates: list[CandidateComment]) -> list[CandidateComment]:
    if len(candidates) != 5:
        raise WrongCandidateCountError(f"expected 5 candidates, got {len(candidates)}")
    by_category: dict[IssueCategory, CandidateComment] = {}
    for candidate in candidates:
        if candidate.category in by_category:
            raise DuplicateCategoryError(f"duplicate candidate category: {candidate.category.value}")
        by_category[candidate.category] = candidate
    if set(by_category) != set(CANONICAL_CATEGORIES):
        raise DuplicateCategoryError("candidates must cover the five review categories")
    return [by_category[c] for c in CANONICAL_CATEGORIES]


def candidate_block(candidates: list[CandidateComment]) -> str:
    """The five candidates, each labelled with its category, in canonical order."""
    ordered = canonical_candidates(candidates)
    return "\n\n".join(f"[{c.category.value}] {c.text}" for c in ordered)


def critic_instruction() -> str:
    return f"{ROLE_SENTENCE}\n\n{CRITIC_TASK}\n\n{CRITIC_DUTY}"


def critic_input_block(diff: DiffHunk, candidates: list[CandidateComment]) -> str:
    """Diff plus labelled candidates, shared by the live prompt and training data."""
    return (
        f"For the target diff hunk:\n\n{diff.raw_text}\n\n"
        f"The five review comments are:\n\n{candidate_block(candidates)}"
    )


def critic_prompt(diff: DiffHunk, candidates: list[CandidateComment]) -> PromptText:
    """Selection prompt: evaluate five candidates, pick one category + comment."""
    rendered = (
        f"{critic_instruction()}\n\n{critic_input_block(diff, candidates)}\n\n{CRITIC_FOOTER}"
    )
    return _split_role(rendered)


def msc_critic_prompt(diff: DiffHunk, candidates: list[CandidateComment]) -> PromptText:
    """Merge variant: the critic combines suitable comments instead of selecting."""
    rendered = (
        f"{ROLE_SENTENCE}\n\n{MSC_TASK}\n\n{CRITIC_DUTY}\n\n"
        f"{critic_input_block(diff, candidates)}\n\n{MSC_FOOTER}"
    )
    return _split_role(rendered)
