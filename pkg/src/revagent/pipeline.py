"""Two-stage review orchestration: candidate generation, then critic selection.

The five commentator calls are independent and may run in parallel; the critic
call strictly follows all five. A commentator failure aborts the run, since
the critic contract is exactly five comments. Ablation variants (single
fusion agent, merge-mode critic) are configuration presets over the same
machinery, not code forks.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum

from revagent.backend import (
    CriticVerdict,
    GenerationRequest,
    UnparseableVerdictError,
    parse_commentator_response,
    parse_critic_response,
    parse_msc_response,
)
from revagent.candidates import CandidateComment
from revagent.corpus import CANONICAL_CATEGORIES, DiffHunk, IssueCategory
from revagent.prompts import commentator_prompt, critic_prompt, msc_critic_prompt


class ReviewMode(Enum):
    STANDARD = "standard"
    SFA = "sfa"
    MSC = "msc"


@dataclass
class AgentUsage:
    prompt_tokens: int = 0
    completion_tokens: int = 0
    seconds: float = 0.0
    calls: int = 0
    model_name: str = ""

    def to_dict(self) -> dict:
        return {
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "seconds": self.seconds,
            "calls": self.calls,
            "model_name": self.model_name,
        }


@dataclass(frozen=True)
class RunTelemetry:
    total_prompt_tokens: int
    total_completion_tokens: int
    wall_seconds: float
    per_agent: dict[str, AgentUsage]

    @property
    def call_seconds(self) -> float:
        """Summed per-call time, the sequential-execution reading of latency."""
        return sum(usage.seconds for usage in self.per_agent.values())

    def to_dict(self) -> dict:
        return {
            "total_prompt_tokens": self.total_prompt_tokens,
            "total_completion_tokens": self.total_completion_tokens,
            "wall_seconds": self.wall_seconds,
            "call_seconds": self.call_seconds,
            "per_agent": {name: usage.to_dict() for name, usage in self.per_agent.items()},
        }


@dataclass(frozen=True)
class ReviewOutput:
    diff_id: str
    verdict: CriticVerdict
    candidates: tuple[CandidateComment, ...]
    telemetry: RunTelemetry
    mode: ReviewMode

    def to_dict(self) -> dict:
        return {
            "diff_id": self.diff_id,
            "mode": self.mode.value,
            "verdict": self.verdict.to_dict(),
            "candidates": [
                {
                    "category": c.category.value,
                    "text": c.text,
                    "source": c.source.value,
                    "declined": c.declined,
                    "model_name": c.model_name,
                }
                for c in self.candidates
            ],
            "telemetry": self.telemetry.to_dict(),
        }


@dataclass
class PipelineConfig:
    """Backends per agent role plus generation and policy knobs.

    An "agent" is a backend handle plus a prompt family; fine-tuned and
    few-shot agents differ only in what the handle points at.
    """

    commentators: dict[IssueCategory, object]
    critic: object
    fusion: object | None = None
    mode: ReviewMode = ReviewMode.STANDARD
    verdict_fallback: bool = False
    temperature: float = 0.0
    max_tokens: int = 512
    max_workers: int = 5

    def involved_backends(self) -> list[object]:
        backends = list(self.commentators.values()) + [self.critic]
        if self.fusion is not None:
            backends.append(self.fusion)
        return backends

    def is_deterministic(self) -> bool:
        return all(getattr(b, "deterministic", False) for b in self.involved_backends())


def _call_commentator(
    backend, category: IssueCategory, diff: DiffHunk, temperature: float, max_tokens: int
) -> tuple[CandidateComment, AgentUsage]:
    prompt = commentator_prompt(category, diff)
    result = backend.complete(
        GenerationRequest.from_prompt(prompt, temperature=temperature, max_tokens=max_tokens)
    )
    candidate = parse_commentator_response(result.text, category)
    candidate = replace(candidate, model_name=backend.model_name)
    usage = AgentUsage(
        prompt_tokens=result.prompt_tokens,
        completion_tokens=result.completion_tokens,
        seconds=result.latency_seconds,
        calls=1,
        model_name=backend.model_name,
    )
    return candidate, usage


def generate_candidates(
    diff: DiffHunk,
    commentators: dict[IssueCategory, object],
    temperature: float = 0.0,
    max_tokens: int = 512,
    max_workers: int = 5,
) -> tuple[list[CandidateComment], dict[str, AgentUsage]]:
    """Invoke the five commentators (concurrently) and collect canonical candidates.

    Output order is canonical regardless of completion order. Any agent
    failure aborts: partial candidate sets are never produced.
    """
    missing = [c.value for c in CANONICAL_CATEGORIES if c not in commentators]
    if missing:
        raise ValueError(f"missing commentators for: {', '.join(missing)}")

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = {
            category: pool.submit(
                _call_commentator, commentators[category], category, diff, temperature, max_tokens
            )
            for category in CANONICAL_CATEGORIES
        }
        candidates: list[CandidateComment] = []
        usages: dict[str, AgentUsage] = {}
        for category in CANONICAL_CATEGORIES:
            candidate, usage = futures[category].result()
            candidates.append(candidate)
            usages[f"commentator:{category.value}"] = usage
    return candidates, usages


def discriminate(
    diff: DiffHunk,
    candidates: list[CandidateComment],
    critic,
    verdict_fallback: bool = False,
    temperature: float = 0.0,
    max_tokens: int = 512,
) -> tuple[CriticVerdict, AgentUsage]:
    """Render the critic prompt, call the backend, parse the verdict.

    An unparseable response is retried once; a second failure raises unless
    majority-class fallback is enabled, which selects the refactoring
    candidate (the most frequent category) and flags the verdict.
    """
    prompt = critic_prompt(diff, candidates)
    request = GenerationRequest.from_prompt(prompt, temperature=temperature, max_tokens=max_tokens)
    usage = AgentUsage(model_name=critic.model_name)
    last_text = ""
    for _ in range(2):
        result = critic.complete(request)
        usage.prompt_tokens += result.prompt_tokens
        usage.completion_tokens += result.completion_tokens
        usage.seconds += result.latency_seconds
        usage.calls += 1
        last_text = result.text
        try:
            return parse_critic_response(result.text, candidates), usage
        except UnparseableVerdictError:
            continue
    if verdict_fallback:
        fallback_candidate = candidates[0]
        verdict = CriticVerdict(
            category=IssueCategory.REFACTORING,
            comment=fallback_candidate.text,
            raw_response=last_text,
            fallback=True,
        )
        return verdict, usage
    raise UnparseableVerdictError(
        f"critic produced no parseable verdict in 2 attempts: {last_text[:200]!r}"
    )


def _discriminate_msc(
    diff: DiffHunk,
    candidates: list[CandidateComment],
    critic,
    temperature: float,
    max_tokens: int,
) -> tuple[CriticVerdict, AgentUsage]:
    prompt = msc_critic_prompt(diff, candidates)
    request = GenerationRequest.from_prompt(prompt, temperature=temperature, max_tokens=max_tokens)
    usage = AgentUsage(model_name=critic.model_name)
    last_text = ""
    for _ in range(2):
        result = critic.complete(request)
        usage.prompt_tokens += result.prompt_tokens
        usage.completion_tokens += result.completion_tokens
        usage.seconds += result.latency_seconds
        usage.calls += 1
        last_text = result.text
        try:
            merged = parse_msc_response(result.text)
        except UnparseableVerdictError:
            continue
        return CriticVerdict(category=None, comment=merged, raw_response=result.text), usage
    raise UnparseableVerdictError(f"merge critic produced no comment: {last_text[:200]!r}")


def _assemble(
    diff: DiffHunk,
    verdict: CriticVerdict,
    candidates: list[CandidateComment],
    usages: dict[str, AgentUsage],
    mode: ReviewMode,
    wall_seconds: float,
    deterministic: bool,
) -> ReviewOutput:
    total_prompt = sum(u.prompt_tokens for u in usages.values())
    total_completion = sum(u.completion_tokens for u in usages.values())
    # Under fully scripted backends wall time is replaced by summed call time
    # so repeated runs serialize identically.
    wall = sum(u.seconds for u in usages.values()) if deterministic else wall_seconds
    telemetry = RunTelemetry(
        total_prompt_tokens=total_prompt,
        total_completion_tokens=total_completion,
        wall_seconds=wall,
        per_agent=usages,
    )
    return ReviewOutput(
        diff_id=diff.id,
        verdict=verdict,
        candidates=tuple(candidates),
        telemetry=telemetry,
        mode=mode,
    )


def review(diff: DiffHunk, config: PipelineConfig) -> ReviewOutput:
    """Standard mode: five commentators, then the selecting critic."""
    started = time.monotonic()
    candidates, usages = generate_candidates(
        diff,
        config.commentators,
        temperature=config.temperature,
        max_tokens=config.max_tokens,
        max_workers=config.max_workers,
    )
    verdict, critic_usage = discriminate(
        diff,
        candidates,
        config.critic,
        verdict_fallback=config.verdict_fallback,
        temperature=config.temperature,
        max_tokens=config.max_tokens,
    )
    usages["critic"] = critic_usage
    wall = time.monotonic() - started
    return _assemble(
        diff, verdict, candidates, usages, ReviewMode.STANDARD, wall, config.is_deterministic()
    )


def review_sfa(diff: DiffHunk, config: PipelineConfig) -> ReviewOutput:
    """Single-fusion-agent mode: one backend answers all five category prompts."""
    if config.fusion is None:
        raise ValueError("SFA mode requires a fusion backend")
    started = time.monotonic()
    fusion = config.fusion
    candidates, per_call = generate_candidates(
        diff,
        {category: fusion for category in CANONICAL_CATEGORIES},
        temperature=config.temperature,
        max_tokens=config.max_tokens,
        max_workers=config.max_workers,
    )
    fused = AgentUsage(model_name=fusion.model_name)
    for usage in per_call.values():
        fused.prompt_tokens += usage.prompt_tokens
        fused.completion_tokens += usage.completion_tokens
        fused.seconds += usage.seconds
        fused.calls += usage.calls
    usages = {"fusion": fused}
    verdict, critic_usage = discriminate(
        diff,
        candidates,
        config.critic,
        verdict_fallback=config.verdict_fallback,
        temperature=config.temperature,
        max_tokens=config.max_tokens,
    )
    usages["critic"] = critic_usage
    wall = time.monotonic() - started
    return _assemble(
        diff, verdict, candidates, usages, ReviewMode.SFA, wall, config.is_deterministic()
    )


def review_msc(diff: DiffHunk, config: PipelineConfig) -> ReviewOutput:
    """Merge mode: standard generation, critic merges instead of selecting.

    The verdict carries no category, so these outputs contribute nothing to
    prediction-accuracy denominators downstream.
    """
    started = time.monotonic()
    candidates, usages = generate_candidates(
        diff,
        config.commentators,
        temperature=config.temperature,
        max_tokens=config.max_tokens,
        max_workers=config.max_workers,
    )
    verdict, critic_usage = _discriminate_msc(
        diff, candidates, config.critic, config.temperature, config.max_tokens
    )
    usages["critic"] = critic_usage
    wall = time.monotonic() - started
    return _assemble(
        diff, verdict, candidates, usages, ReviewMode.MSC, wall, config.is_deterministic()
    )


def run_review(diff: DiffHunk, config: PipelineConfig) -> ReviewOutput:
    """Dispatch on the configured mode."""
    if config.mode is ReviewMode.SFA:
        return review_sfa(diff, config)
    if config.mode is ReviewMode.MSC:
        return review_msc(diff, config)
    return review(diff, config)
