"""Chat-completion backends (OpenAI-compatible HTTP, deterministic mock) and parsing.

The wire shape is POST <endpoint>/chat/completions with model/messages/
temperature/max_tokens; the reply is read from choices[0].message.content and
the optional usage block. Credentials come from the REVAGENT_API_KEY
environment variable. Mock backends replay scripted responses matched by
prompt substring, which keeps every pipeline test offline and bit-stable.
"""

from __future__ import annotations

import json
import logging
import math
import os
import re
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import requests

from revagent.candidates import CandidateComment, CandidateSource, sentinel_text
from revagent.corpus import IssueCategory
from revagent.prompts import MessageRole, PromptText, canonical_candidates

logger = logging.getLogger(__name__)

API_KEY_ENV = "REVAGENT_API_KEY"

RETRYABLE_STATUS = {429, 500, 502, 503, 504}


class TransportError(Exception):
    """Endpoint unreachable or persistently failing after retries."""


class AuthError(Exception):
    pass


class MalformedResponseError(Exception):
    """The backend answered, but not in a shape we can interpret."""


class UnparseableVerdictError(Exception):
    """No issue category could be extracted from a critic response."""


class TokenSource(Enum):
    REPORTED = "reported"
    ESTIMATED = "estimated"


def estimate_tokens(text: str) -> int:
    """ceil(chars / 4): a coarse stand-in when the wire response omits usage."""
    return math.ceil(len(text) / 4)


@dataclass(frozen=True)
class GenerationRequest:
    messages: tuple[tuple[MessageRole, str], ...]
    temperature: float = 0.0
    max_tokens: int = 512
    model_name: str = ""

    @classmethod
    def from_prompt(
        cls, prompt: PromptText, temperature: float = 0.0, max_tokens: int = 512
    ) -> "GenerationRequest":
        return cls(messages=prompt.role_messages, temperature=temperature, max_tokens=max_tokens)

    @property
    def prompt_text(self) -> str:
        return "".join(content for _, content in self.messages)


@dataclass(frozen=True)
class GenerationResult:
    text: str
    prompt_tokens: int
    completion_tokens: int
    latency_seconds: float
    token_source: TokenSource


@dataclass(frozen=True)
class CriticVerdict:
    """The critic's selected category and final comment.

    ``category`` is None only for merge-mode verdicts, which select no single
    category. ``fallback`` marks a majority-class substitution after repeated
    unparseable critic responses.
    """

    category: IssueCategory | None
    comment: str
    raw_response: str
    fallback: bool = False

    def to_dict(self) -> dict:
        return {
            "category": self.category.value if self.category else None,
            "comment": self.comment,
            "fallback": self.fallback,
            "raw_response": self.raw_response,
        }


class RateLimiter:
    """Thread-safe minimum-interval gate shared by concurrent requests."""

    def __init__(self, max_per_second: float | None):
        self._interval = 1.0 / max_per_second if max_per_second else 0.0
        self._lock = threading.Lock()
        self._next_at = 0.0

    def acquire(self) -> None:
        if self._interval <= 0:
            return
        with self._lock:
            now = time.monotonic()
            wait = self._next_at - now
            self._next_at = max(now, self._next_at) + self._interval
        if wait > 0:
            time.sleep(wait)


class HttpBackend:
    """OpenAI-compatible chat-completions client with retry and backoff."""

    deterministic = False

    def __init__(
        self,
        endpoint: str,
        model_name: str,
        api_key: str | None = None,
        max_retries: int = 2,
        backoff_seconds: float = 0.5,
        timeout_seconds: float = 120.0,
        max_per_second: float | None = None,
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.model_name = model_name
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self.max_retries = max_retries
        self.backoff_seconds = backoff_seconds
        self.timeout_seconds = timeout_seconds
        self._limiter = RateLimiter(max_per_second)
        self._session = session or requests.Session()

    def complete(self, request: GenerationRequest) -> GenerationResult:
        payload = {
            "model": request.model_name or self.model_name,
            "messages": [
                {"role": role.value, "content": content} for role, content in request.messages
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        url = f"{self.endpoint}/chat/completions"
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt > 0:
                time.sleep(self.backoff_seconds * 2 ** (attempt - 1))
            self._limiter.acquire()
            started = time.monotonic()
            try:
                response = self._session.post(
                    url, json=payload, headers=headers, timeout=self.timeout_seconds
                )
            except requests.RequestException as exc:
                last_error = exc
                continue
            latency = time.monotonic() - started
            if response.status_code in (401, 403):
                raise AuthError(f"{url} rejected credentials (HTTP {response.status_code})")
            if response.status_code in RETRYABLE_STATUS:
                last_error = TransportError(f"HTTP {response.status_code} from {url}")
                continue
            if response.status_code != 200:
                raise TransportError(f"HTTP {response.status_code} from {url}")
            return self._parse_wire_response(response, request, latency)
        raise TransportError(
            f"{url} failed after {self.max_retries + 1} attempts: {last_error}"
        )

    def _parse_wire_response(
        self, response: requests.Response, request: GenerationRequest, latency: float
    ) -> GenerationResult:
        try:
            body = response.json()
            text = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise MalformedResponseError(f"unexpected completion payload: {exc}") from exc
        if not isinstance(text, str):
            raise MalformedResponseError("completion content is not a string")
        usage = body.get("usage") or {}
        if "prompt_tokens" in usage and "completion_tokens" in usage:
            return GenerationResult(
                text=text,
                prompt_tokens=int(usage["prompt_tokens"]),
                completion_tokens=int(usage["completion_tokens"]),
                latency_seconds=latency,
                token_source=TokenSource.REPORTED,
            )
        return GenerationResult(
            text=text,
            prompt_tokens=estimate_tokens(request.prompt_text),
            completion_tokens=estimate_tokens(text),
            latency_seconds=latency,
            token_source=TokenSource.ESTIMATED,
        )


@dataclass
class MockEntry:
    """One scripted reply, matched when its substring occurs in the prompt."""

    prompt_substring_match: str
    response: str
    prompt_tokens: int | None = None
    completion_tokens: int | None = None
    latency_seconds: float = 0.0
    sleep_seconds: float = 0.0
    uses: int | None = None  # None = unlimited


class MockBackend:
    """Deterministic scripted backend: identical request, identical result."""

    deterministic = True

    def __init__(self, entries: list[MockEntry], model_name: str = "mock-model"):
        self.entries = list(entries)
        self.model_name = model_name
        self.calls = 0
        self._lock = threading.Lock()

    @classmethod
    def from_script(cls, path: str | Path, model_name: str = "mock-model") -> "MockBackend":
        """Load a JSONL script of {prompt_substring_match, response, ...} entries."""
        entries = []
        for line in Path(path).read_text(encoding="utf-8").split("\n"):
            if not line.strip():
                continue
            obj = json.loads(line)
            entries.append(
                MockEntry(
                    prompt_substring_match=obj["prompt_substring_match"],
                    response=obj["response"],
                    prompt_tokens=obj.get("prompt_tokens"),
                    completion_tokens=obj.get("completion_tokens"),
                    latency_seconds=float(obj.get("latency_seconds", 0.0)),
                    sleep_seconds=float(obj.get("sleep_seconds", 0.0)),
                    uses=obj.get("uses"),
                )
            )
        return cls(entries, model_name=model_name)

    def complete(self, request: GenerationRequest) -> GenerationResult:
        prompt = request.prompt_text
        with self._lock:
            self.calls += 1
            entry = None
            for candidate in self.entries:
                if candidate.uses is not None and candidate.uses <= 0:
                    continue
                if candidate.prompt_substring_match in prompt:
                    entry = candidate
                    if entry.uses is not None:
                        entry.uses -= 1
                    break
        if entry is None:
            raise MalformedResponseError("no mock script entry matches the prompt")
        if entry.sleep_seconds > 0:
            time.sleep(entry.sleep_seconds)
        if entry.prompt_tokens is not None and entry.completion_tokens is not None:
            return GenerationResult(
                text=entry.response,
                prompt_tokens=entry.prompt_tokens,
                completion_tokens=entry.completion_tokens,
                latency_seconds=entry.latency_seconds,
                token_source=TokenSource.REPORTED,
            )
        return GenerationResult(
            text=entry.response,
            prompt_tokens=estimate_tokens(prompt),
            completion_tokens=estimate_tokens(entry.response),
            latency_seconds=entry.latency_seconds,
            token_source=TokenSource.ESTIMATED,
        )


_COMMENT_MARKER = re.compile(r"review\s+comment\s*:", re.IGNORECASE)
_SELECTION_MARKER = re.compile(r"selected\s+category\s*:", re.IGNORECASE)
_DECLINE = re.compile(r"false[\s.!]*", re.IGNORECASE)


def parse_commentator_response(text: str, category: IssueCategory) -> CandidateComment:
    """Total extraction of a commentator reply; never raises.

    Pulls everything after the first "Review Comment:" marker. Without a
    marker, non-empty text is used whole (lenient mode). An empty extraction
    or a bare "False" judgment yields the category's sentinel candidate with
    declined=True, keeping the critic's input at exactly five comments.
    """
    match = _COMMENT_MARKER.search(text)
    if match:
        extracted = text[match.end():].strip()
    else:
        extracted = text.strip()
        if extracted:
            logger.warning(
                "commentator response for %s lacks the Review Comment marker; "
                "using the whole text",
                category.value,
            )
    if not extracted or _DECLINE.fullmatch(extracted):
        return CandidateComment(
            category=category,
            text=sentinel_text(category),
            source=CandidateSource.SENTINEL,
            declined=True,
        )
    return CandidateComment(category=category, text=extracted, source=CandidateSource.GENERATED)


def parse_critic_response(text: str, candidates: list[CandidateComment]) -> CriticVerdict:
    """Extract (category, comment) from a critic reply.

    The category is read from the first "Selected Category:" line; exactly one
    category name must appear on it (case-insensitive, punctuation-tolerant) or
    the verdict is unparseable -- two names never resolve to a silent guess.
    A missing comment line substitutes the selected candidate's text.
    """
    ordered = canonical_candidates(candidates)
    selected: IssueCategory | None = None
    for line in text.split("\n"):
        marker = _SELECTION_MARKER.search(line)
        if not marker:
            continue
        remainder = line[marker.end():].lower()
        found = [c for c in IssueCategory if c is not IssueCategory.OTHERS and c.value in remainder]
        if len(found) != 1:
            raise UnparseableVerdictError(
                f"selection line names {len(found)} categories: {line.strip()!r}"
            )
        selected = found[0]
        break
    if selected is None:
        raise UnparseableVerdictError("no Selected Category line in critic response")

    comment_match = _COMMENT_MARKER.search(text)
    comment = text[comment_match.end():].strip() if comment_match else ""
    if not comment:
        comment = ordered[selected.canonical_index].text
    return CriticVerdict(category=selected, comment=comment, raw_response=text)


def parse_msc_response(text: str) -> str:
    """Extract the merged comment from a merge-mode critic reply."""
    match = _COMMENT_MARKER.search(text)
    merged = text[match.end():].strip() if match else text.strip()
    if not merged:
        raise UnparseableVerdictError("merge response contains no comment text")
    return merged
