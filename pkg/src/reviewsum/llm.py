"""LLM backends, prompt construction, context truncation, and disk caching.

One chat-completion wire shape (``messages``/``temperature``/``top_p``/
``max_tokens``) covers every hosted backend; base URLs and keys come from
configuration and the environment. A hash-keyed MockBackend supports fully
offline, deterministic runs and tests.
"""

from __future__ import annotations

import hashlib
import math
import os
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import requests

from .corpus import Entity, Review
from .errors import BackendError, EmptyCompletionError, TransportError

RAG_SYSTEM_MESSAGE = (
    "You are an expert summarizer of user reviews for hotels and restaurants, "
    "specializing in travel!"
)
CRITIC_SYSTEM_MESSAGE = (
    "You are an expert critical summarizer of user reviews for hotels and "
    "restaurants, specializing in travel. You provide in-depth evaluations "
    "divided into two explicit sections: 'pros' and 'cons', which are "
    "reliable summaries."
)

_CRITIC_EXEMPLARS = (
    '{"pros": ["Spacious rooms with comfortable beds.", "Quiet residential '
    'street close to the old town."], "cons": ["Breakfast choice is limited.", '
    '"Street parking fills up early."]}',
)
_ABSTRACTIVE_EXEMPLARS = (
    "The rooms were spotless and the beds very comfortable.",
    "Guests found the front desk staff friendly but slow at check-in.",
)


def default_token_counter(text: str) -> int:
    """Conservative token estimate: word count times 1.3, rounded up."""
    return math.ceil(len(text.split()) * 1.3)


@dataclass(frozen=True)
class GenerationConfig:
    model_id: str
    temperature: float = 0.7
    top_p: float = 0.9
    max_tokens: int = 256
    context_limit_tokens: int = 128000

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not (0 < self.top_p <= 1):
            raise ValueError("top_p must be in (0, 1]")
        if self.max_tokens <= 0 or self.context_limit_tokens <= 0:
            raise ValueError("token limits must be positive")

    @classmethod
    def rag_default(cls, model_id: str, context_limit_tokens: int = 128000) -> "GenerationConfig":
        return cls(model_id=model_id, temperature=0.7, top_p=0.9, max_tokens=256,
                   context_limit_tokens=context_limit_tokens)

    @classmethod
    def critic_default(cls, model_id: str, context_limit_tokens: int = 128000) -> "GenerationConfig":
        return cls(model_id=model_id, temperature=0.7, top_p=0.9, max_tokens=512,
                   context_limit_tokens=context_limit_tokens)


@dataclass(frozen=True)
class PromptBundle:
    """Prompt parts rendered in a fixed order, so rendering is deterministic."""

    system_message: str
    task_description: str
    constraints: tuple[str, ...]
    exemplars: tuple[str, ...]
    payload: str
    format_instruction: str

    def render(self) -> str:
        parts = [self.task_description]
        if self.constraints:
            parts.append("Constraints:\n" + "\n".join(f"- {c}" for c in self.constraints))
        if self.exemplars:
            parts.append("Style examples:\n" + "\n".join(self.exemplars))
        if self.payload:
            parts.append(self.payload)
        parts.append(self.format_instruction)
        return "\n\n".join(parts)

    def render_messages(self) -> list[dict]:
        return [
            {"role": "system", "content": self.system_message},
            {"role": "user", "content": self.render()},
        ]


def completion_key(bundle: PromptBundle, config: GenerationConfig) -> str:
    material = "\x1f".join([
        config.model_id,
        bundle.system_message,
        bundle.render(),
        repr(config.temperature),
        repr(config.top_p),
        str(config.max_tokens),
    ])
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


# --- backends ---------------------------------------------------------------

class LlmBackend:
    """Interface: complete a prompt bundle under a generation config."""

    descriptor: str = "backend"

    def complete(self, bundle: PromptBundle, config: GenerationConfig) -> str:
        raise NotImplementedError


class MockBackend(LlmBackend):
    """Offline backend returning canned responses keyed by prompt hash."""

    def __init__(self, default: Optional[str] = None,
                 responder: Optional[Callable[[PromptBundle, GenerationConfig], str]] = None):
        self.descriptor = "mock"
        self.default = default
        self.responder = responder
        self.responses: dict[str, str] = {}
        self.calls = 0

    def register(self, bundle: PromptBundle, config: GenerationConfig, response: str) -> None:
        self.responses[completion_key(bundle, config)] = response

    def complete(self, bundle: PromptBundle, config: GenerationConfig) -> str:
        self.calls += 1
        key = completion_key(bundle, config)
        if key in self.responses:
            return self.responses[key]
        if self.responder is not None:
            return self.responder(bundle, config)
        if self.default is not None:
            return self.default
        raise BackendError(f"no canned response for prompt {key[:12]}")


class HttpChatBackend(LlmBackend):
    """Chat-completion client for any endpoint speaking the common JSON shape."""

    def __init__(self, descriptor: str, base_url: str, api_key: Optional[str] = None,
                 supports_json_response: bool = False, timeout: float = 120.0,
                 session: Optional[requests.Session] = None):
        self.descriptor = descriptor
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.supports_json_response = supports_json_response
        self.timeout = timeout
        self.session = session or requests.Session()

    def complete(self, bundle: PromptBundle, config: GenerationConfig) -> str:
        body = {
            "model": config.model_id,
            "messages": bundle.render_messages(),
            "temperature": config.temperature,
            "top_p": config.top_p,
            "max_tokens": config.max_tokens,
        }
        if self.supports_json_response:
            body["response_format"] = {"type": "json_object"}
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            response = self.session.post(f"{self.base_url}/chat/completions",
                                         json=body, headers=headers, timeout=self.timeout)
        except requests.RequestException as exc:
            raise TransportError(f"{self.descriptor}: {exc}") from exc
        if response.status_code == 429 or response.status_code >= 500:
            raise TransportError(f"{self.descriptor}: HTTP {response.status_code}")
        if response.status_code != 200:
            raise BackendError(f"{self.descriptor}: HTTP {response.status_code}: {response.text[:200]}")
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise BackendError(f"{self.descriptor}: malformed completion payload") from exc


# --- truncation -------------------------------------------------------------

@dataclass(frozen=True)
class TruncatedReviews:
    reviews: tuple[Review, ...]
    oversize: bool


def truncate_reviews(
    reviews: Sequence[Review],
    budget_tokens: int,
    token_counter: Callable[[str], int] = default_token_counter,
) -> TruncatedReviews:
    """Keep the most recent reviews that fit within the token budget.

    Selection walks date-sorted reviews from newest to oldest; the output
    preserves the reviews' original relative order. When even the single
    newest review exceeds the budget it is kept alone with ``oversize`` set.
    """
    if budget_tokens <= 0:
        raise ValueError("budget_tokens must be positive")
    indexed = sorted(range(len(reviews)), key=lambda i: (reviews[i].posted, i))
    kept: set[int] = set()
    total = 0
    for i in reversed(indexed):
        cost = token_counter(reviews[i].text)
        if total + cost > budget_tokens:
            break
        kept.add(i)
        total += cost
    oversize = False
    if not kept and reviews:
        kept.add(indexed[-1])
        oversize = True
    ordered = tuple(reviews[i] for i in range(len(reviews)) if i in kept)
    return TruncatedReviews(reviews=ordered, oversize=oversize)


# --- prompt construction ----------------------------------------------------

def _render_reviews(reviews: Sequence[Review]) -> str:
    ordered = sorted(enumerate(reviews), key=lambda pair: (pair[1].posted, pair[0]))
    lines = [f"[{review.date}] {review.text}" for _, review in ordered]
    return "Reviews (oldest to newest):\n" + "\n".join(lines)


def build_critic_prompt(
    entity: Entity,
    length_control: Optional[tuple[int, int]] = None,
    config: Optional[GenerationConfig] = None,
    token_counter: Callable[[str], int] = default_token_counter,
) -> PromptBundle:
    """Build the whole-corpus critic prompt, truncating reviews to fit.

    With ``length_control`` the constraints state the exact required number of
    pros and cons; otherwise the model chooses the counts itself.
    """
    if not entity.reviews:
        raise ValueError("entity has no reviews")
    if config is None:
        config = GenerationConfig.critic_default(model_id="unspecified")

    task = (
        f"Read every user review of {entity.name} below and write a critical "
        "summary of the guest experience, split into pros and cons."
    )
    constraints = [
        "Base every statement only on the reviews provided.",
        "Each pro and each con is one short, self-contained sentence.",
        "Do not repeat the same point in both sections.",
    ]
    if length_control is not None:
        n_pros, n_cons = length_control
        constraints.append(
            f"The summary must contain exactly {n_pros} 'pros' sentences and "
            f"exactly {n_cons} 'cons' sentences."
        )
    else:
        constraints.append("Choose the number of pros and cons that best fits the reviews.")
    format_instruction = (
        'Return only a JSON object with exactly two keys, "pros" and "cons", '
        "each holding a list of strings."
    )

    skeleton = PromptBundle(
        system_message=CRITIC_SYSTEM_MESSAGE,
        task_description=task,
        constraints=tuple(constraints),
        exemplars=_CRITIC_EXEMPLARS,
        payload="",
        format_instruction=format_instruction,
    )
    overhead = token_counter(skeleton.system_message) + token_counter(skeleton.render())
    budget = max(1, config.context_limit_tokens - overhead - config.max_tokens)
    truncated = truncate_reviews(entity.reviews, budget, token_counter)

    return PromptBundle(
        system_message=skeleton.system_message,
        task_description=task,
        constraints=tuple(constraints),
        exemplars=_CRITIC_EXEMPLARS,
        payload=_render_reviews(truncated.reviews),
        format_instruction=format_instruction,
    )


def build_rag_prompt(term: str, evidence: Sequence, mode: str) -> PromptBundle:
    """Build the per-term reranker (extractive) or abstractor prompt.

    ``evidence`` is the term's retrieved ``ScoredSentence`` list; the
    extractive prompt numbers every candidate and asks for one of them back,
    the abstractive prompt adds stylistic exemplars and asks for one new
    sentence.
    """
    if not term or not term.strip():
        raise ValueError("query term is empty")
    if not evidence:
        raise ValueError("evidence is empty")
    if mode not in ("extractive", "abstractive"):
        raise ValueError(f"unknown mode {mode!r}")

    numbered = "\n".join(
        f"{i}. {scored.sentence.text}" for i, scored in enumerate(evidence, start=1)
    )
    payload = f"Query term: {term}\n\nCandidate sentences:\n{numbered}"

    if mode == "extractive":
        return PromptBundle(
            system_message=RAG_SYSTEM_MESSAGE,
            task_description=(
                "Rerank the candidate sentences by how well they describe the "
                "query term, then select the single most relevant sentence."
            ),
            constraints=(
                "Pick exactly one sentence from the numbered list.",
                "Copy the sentence exactly; do not paraphrase.",
            ),
            exemplars=(),
            payload=payload,
            format_instruction=(
                'Return only a JSON object with exactly two keys: "index" (the '
                'number of the chosen sentence) and "sentence" (its exact text).'
            ),
        )
    return PromptBundle(
        system_message=RAG_SYSTEM_MESSAGE,
        task_description=(
            "Write one sentence that summarizes what the reviewers say about "
            "the query term, using only the candidate sentences as evidence."
        ),
        constraints=(
            "State only opinions supported by the candidate sentences.",
            "Write exactly one fluent sentence.",
        ),
        exemplars=_ABSTRACTIVE_EXEMPLARS,
        payload=payload,
        format_instruction='Return only a JSON object with exactly one key, "sentence".',
    )


# --- cached completion --------------------------------------------------------

class CachedCompleter:
    """Disk-cached completion with bounded retries on transport failures."""

    def __init__(self, backend: LlmBackend, cache_dir,
                 backoff: Sequence[float] = (1.0, 4.0, 16.0),
                 sleep: Callable[[float], None] = time.sleep):
        self.backend = backend
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.backoff = tuple(backoff)
        self.sleep = sleep
        self.hits = 0
        self.misses = 0

    def _path(self, key: str) -> Path:
        return self.cache_dir / f"{key}.txt"

    def complete(self, bundle: PromptBundle, config: GenerationConfig) -> str:
        key = completion_key(bundle, config)
        path = self._path(key)
        if path.exists():
            self.hits += 1
            return path.read_text(encoding="utf-8")
        self.misses += 1

        last_error: Optional[TransportError] = None
        text: Optional[str] = None
        for attempt in range(len(self.backoff) + 1):
            try:
                text = self.backend.complete(bundle, config)
                break
            except TransportError as exc:
                last_error = exc
                if attempt < len(self.backoff):
                    self.sleep(self.backoff[attempt])
        if text is None:
            raise last_error if last_error is not None else TransportError("backend failed")
        if not text.strip():
            raise EmptyCompletionError(f"{self.backend.descriptor}: empty completion")

        fd, tmp = tempfile.mkstemp(dir=self.cache_dir, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
        return text


def complete_cached(backend: LlmBackend, bundle: PromptBundle, config: GenerationConfig,
                    cache_dir, **kwargs) -> str:
    return CachedCompleter(backend, cache_dir, **kwargs).complete(bundle, config)
