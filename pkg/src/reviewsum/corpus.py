"""Review corpus data model, JSON Lines ingestion, and sentence splitting.

The on-disk format is JSON Lines, one entity per line:

    {"entity_id": "...", "name": "...",
     "reviews": [{"date": "2020-01-01", "text": "..."}, ...],
     "reference": {"pros": ["..."], "cons": ["..."]}}

``reference`` is optional. Loaded corpora are immutable (tuples throughout)
and safe to share across worker threads.
"""

from __future__ import annotations

import datetime
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

from .errors import CorpusError

SentenceFilter = Callable[[str], bool]


@dataclass(frozen=True)
class Review:
    date: str
    text: str

    def __post_init__(self):
        if not self.text.strip():
            raise CorpusError("review text is empty")
        try:
            datetime.date.fromisoformat(self.date)
        except (TypeError, ValueError) as exc:
            raise CorpusError(f"invalid review date {self.date!r}") from exc

    @property
    def posted(self) -> datetime.date:
        return datetime.date.fromisoformat(self.date)


@dataclass(frozen=True)
class ReferenceSummary:
    pros: tuple[str, ...]
    cons: tuple[str, ...]

    def __post_init__(self):
        for section in (self.pros, self.cons):
            for item in section:
                if not isinstance(item, str) or not item.strip():
                    raise CorpusError("reference items must be non-empty strings")
        object.__setattr__(self, "pros", tuple(s.strip() for s in self.pros))
        object.__setattr__(self, "cons", tuple(s.strip() for s in self.cons))

    @property
    def valid(self) -> bool:
        """A reference is valid only when both sections are non-empty."""
        return bool(self.pros) and bool(self.cons)


@dataclass(frozen=True)
class Entity:
    entity_id: str
    name: str
    reviews: tuple[Review, ...]
    reference: Optional[ReferenceSummary] = None

    def __post_init__(self):
        if not self.entity_id:
            raise CorpusError("entity_id is empty")
        if not self.reviews:
            raise CorpusError("empty reviews")


@dataclass(frozen=True)
class SentenceRef:
    """Addresses one sentence of one review of one entity."""

    entity_id: str
    review_index: int
    sentence_index: int
    text: str


# --- sentence splitting ---------------------------------------------------

# Words whose trailing period does not end a sentence.
_ABBREVIATIONS = frozenset({
    "mr", "mrs", "ms", "dr", "prof", "st", "jr", "sr", "vs", "etc", "no",
    "approx", "dept", "min", "max", "ave", "blvd", "inc", "ltd", "co",
    "e.g", "i.e", "a.m", "p.m", "u.s", "u.k",
})

_TERMINALS = ".!?"
_CLOSERS = "\"'”’)]"
_OPEN_QUOTES = "\"'“‘(["


def _abbreviation_before(text: str, pos: int) -> bool:
    """True when the period at ``pos`` follows a known abbreviation or initial."""
    i = pos - 1
    while i >= 0 and (text[i].isalnum() or text[i] == "."):
        i -= 1
    word = text[i + 1:pos].lower()
    if not word:
        return False
    if word in _ABBREVIATIONS:
        return True
    # single-letter initials such as "J."
    return len(word) == 1 and word.isalpha()


def split_text(text: str) -> list[str]:
    """Split raw text into sentences with a deterministic rule-based splitter.

    A boundary is a terminal ``. ! ?`` (plus any closing quotes/brackets)
    followed by whitespace and an uppercase letter, digit, or opening quote.
    Periods after allowlisted abbreviations never split. Every non-whitespace
    character of the input appears in exactly one output sentence.
    """
    sentences: list[str] = []
    n = len(text)
    start = 0
    i = 0
    while i < n:
        if text[i] in _TERMINALS:
            j = i + 1
            while j < n and text[j] in _CLOSERS:
                j += 1
            k = j
            while k < n and text[k].isspace():
                k += 1
            is_boundary = (
                k > j
                and k < n
                and (text[k].isupper() or text[k].isdigit() or text[k] in _OPEN_QUOTES)
                and not (text[i] == "." and _abbreviation_before(text, i))
            )
            if is_boundary:
                segment = text[start:j].strip()
                if segment:
                    sentences.append(segment)
                start = j
                i = k
                continue
            i = j
            continue
        i += 1
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def split_sentences(entity: Entity, sentence_filter: Optional[SentenceFilter] = None) -> list[SentenceRef]:
    """Split an entity's reviews into addressed sentences.

    Sentences come out in review order then sentence order. ``sentence_filter``
    (default: accept all) drops sentences without renumbering, so a ref always
    addresses the same span of the split review.
    """
    refs: list[SentenceRef] = []
    for review_index, review in enumerate(entity.reviews):
        for sentence_index, sentence in enumerate(split_text(review.text)):
            if sentence_filter is not None and not sentence_filter(sentence):
                continue
            refs.append(SentenceRef(entity.entity_id, review_index, sentence_index, sentence))
    return refs


# --- serialization --------------------------------------------------------

_ENTITY_KEYS = {"entity_id", "name", "reviews", "reference"}
_REVIEW_KEYS = {"date", "text"}
_REFERENCE_KEYS = {"pros", "cons"}


def entity_from_dict(record: dict) -> Entity:
    if not isinstance(record, dict):
        raise CorpusError("entity record is not a JSON object")
    unknown = set(record) - _ENTITY_KEYS
    if unknown:
        raise CorpusError(f"unknown entity keys: {sorted(unknown)}")
    missing = {"entity_id", "name", "reviews"} - set(record)
    if missing:
        raise CorpusError(f"missing entity keys: {sorted(missing)}")
    raw_reviews = record["reviews"]
    if not isinstance(raw_reviews, list):
        raise CorpusError("reviews must be a list")
    reviews = []
    for raw in raw_reviews:
        if not isinstance(raw, dict) or set(raw) != _REVIEW_KEYS:
            raise CorpusError(f"review must have exactly keys {sorted(_REVIEW_KEYS)}")
        reviews.append(Review(date=raw["date"], text=raw["text"]))
    reference = None
    if record.get("reference") is not None:
        raw_ref = record["reference"]
        if not isinstance(raw_ref, dict) or set(raw_ref) != _REFERENCE_KEYS:
            raise CorpusError(f"reference must have exactly keys {sorted(_REFERENCE_KEYS)}")
        reference = ReferenceSummary(pros=tuple(raw_ref["pros"]), cons=tuple(raw_ref["cons"]))
    return Entity(
        entity_id=record["entity_id"],
        name=record["name"],
        reviews=tuple(reviews),
        reference=reference,
    )


def entity_to_dict(entity: Entity) -> dict:
    record = {
        "entity_id": entity.entity_id,
        "name": entity.name,
        "reviews": [{"date": r.date, "text": r.text} for r in entity.reviews],
    }
    if entity.reference is not None:
        record["reference"] = {
            "pros": list(entity.reference.pros),
            "cons": list(entity.reference.cons),
        }
    return record


def load_corpus(path) -> list[Entity]:
    """Load a JSON Lines corpus. Errors carry the offending 1-based line number."""
    entities: list[Entity] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"malformed JSON ({exc.msg})", line=lineno) from exc
            try:
                entity = entity_from_dict(record)
            except CorpusError as exc:
                raise CorpusError(str(exc), line=lineno) from exc
            if entity.entity_id in seen:
                raise CorpusError(f"duplicate entity_id {entity.entity_id!r}", line=lineno)
            seen.add(entity.entity_id)
            entities.append(entity)
    return entities


def save_corpus(entities: Iterable[Entity], path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as handle:
        for entity in entities:
            handle.write(json.dumps(entity_to_dict(entity), ensure_ascii=False) + "\n")
