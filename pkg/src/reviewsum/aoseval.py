"""Reference-free verification of generated sentences against evidence.

Sentences on both sides are decomposed into (aspect, opinion, sentiment)
triplets; three metrics compare a generated sentence with the evidence it was
generated from. Aspect relevance and sentiment factuality are binary per
unit, opinion faithfulness lies in [0, 1]; units where a metric is undefined
are excluded from its mean and their count is reported.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from ._data import default_opinion_lexicon, default_stopwords
from .retrieval import Embedder, RetrievalResult

SENTIMENTS = ("negative", "neutral", "positive")

_WORD_RE = re.compile(r"[^\W\d_]+", re.UNICODE)


def _normalize(text: str) -> str:
    return re.sub(r"\s+", " ", text.strip().lower())


@dataclass(frozen=True)
class AosTriplet:
    aspect: str
    opinion: str
    sentiment: str

    def __post_init__(self):
        aspect = _normalize(self.aspect)
        opinion = _normalize(self.opinion)
        if not aspect or not opinion:
            raise ValueError("aspect and opinion must be non-empty")
        if self.sentiment not in SENTIMENTS:
            raise ValueError(f"sentiment must be one of {SENTIMENTS}")
        object.__setattr__(self, "aspect", aspect)
        object.__setattr__(self, "opinion", opinion)


class TripletExtractor:
    """Interface: per-sentence triplet lists, deterministic within a run."""

    descriptor: str = "extractor"

    def extract(self, sentences: Sequence[str]) -> list[list[AosTriplet]]:
        raise NotImplementedError


class RuleTripletExtractor(TripletExtractor):
    """Deterministic pattern-based extractor over a bundled polarity lexicon.

    Two patterns: "ASPECT is/are/was/were [very] OPINION" and "OPINION ASPECT"
    with nearest-noun attachment (up to two noun tokens). Sentiment comes from
    the lexicon, flipped under a preceding negator, neutral otherwise. This is
    a sidecar-free fallback, not a substitute for a trained ABSA model.
    """

    _COPULAS = frozenset({"is", "are", "was", "were"})
    _ADVERBS = frozenset({
        "very", "really", "quite", "extremely", "so", "too", "pretty",
        "incredibly", "absolutely", "super", "rather", "fairly",
    })
    _NEGATORS = frozenset({"not", "never", "no", "hardly", "barely"})

    def __init__(self, lexicon: Optional[Mapping[str, str]] = None):
        self.descriptor = "rule-fallback"
        self.lexicon = dict(lexicon) if lexicon is not None else dict(default_opinion_lexicon())
        self._stopwords = default_stopwords()

    def _is_noun_candidate(self, token: str) -> bool:
        return (
            token not in self._stopwords
            and token not in self.lexicon
            and token not in self._COPULAS
            and token not in self._ADVERBS
            and token not in self._NEGATORS
        )

    def _aspect_before(self, tokens: list[str], position: int) -> Optional[str]:
        i = position - 1
        while i >= 0 and not self._is_noun_candidate(tokens[i]):
            if tokens[i] in self.lexicon:
                return None
            i -= 1
        if i < 0:
            return None
        words = [tokens[i]]
        if i - 1 >= 0 and self._is_noun_candidate(tokens[i - 1]):
            words.insert(0, tokens[i - 1])
        return " ".join(words)

    def _sentiment(self, opinion: str, negated: bool) -> str:
        polarity = self.lexicon.get(opinion, "neutral")
        if negated and polarity in ("positive", "negative"):
            return "negative" if polarity == "positive" else "positive"
        return polarity if polarity in SENTIMENTS else "neutral"

    def _extract_one(self, sentence: str) -> list[AosTriplet]:
        tokens = [t.lower() for t in _WORD_RE.findall(sentence)]
        triplets: list[AosTriplet] = []
        used_opinions: set[int] = set()

        for i, token in enumerate(tokens):
            if token not in self._COPULAS:
                continue
            j = i + 1
            negated = False
            while j < len(tokens) and (tokens[j] in self._ADVERBS or tokens[j] in self._NEGATORS
                                       or tokens[j] in self._stopwords):
                if tokens[j] in self._NEGATORS:
                    negated = True
                j += 1
            if j >= len(tokens):
                continue
            opinion = tokens[j]
            aspect = self._aspect_before(tokens, i)
            if aspect is None:
                continue
            used_opinions.add(j)
            triplets.append(AosTriplet(aspect, opinion, self._sentiment(opinion, negated)))

        for i, token in enumerate(tokens):
            if token not in self.lexicon or i in used_opinions:
                continue
            if i + 1 < len(tokens) and self._is_noun_candidate(tokens[i + 1]):
                words = [tokens[i + 1]]
                if i + 2 < len(tokens) and self._is_noun_candidate(tokens[i + 2]):
                    words.append(tokens[i + 2])
                negated = i - 1 >= 0 and tokens[i - 1] in self._NEGATORS
                triplets.append(AosTriplet(" ".join(words), token, self._sentiment(token, negated)))

        unique: list[AosTriplet] = []
        seen: set[AosTriplet] = set()
        for triplet in triplets:
            if triplet not in seen:
                seen.add(triplet)
                unique.append(triplet)
        return unique

    def extract(self, sentences: Sequence[str]) -> list[list[AosTriplet]]:
        return [self._extract_one(s) for s in sentences]


# --- metrics ------------------------------------------------------------------

@dataclass(frozen=True)
class VerificationUnit:
    query: str
    retrieved_triplets: tuple[AosTriplet, ...]
    generated_triplets: tuple[AosTriplet, ...]


def most_frequent_aspect(triplets: Sequence[AosTriplet]) -> Optional[str]:
    """Most frequent aspect; frequency ties break lexicographically."""
    if not triplets:
        return None
    counts = Counter(t.aspect for t in triplets)
    return min(counts, key=lambda a: (-counts[a], a))


def _aspect_matches(anchor: str, candidate: str) -> bool:
    a = set(anchor.split())
    b = set(candidate.split())
    return a <= b or b <= a


def _matched_generated(unit: VerificationUnit, anchor: str) -> list[AosTriplet]:
    return [t for t in unit.generated_triplets if _aspect_matches(anchor, t.aspect)]


def aspect_relevance(unit: VerificationUnit) -> Optional[int]:
    """1 when the most frequent evidence aspect appears among generated aspects.

    Undefined (None) when the unit has no retrieved triplets.
    """
    anchor = most_frequent_aspect(unit.retrieved_triplets)
    if anchor is None:
        return None
    return 1 if _matched_generated(unit, anchor) else 0


def sentiment_factuality(unit: VerificationUnit) -> Optional[int]:
    """1 when the generated sentiment matches the evidence majority sentiment.

    Neutral sentiments are excluded on both sides; a positive/negative tie in
    the evidence resolves to positive. Undefined when the evidence has no
    non-neutral sentiment for the anchor aspect, the generated sentence has no
    triplet for it, or the generated sentiment is neutral.
    """
    anchor = most_frequent_aspect(unit.retrieved_triplets)
    if anchor is None:
        return None
    evidence = [t.sentiment for t in unit.retrieved_triplets
                if t.aspect == anchor and t.sentiment != "neutral"]
    if not evidence:
        return None
    matched = _matched_generated(unit, anchor)
    if not matched:
        return None
    generated = matched[0]
    if generated.sentiment == "neutral":
        return None
    counts = Counter(evidence)
    majority = "positive" if counts["positive"] >= counts["negative"] else "negative"
    return 1 if generated.sentiment == majority else 0


def opinion_faithfulness(unit: VerificationUnit, embedder: Embedder) -> Optional[float]:
    """1.0 on a direct opinion match, else best cosine against evidence opinions.

    Evidence opinions are those for the anchor aspect carrying the generated
    triplet's sentiment. Undefined when that set is empty or the generated
    sentence has no triplet for the anchor aspect.
    """
    anchor = most_frequent_aspect(unit.retrieved_triplets)
    if anchor is None:
        return None
    matched = _matched_generated(unit, anchor)
    if not matched:
        return None
    generated = matched[0]
    opinions = [t.opinion for t in unit.retrieved_triplets
                if t.aspect == anchor and t.sentiment == generated.sentiment]
    if not opinions:
        return None
    if generated.opinion in opinions:
        return 1.0
    vectors = embedder.embed([generated.opinion] + opinions)
    best = max(float(np.dot(vectors[0], v)) for v in vectors[1:])
    return min(1.0, max(0.0, best))


@dataclass
class UnitScores:
    query: str
    ar: Optional[int]
    sf: Optional[int]
    of: Optional[float]
    ambiguous: bool


@dataclass
class VerificationReport:
    ar: Optional[float]
    sf: Optional[float]
    of: Optional[float]
    ar_denominator: int
    sf_denominator: int
    of_denominator: int
    rows: list[UnitScores] = field(default_factory=list)
    failed_units: int = 0
    ambiguous_units: int = 0

    def to_dict(self) -> dict:
        def x100(value: Optional[float]):
            return None if value is None else round(value * 100.0, 2)

        return {
            "ar": x100(self.ar),
            "sf": x100(self.sf),
            "of": x100(self.of),
            "denominators": {
                "ar": self.ar_denominator,
                "sf": self.sf_denominator,
                "of": self.of_denominator,
            },
            "failed_units": self.failed_units,
            "ambiguous_units": self.ambiguous_units,
            "rows": [
                {"query": r.query, "ar": r.ar, "sf": r.sf, "of": r.of}
                for r in self.rows
            ],
        }


def score_units(units: Sequence[VerificationUnit], embedder: Embedder,
                failed_units: int = 0) -> VerificationReport:
    """Aggregate AR/SF/OF over units; means are over defined units only."""
    rows: list[UnitScores] = []
    ambiguous_units = 0
    for unit in units:
        anchor = most_frequent_aspect(unit.retrieved_triplets)
        ambiguous = anchor is not None and len(_matched_generated(unit, anchor)) > 1
        if ambiguous:
            ambiguous_units += 1
        rows.append(UnitScores(
            query=unit.query,
            ar=aspect_relevance(unit),
            sf=sentiment_factuality(unit),
            of=opinion_faithfulness(unit, embedder),
            ambiguous=ambiguous,
        ))

    def mean_of(values: list) -> tuple[Optional[float], int]:
        defined = [v for v in values if v is not None]
        if not defined:
            return None, 0
        return sum(defined) / len(defined), len(defined)

    ar, ar_n = mean_of([r.ar for r in rows])
    sf, sf_n = mean_of([r.sf for r in rows])
    of, of_n = mean_of([r.of for r in rows])
    return VerificationReport(ar=ar, sf=sf, of=of,
                              ar_denominator=ar_n, sf_denominator=sf_n, of_denominator=of_n,
                              rows=rows, failed_units=failed_units,
                              ambiguous_units=ambiguous_units)


def verify_rag(
    assignments: RetrievalResult,
    generated: Mapping[str, str],
    extractor: TripletExtractor,
    embedder: Embedder,
) -> VerificationReport:
    """Verify generated per-term sentences against their retrieved evidence.

    One unit is built per term that has a generated sentence; extraction
    failures exclude the unit and are counted. Zero defined units leave the
    means undefined (None) with zero denominators.
    """
    unknown = set(generated) - set(assignments.assignments)
    if unknown:
        raise ValueError(f"generated terms not in assignments: {sorted(unknown)}")

    units: list[VerificationUnit] = []
    failed = 0
    for term, scored in assignments.assignments.items():
        if term not in generated:
            continue
        evidence_texts = [s.sentence.text for s in scored]
        try:
            retrieved_lists = extractor.extract(evidence_texts)
            generated_list = extractor.extract([generated[term]])[0]
        except Exception:
            failed += 1
            continue
        retrieved = tuple(t for sub in retrieved_lists for t in sub)
        units.append(VerificationUnit(
            query=term,
            retrieved_triplets=retrieved,
            generated_triplets=tuple(generated_list),
        ))
    return score_units(units, embedder, failed_units=failed)
