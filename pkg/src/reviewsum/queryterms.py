"""Frequency-based query term mining over review sentences.

Candidates are unigrams and ordered skip bigrams counted inside single
sentences; a window of 4 means the two tokens span at most 4 positions
(j - i <= 3). Candidates below the frequency threshold are dropped, the
survivors are cross-referenced against a gold aspect vocabulary, redundant
unigrams are removed, and the top ``q_max`` terms remain.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from ._data import default_stopwords
from .corpus import SentenceRef

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase, split on non-alphanumeric runs, drop pure-digit tokens."""
    return [t for t in _TOKEN_RE.findall(text.lower()) if not t.isdigit()]


@dataclass(frozen=True)
class TermCandidate:
    term: str
    frequency: int


@dataclass(frozen=True)
class QueryTermSet:
    terms: tuple[TermCandidate, ...]
    q_max: int

    def __post_init__(self):
        if self.q_max <= 0:
            raise ValueError("q_max must be positive")
        if len(self.terms) > self.q_max:
            raise ValueError("more terms than q_max")
        names = [t.term for t in self.terms]
        if len(set(names)) != len(names):
            raise ValueError("duplicate terms")
        freqs = [t.frequency for t in self.terms]
        if any(a < b for a, b in zip(freqs, freqs[1:])):
            raise ValueError("terms not ordered by frequency")
        multi_words = {w for t in names if " " in t for w in t.split()}
        if any(t in multi_words for t in names if " " not in t):
            raise ValueError("unigram subsumed by a multi-word term")

    def term_strings(self) -> list[str]:
        return [t.term for t in self.terms]


def extract_candidates(
    sentences: Sequence[SentenceRef],
    window: int = 4,
    min_frequency: int = 15,
    stopwords: Optional[Iterable[str]] = None,
) -> list[TermCandidate]:
    """Count unigrams and skip bigrams, keep those at or above the threshold.

    Ranking is frequency descending, ties broken by first occurrence in the
    corpus (sentence position, then token positions), which makes the output
    fully deterministic for a fixed sentence order.
    """
    if window < 2:
        raise ValueError("window must be >= 2")
    if min_frequency < 1:
        raise ValueError("min_frequency must be >= 1")
    stop = frozenset(stopwords) if stopwords is not None else default_stopwords()

    counts: dict[str, int] = {}
    first_seen: dict[str, tuple[int, int, int]] = {}

    def bump(term: str, seen: tuple[int, int, int]) -> None:
        if term not in counts:
            counts[term] = 0
            first_seen[term] = seen
        counts[term] += 1

    for s_pos, sentence in enumerate(sentences):
        tokens = tokenize(sentence.text)
        for i, tok in enumerate(tokens):
            if tok in stop:
                continue
            bump(tok, (s_pos, i, i))
            for j in range(i + 1, min(i + window, len(tokens))):
                other = tokens[j]
                if other in stop or other == tok:
                    continue
                bump(f"{tok} {other}", (s_pos, i, j))

    survivors = [t for t, c in counts.items() if c >= min_frequency]
    survivors.sort(key=lambda t: (-counts[t], first_seen[t]))
    return [TermCandidate(term=t, frequency=counts[t]) for t in survivors]


def refine_terms(
    candidates: Sequence[TermCandidate],
    gold_terms: Iterable[str],
    q_max: int = 15,
) -> QueryTermSet:
    """Filter candidates against a gold vocabulary and deduplicate.

    A unigram survives when it is a member of the gold set; a bigram when
    both constituent tokens are members or the joined phrase is. A surviving
    unigram is then removed when its word appears inside any surviving
    multi-word term, and the list is truncated to ``q_max``.
    """
    gold = {g.strip().lower() for g in gold_terms if g.strip()}
    if not gold:
        raise ValueError("gold term set is empty")

    retained: list[TermCandidate] = []
    for cand in candidates:
        words = cand.term.split()
        if len(words) == 1:
            if cand.term in gold:
                retained.append(cand)
        else:
            if cand.term in gold or all(w in gold for w in words):
                retained.append(cand)

    covered = {w for c in retained if " " in c.term for w in c.term.split()}
    deduped = [c for c in retained if " " in c.term or c.term not in covered]
    return QueryTermSet(terms=tuple(deduped[:q_max]), q_max=q_max)
