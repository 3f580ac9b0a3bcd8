"""Reference-based evaluation: ROUGE-1/L F1, greedy embedding match, baselines.

The pros and cons of a gold summary are merged into one generic reference;
system summaries are scored against it. The random and oracle baselines give
the floor and the approximate extractive ceiling for a sentence pool.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .corpus import Entity, ReferenceSummary, SentenceRef
from .retrieval import Embedder

_ROUGE_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def rouge_tokenize(text: str) -> list[str]:
    """Lowercase alphanumeric tokens; digits are kept."""
    return _ROUGE_TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float


def _make_score(precision: float, recall: float) -> RougeScore:
    if precision + recall == 0.0:
        return RougeScore(precision, recall, 0.0)
    return RougeScore(precision, recall, 2.0 * precision * recall / (precision + recall))


def rouge1_f1(candidate: str, reference: str) -> RougeScore:
    """Unigram overlap with clipped counts."""
    cand = rouge_tokenize(candidate)
    ref = rouge_tokenize(reference)
    if not cand or not ref:
        return RougeScore(0.0, 0.0, 0.0)
    ref_counts: dict[str, int] = {}
    for tok in ref:
        ref_counts[tok] = ref_counts.get(tok, 0) + 1
    cand_counts: dict[str, int] = {}
    for tok in cand:
        cand_counts[tok] = cand_counts.get(tok, 0) + 1
    overlap = sum(min(c, ref_counts.get(t, 0)) for t, c in cand_counts.items())
    return _make_score(overlap / len(cand), overlap / len(ref))


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for x in a:
        current = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[-1]


def rouge_l_f1(candidate: str, reference: str) -> RougeScore:
    """Longest-common-subsequence precision/recall over word tokens."""
    cand = rouge_tokenize(candidate)
    ref = rouge_tokenize(reference)
    if not cand or not ref:
        return RougeScore(0.0, 0.0, 0.0)
    lcs = _lcs_length(cand, ref)
    return _make_score(lcs / len(cand), lcs / len(ref))


def ensure_period(sentence: str) -> str:
    sentence = sentence.strip()
    if sentence and sentence[-1] not in ".!?":
        sentence += "."
    return sentence


def merge_items(items: Sequence[str]) -> str:
    """Join summary items with single spaces, ensuring terminal periods."""
    return " ".join(ensure_period(item) for item in items if item.strip())


def merge_reference(reference: ReferenceSummary) -> str:
    """Merge pros then cons into one generic reference text."""
    if not reference.valid:
        raise ValueError("reference is invalid: both pros and cons must be non-empty")
    return merge_items(list(reference.pros) + list(reference.cons))


def oracle_selections(reference: ReferenceSummary, pool: Sequence[SentenceRef]) -> list[SentenceRef]:
    """Per gold sentence, the pool sentence with the highest ROUGE-L F1.

    Ties go to the earlier pool position; selections are independent across
    gold sentences, so a pool sentence may serve several of them.
    """
    if not pool:
        raise ValueError("pool is empty")
    selections = []
    for gold in list(reference.pros) + list(reference.cons):
        best_index = 0
        best_score = -1.0
        for i, sentence in enumerate(pool):
            score = rouge_l_f1(sentence.text, gold).f1
            if score > best_score:
                best_score = score
                best_index = i
        selections.append(pool[best_index])
    return selections


def oracle_summary(reference: ReferenceSummary, pool: Sequence[SentenceRef]) -> str:
    return merge_items([s.text for s in oracle_selections(reference, pool)])


def random_summary(pool: Sequence[SentenceRef], k: int, seed: int) -> str:
    """Uniform sample of k pool sentences without replacement, seeded."""
    if k > len(pool):
        raise ValueError(f"k={k} exceeds pool size {len(pool)}")
    rng = random.Random(seed)
    picked = rng.sample(list(pool), k)
    return merge_items([s.text for s in picked])


def greedy_embed_score(candidate: str, reference: str, embedder: Embedder) -> float:
    """Greedy token-level cosine matching F1 under a pluggable embedder.

    Precision averages, over candidate tokens, the best cosine against any
    reference token; recall is symmetric. Zero when either side has no tokens.
    """
    cand = rouge_tokenize(candidate)
    ref = rouge_tokenize(reference)
    if not cand or not ref:
        return 0.0
    vocabulary = list(dict.fromkeys(cand + ref))
    vectors = dict(zip(vocabulary, embedder.embed(vocabulary)))
    cand_matrix = np.stack([vectors[t] for t in cand])
    ref_matrix = np.stack([vectors[t] for t in ref])
    similarities = cand_matrix @ ref_matrix.T
    precision = float(similarities.max(axis=1).mean())
    recall = float(similarities.max(axis=0).mean())
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


# --- corpus-level reporting --------------------------------------------------

@dataclass(frozen=True)
class EntityScore:
    entity_id: str
    rouge1: float
    rouge_l: float
    embed: float


@dataclass
class EvalReport:
    rows: list[EntityScore]
    valid_count: int
    invalid_count: int
    skipped_no_reference: int

    @property
    def mean_rouge1(self) -> Optional[float]:
        return sum(r.rouge1 for r in self.rows) / len(self.rows) if self.rows else None

    @property
    def mean_rouge_l(self) -> Optional[float]:
        return sum(r.rouge_l for r in self.rows) / len(self.rows) if self.rows else None

    @property
    def mean_embed(self) -> Optional[float]:
        return sum(r.embed for r in self.rows) / len(self.rows) if self.rows else None

    def to_dict(self) -> dict:
        def x100(value: Optional[float]):
            return None if value is None else round(value * 100.0, 2)

        return {
            "rows": [
                {
                    "entity_id": r.entity_id,
                    "rouge1": x100(r.rouge1),
                    "rouge_l": x100(r.rouge_l),
                    "embed": x100(r.embed),
                }
                for r in self.rows
            ],
            "mean": {
                "rouge1": x100(self.mean_rouge1),
                "rouge_l": x100(self.mean_rouge_l),
                "embed": x100(self.mean_embed),
            },
            "counts": {
                "valid": self.valid_count,
                "invalid": self.invalid_count,
                "skipped_no_reference": self.skipped_no_reference,
            },
        }


def evaluate_outputs(
    outputs: Sequence[tuple[str, str, bool]],
    corpus: Mapping[str, Entity],
    embedder: Embedder,
) -> EvalReport:
    """Score (entity_id, summary_text, valid) triples against gold references.

    Invalid summaries are counted but never scored; entities lacking a valid
    reference are skipped. Corpus means are over scored rows only.
    """
    rows: list[EntityScore] = []
    valid_count = invalid_count = skipped = 0
    for entity_id, text, valid in outputs:
        if not valid:
            invalid_count += 1
            continue
        entity = corpus.get(entity_id)
        if entity is None or entity.reference is None or not entity.reference.valid:
            skipped += 1
            continue
        valid_count += 1
        reference = merge_reference(entity.reference)
        rows.append(EntityScore(
            entity_id=entity_id,
            rouge1=rouge1_f1(text, reference).f1,
            rouge_l=rouge_l_f1(text, reference).f1,
            embed=greedy_embed_score(text, reference, embedder),
        ))
    return EvalReport(rows=rows, valid_count=valid_count,
                      invalid_count=invalid_count, skipped_no_reference=skipped)
