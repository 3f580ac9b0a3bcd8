"""Sentence retrieval: Okapi BM25, dense cosine ranking, exclusive assignment.

Evidence pools are review sentences; each query term takes its top-k
unassigned sentences in term rank order, so the per-term evidence sets are
pairwise disjoint. Ties always break by corpus order (pool position).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .corpus import SentenceRef
from .errors import RetrievalError
from .queryterms import QueryTermSet, tokenize


@dataclass(frozen=True)
class ScoredSentence:
    sentence: SentenceRef
    score: float


@dataclass
class RetrievalResult:
    """Per-term ranked evidence with pairwise-disjoint sentence sets."""

    assignments: dict[str, list[ScoredSentence]]
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        seen: set[SentenceRef] = set()
        for term, scored in self.assignments.items():
            if len(scored) > self.k:
                raise ValueError(f"term {term!r} has more than k sentences")
            for s in scored:
                if s.sentence in seen:
                    raise ValueError(f"sentence assigned to more than one term: {s.sentence}")
                seen.add(s.sentence)

    def all_sentences(self) -> list[SentenceRef]:
        return [s.sentence for scored in self.assignments.values() for s in scored]


class Embedder:
    """Interface: unit-norm text embeddings, deterministic within a run."""

    dimension: int

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        raise NotImplementedError


class HashingEmbedder(Embedder):
    """Deterministic bag-of-words embedder via signed token hashing.

    Each token lands on a SHA-1 derived coordinate with a SHA-1 derived sign;
    the sum is L2-normalized. Texts with no tokens (and sums that cancel to
    zero) map to the first basis vector. No model files, stable across runs.
    """

    def __init__(self, dimension: int = 256):
        if dimension < 2:
            raise ValueError("dimension must be >= 2")
        self.dimension = dimension
        self._token_cache: dict[str, tuple[int, int]] = {}

    def _slot(self, token: str) -> tuple[int, int]:
        cached = self._token_cache.get(token)
        if cached is None:
            digest = hashlib.sha1(token.encode("utf-8")).digest()
            index = int.from_bytes(digest[:4], "big") % self.dimension
            sign = 1 if digest[4] & 1 else -1
            cached = (index, sign)
            self._token_cache[token] = cached
        return cached

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        vectors = []
        for text in texts:
            vec = np.zeros(self.dimension, dtype=np.float64)
            for token in tokenize(text):
                index, sign = self._slot(token)
                vec[index] += sign
            norm = float(np.linalg.norm(vec))
            if norm == 0.0:
                vec = np.zeros(self.dimension, dtype=np.float64)
                vec[0] = 1.0
            else:
                vec /= norm
            vectors.append(vec)
        return vectors


def bm25_idf(n_docs: int, doc_freq: int) -> float:
    return math.log((n_docs - doc_freq + 0.5) / (doc_freq + 0.5) + 1.0)


def bm25_rank(
    query: str,
    pool: Sequence[SentenceRef],
    k1: float = 1.2,
    b: float = 0.75,
) -> list[ScoredSentence]:
    """Score every pool sentence against the query with Okapi BM25.

    Documents are single sentences; multi-token queries sum per-token scores.
    Query tokens absent from the pool contribute zero, so an unmatched query
    yields an all-zero, corpus-ordered ranking.
    """
    if not pool:
        raise ValueError("pool is empty")
    docs = [tokenize(s.text) for s in pool]
    n_docs = len(docs)
    avgdl = sum(len(d) for d in docs) / n_docs

    query_tokens = tokenize(query)
    doc_freq = {t: sum(1 for d in docs if t in d) for t in set(query_tokens)}

    scores = []
    for doc in docs:
        if avgdl == 0.0:
            scores.append(0.0)
            continue
        dl = len(doc)
        denom_norm = k1 * (1.0 - b + b * dl / avgdl)
        score = 0.0
        for tok in query_tokens:
            tf = doc.count(tok)
            if tf == 0:
                continue
            score += bm25_idf(n_docs, doc_freq[tok]) * tf * (k1 + 1.0) / (tf + denom_norm)
        scores.append(score)

    order = sorted(range(n_docs), key=lambda i: (-scores[i], i))
    return [ScoredSentence(pool[i], scores[i]) for i in order]


def dense_rank(
    query: str,
    pool: Sequence[SentenceRef],
    embedder: Embedder,
) -> list[ScoredSentence]:
    """Rank the pool by cosine similarity to the query under ``embedder``."""
    if not pool:
        raise ValueError("pool is empty")
    try:
        vectors = embedder.embed([query] + [s.text for s in pool])
    except Exception as exc:
        raise RetrievalError(f"embedder failed: {exc}") from exc
    query_vec = vectors[0]
    scores = [float(np.dot(query_vec, v)) for v in vectors[1:]]
    order = sorted(range(len(pool)), key=lambda i: (-scores[i], i))
    return [ScoredSentence(pool[i], scores[i]) for i in order]


def retrieve_exclusive(
    terms: QueryTermSet,
    pool: Sequence[SentenceRef],
    k: int,
    ranker: str = "bm25",
    embedder: Optional[Embedder] = None,
    k1: float = 1.2,
    b: float = 0.75,
) -> RetrievalResult:
    """Assign top-k evidence sentences per term with exclusive assignment.

    Terms are processed in rank order; every term ranks the full pool but may
    only take sentences no earlier term has claimed. An exhausted pool leaves
    later terms with shorter (possibly empty) lists.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if ranker not in ("bm25", "dense"):
        raise ValueError(f"unknown ranker {ranker!r}")
    if ranker == "dense" and embedder is None:
        embedder = HashingEmbedder()

    assigned: set[SentenceRef] = set()
    assignments: dict[str, list[ScoredSentence]] = {}
    for cand in terms.terms:
        if pool:
            if ranker == "bm25":
                ranking = bm25_rank(cand.term, pool, k1=k1, b=b)
            else:
                ranking = dense_rank(cand.term, pool, embedder)
        else:
            ranking = []
        taken: list[ScoredSentence] = []
        for scored in ranking:
            if scored.sentence in assigned:
                continue
            taken.append(scored)
            assigned.add(scored.sentence)
            if len(taken) == k:
                break
        assignments[cand.term] = taken
    return RetrievalResult(assignments=assignments, k=k)
