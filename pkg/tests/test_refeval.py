import itertools
import random
from collections import Counter

import numpy as np
import pytest

from reviewsum.corpus import ReferenceSummary
from reviewsum.refeval import (greedy_embed_score, merge_reference, oracle_selections,
                               oracle_summary, random_summary, rouge1_f1, rouge_l_f1,
                               rouge_tokenize)
from reviewsum.retrieval import HashingEmbedder

from conftest import make_pool


# --- independent oracles -----------------------------------------------------

def oracle_rouge1(candidate, reference):
    cand, ref = rouge_tokenize(candidate), rouge_tokenize(reference)
    if not cand or not ref:
        return (0.0, 0.0, 0.0)
    cc, rc = Counter(cand), Counter(ref)
    overlap = sum((cc & rc).values())
    p, r = overlap / len(cand), overlap / len(ref)
    f = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return (p, r, f)


def lcs_recursive(a, b, memo=None):
    """Memoized recursion, structurally different from the iterative DP."""
    if memo is None:
        memo = {}
    key = (len(a), len(b))
    if key in memo:
        return memo[key]
    if not a or not b:
        result = 0
    elif a[-1] == b[-1]:
        result = 1 + lcs_recursive(a[:-1], b[:-1], memo)
    else:
        result = max(lcs_recursive(a[:-1], b, memo), lcs_recursive(a, b[:-1], memo))
    memo[key] = result
    return result


def lcs_enumerate(a, b):
    """Brute-force subsequence enumeration; only for tiny sequences."""
    best = 0
    for r in range(len(a), 0, -1):
        for combo in itertools.combinations(range(len(a)), r):
            sub = [a[i] for i in combo]
            it = iter(b)
            if all(tok in it for tok in sub):
                return r
    return best


def test_lcs_oracles_agree_on_tiny_cases():
    rng = random.Random(5)
    vocab = list("abcde")
    for _ in range(30):
        a = [rng.choice(vocab) for _ in range(rng.randint(0, 7))]
        b = [rng.choice(vocab) for _ in range(rng.randint(0, 7))]
        assert lcs_recursive(a, b) == lcs_enumerate(a, b)


# --- ROUGE-1 -------------------------------------------------------------------

def test_rouge1_identity():
    assert rouge1_f1("The pool was warm", "the pool was warm").f1 == pytest.approx(1.0)


def test_rouge1_disjoint():
    assert rouge1_f1("alpha beta", "gamma delta").f1 == 0.0


def test_rouge1_clipped_counts_example():
    score = rouge1_f1("the cat", "the cat sat")
    assert score.precision == pytest.approx(1.0)
    assert score.recall == pytest.approx(2 / 3)
    assert score.f1 == pytest.approx(0.8)


def test_rouge1_both_empty():
    score = rouge1_f1("", "")
    assert (score.precision, score.recall, score.f1) == (0.0, 0.0, 0.0)


# --- ROUGE-L -------------------------------------------------------------------

def test_rouge_l_identity():
    assert rouge_l_f1("a b c", "a b c").f1 == pytest.approx(1.0)


def test_rouge_l_substitution():
    score = rouge_l_f1("a b c", "a x c")
    assert score.f1 == pytest.approx(2 / 3)


def test_rouge_l_reversal():
    score = rouge_l_f1("c b a", "a b c")
    # LCS of a reversal is 1
    assert score.precision == pytest.approx(1 / 3)


def test_rouge_matches_oracles_on_random_pairs():
    rng = random.Random(99)
    vocab = ["room", "pool", "staff", "bed", "view", "clean", "warm", "old", "the", "a"]
    for _ in range(100):
        a = " ".join(rng.choices(vocab, k=rng.randint(0, 20)))
        b = " ".join(rng.choices(vocab, k=rng.randint(0, 20)))
        got1 = rouge1_f1(a, b)
        want_p, want_r, want_f = oracle_rouge1(a, b)
        assert got1.precision == pytest.approx(want_p, abs=1e-9)
        assert got1.recall == pytest.approx(want_r, abs=1e-9)
        assert got1.f1 == pytest.approx(want_f, abs=1e-9)

        gotl = rouge_l_f1(a, b)
        ta, tb = rouge_tokenize(a), rouge_tokenize(b)
        lcs = lcs_recursive(ta, tb)
        if ta and tb:
            assert gotl.precision == pytest.approx(lcs / len(ta), abs=1e-9)
            assert gotl.recall == pytest.approx(lcs / len(tb), abs=1e-9)


def test_rouge_symmetry_swaps_precision_recall():
    rng = random.Random(11)
    vocab = ["x", "y", "z", "w"]
    for _ in range(30):
        a = " ".join(rng.choices(vocab, k=rng.randint(1, 10)))
        b = " ".join(rng.choices(vocab, k=rng.randint(1, 10)))
        for fn in (rouge1_f1, rouge_l_f1):
            ab, ba = fn(a, b), fn(b, a)
            assert ab.f1 == pytest.approx(ba.f1, abs=1e-12)
            assert ab.precision == pytest.approx(ba.recall, abs=1e-12)


# --- merging and baselines -------------------------------------------------------

def test_merge_reference_order_and_periods():
    ref = ReferenceSummary(pros=("Free Wi-Fi.",), cons=("Wi-Fi fee.",))
    assert merge_reference(ref) == "Free Wi-Fi. Wi-Fi fee."


def test_merge_invalid_reference_rejected():
    with pytest.raises(ValueError):
        merge_reference(ReferenceSummary(pros=("a.",), cons=()))


def test_merge_appends_missing_periods():
    ref = ReferenceSummary(pros=("Great pool",), cons=("Thin walls",))
    assert merge_reference(ref) == "Great pool. Thin walls."


def test_oracle_recovers_verbatim_gold():
    ref = ReferenceSummary(pros=("The pool was warm.", "Staff were kind."),
                           cons=("The lift was slow.",))
    pool = make_pool(["Noise outside.", "The pool was warm.", "Staff were kind.",
                      "The lift was slow.", "Coffee was fine."])
    assert oracle_summary(ref, pool) == merge_reference(ref)
    for selection, gold in zip(oracle_selections(ref, pool),
                               list(ref.pros) + list(ref.cons)):
        assert rouge_l_f1(selection.text, gold).f1 == pytest.approx(1.0)


def test_oracle_matches_exhaustive_argmax():
    rng = random.Random(123)
    vocab = ["pool", "room", "staff", "warm", "cold", "clean", "old", "big"]
    for _ in range(10):
        gold = [" ".join(rng.choices(vocab, k=rng.randint(2, 6))) + "."
                for _ in range(5)]
        ref = ReferenceSummary(pros=tuple(gold[:3]), cons=tuple(gold[3:]))
        pool = make_pool([" ".join(rng.choices(vocab, k=rng.randint(2, 6))) + "."
                          for _ in range(50)])
        got = oracle_selections(ref, pool)
        for g, choice in zip(gold, got):
            best = max(pool, key=lambda s: (rouge_l_f1(s.text, g).f1, -pool.index(s)))
            assert rouge_l_f1(choice.text, g).f1 == pytest.approx(
                rouge_l_f1(best.text, g).f1, abs=1e-12)


def test_oracle_tie_takes_earlier_pool_sentence():
    ref = ReferenceSummary(pros=("warm pool.",), cons=("slow lift.",))
    pool = make_pool(["warm pool here.", "warm pool here.", "slow lift there."])
    picks = oracle_selections(ref, pool)
    assert picks[0].sentence_index == 0


def test_random_summary_determinism_and_k_equal_pool():
    pool = make_pool([f"s{i}." for i in range(10)])
    full = random_summary(pool, k=len(pool), seed=3)
    assert set(full.split()) == {f"s{i}." for i in range(10)}
    assert random_summary(pool, 3, seed=42) == random_summary(pool, 3, seed=42)
    with pytest.raises(ValueError):
        random_summary(pool, 11, seed=0)


def test_random_summary_inclusion_frequency_uniform():
    pool = make_pool([f"tok{i}." for i in range(10)])
    counts = Counter()
    for seed in range(1000):
        text = random_summary(pool, 3, seed=seed)
        for i in range(10):
            if f"tok{i}." in text.split():
                counts[i] += 1
    for i in range(10):
        assert abs(counts[i] / 1000 - 0.3) < 0.05


# --- greedy embedding score -------------------------------------------------------

def test_greedy_identity_scores_one():
    embedder = HashingEmbedder()
    assert greedy_embed_score("warm clean pool", "warm clean pool",
                              embedder) == pytest.approx(1.0)


def test_greedy_orthogonal_tokens_score_zero():
    embedder = HashingEmbedder()
    score = greedy_embed_score("alpha beta", "gamma delta", embedder)
    assert score == pytest.approx(0.0, abs=1e-12)


def test_greedy_matches_exhaustive_cosine_oracle():
    embedder = HashingEmbedder()
    cand = "warm pool staff lobby bed"
    ref = "cold pool crew lobby mattress"
    ct, rt = rouge_tokenize(cand), rouge_tokenize(ref)
    vc = embedder.embed(ct)
    vr = embedder.embed(rt)
    sims = np.array([[float(np.dot(c, r)) for r in vr] for c in vc])
    p = sims.max(axis=1).mean()
    r = sims.max(axis=0).mean()
    expected = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    assert greedy_embed_score(cand, ref, embedder) == pytest.approx(expected, abs=1e-12)
