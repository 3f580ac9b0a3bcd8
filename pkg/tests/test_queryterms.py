import random

from reviewsum.queryterms import (TermCandidate, extract_candidates, refine_terms,
                                  tokenize)

from conftest import make_pool


def naive_candidates(sentences, window, min_frequency, stopwords):
    """Independent O(n * window) double-loop oracle for candidate counting."""
    counts = {}
    order = []
    for sent in sentences:
        toks = tokenize(sent.text)
        for i in range(len(toks)):
            if toks[i] in stopwords:
                continue
            if toks[i] not in counts:
                counts[toks[i]] = 0
                order.append(toks[i])
            counts[toks[i]] += 1
            for j in range(i + 1, len(toks)):
                if j - i > window - 1:
                    break
                if toks[j] in stopwords or toks[j] == toks[i]:
                    continue
                pair = toks[i] + " " + toks[j]
                if pair not in counts:
                    counts[pair] = 0
                    order.append(pair)
                counts[pair] += 1
    rank = {t: i for i, t in enumerate(order)}
    kept = [t for t in order if counts[t] >= min_frequency]
    kept.sort(key=lambda t: (-counts[t], rank[t]))
    return [(t, counts[t]) for t in kept]


STOP = frozenset({"the", "a", "is", "was", "and"})


def test_empty_input_yields_empty():
    assert extract_candidates([], window=4, min_frequency=15, stopwords=STOP) == []


def test_repeated_sentence_counts_unigrams_and_bigram():
    pool = make_pool(["room clean"] * 15)
    got = {c.term: c.frequency for c in
           extract_candidates(pool, window=4, min_frequency=15, stopwords=STOP)}
    assert got == {"room": 15, "clean": 15, "room clean": 15}


def test_threshold_boundary_at_fourteen():
    pool = make_pool(["room clean"] * 14)
    assert extract_candidates(pool, window=4, min_frequency=15, stopwords=STOP) == []


def test_window_limits_bigram_span():
    # tokens: w0 room, w1 x, w2 y, w3 z, w4 pool -> "room pool" spans 5 positions
    pool = make_pool(["room xx yy zz pool"] * 3)
    terms = {c.term for c in extract_candidates(pool, window=4, min_frequency=3,
                                                stopwords=STOP)}
    assert "room zz" in terms      # j - i == 3, inside window 4
    assert "room pool" not in terms  # j - i == 4, outside


def test_matches_naive_oracle_on_random_corpora():
    rng = random.Random(1234)
    vocab = ["room", "pool", "staff", "clean", "the", "was", "wifi", "bed",
             "noisy", "view", "a", "breakfast"]
    for _ in range(30):
        sentences = make_pool([
            " ".join(rng.choices(vocab, k=rng.randint(1, 12)))
            for _ in range(rng.randint(1, 40))
        ])
        window = rng.choice([2, 3, 4, 5])
        threshold = rng.choice([1, 2, 3])
        got = [(c.term, c.frequency) for c in
               extract_candidates(sentences, window=window, min_frequency=threshold,
                                  stopwords=STOP)]
        assert got == naive_candidates(sentences, window, threshold, STOP)


def test_sentence_order_permutation_keeps_term_set():
    rng = random.Random(9)
    base = make_pool(["room clean", "pool warm", "room clean pool", "staff kind"] * 5)
    reference = {(c.term, c.frequency) for c in
                 extract_candidates(base, window=4, min_frequency=2, stopwords=STOP)}
    for _ in range(5):
        shuffled = base[:]
        rng.shuffle(shuffled)
        got = {(c.term, c.frequency) for c in
               extract_candidates(shuffled, window=4, min_frequency=2, stopwords=STOP)}
        assert got == reference


def test_no_stopwords_in_output():
    pool = make_pool(["the room was the best the"] * 20)
    for cand in extract_candidates(pool, window=4, min_frequency=2, stopwords=STOP):
        for word in cand.term.split():
            assert word not in STOP


def test_gold_filter_drops_non_domain_terms():
    candidates = [TermCandidate("the", 900)]
    assert refine_terms(candidates, {"room", "pool"}, q_max=15).terms == ()


def test_subsumption_removes_covered_unigram():
    candidates = [TermCandidate("room", 50), TermCandidate("pool", 40),
                  TermCandidate("room clean", 30)]
    result = refine_terms(candidates, {"room", "pool", "clean"}, q_max=15)
    assert result.term_strings() == ["pool", "room clean"]


def test_q_max_truncates_by_rank():
    candidates = [TermCandidate(f"gold{i}", 100 - i) for i in range(20)]
    gold = {f"gold{i}" for i in range(20)}
    result = refine_terms(candidates, gold, q_max=15)
    assert result.term_strings() == [f"gold{i}" for i in range(15)]


def test_bigram_membership_via_phrase_or_both_tokens():
    candidates = [TermCandidate("swimming pool", 10), TermCandidate("front desk", 9),
                  TermCandidate("weird pair", 8)]
    gold = {"swimming pool", "front", "desk"}
    result = refine_terms(candidates, gold, q_max=15)
    assert result.term_strings() == ["swimming pool", "front desk"]


def test_tokenize_drops_digits_and_lowercases():
    assert tokenize("Room 101 has Wi-Fi!") == ["room", "has", "wi", "fi"]
