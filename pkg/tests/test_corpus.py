import json

import pytest

from reviewsum.corpus import (Entity, ReferenceSummary, Review, entity_to_dict,
                              load_corpus, save_corpus, split_sentences, split_text)
from reviewsum.errors import CorpusError


def write_lines(tmp_path, lines):
    path = tmp_path / "corpus.jsonl"
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    return path


def test_empty_file_yields_empty_corpus(tmp_path):
    assert load_corpus(write_lines(tmp_path, [])) == []


def test_single_entity_round_trips_schema(tmp_path):
    line = ('{"entity_id":"e1","name":"H",'
            '"reviews":[{"date":"2020-01-01","text":"Nice room."}]}')
    corpus = load_corpus(write_lines(tmp_path, [line]))
    assert len(corpus) == 1
    entity = corpus[0]
    assert entity.entity_id == "e1"
    assert len(entity.reviews) == 1
    assert entity.reviews[0].text == "Nice room."
    assert entity.reference is None


def test_empty_reviews_rejected(tmp_path):
    line = '{"entity_id":"e1","name":"H","reviews":[]}'
    with pytest.raises(CorpusError, match="empty reviews"):
        load_corpus(write_lines(tmp_path, [line]))


def test_malformed_line_reports_line_number(tmp_path):
    good = '{"entity_id":"e1","name":"H","reviews":[{"date":"2020-01-01","text":"A."}]}'
    with pytest.raises(CorpusError, match="line 2"):
        load_corpus(write_lines(tmp_path, [good, "{not json"]))


def test_duplicate_entity_id_rejected(tmp_path):
    line = '{"entity_id":"e1","name":"H","reviews":[{"date":"2020-01-01","text":"A."}]}'
    with pytest.raises(CorpusError, match="duplicate"):
        load_corpus(write_lines(tmp_path, [line, line]))


def test_bad_date_rejected_at_load(tmp_path):
    line = '{"entity_id":"e1","name":"H","reviews":[{"date":"not-a-date","text":"A."}]}'
    with pytest.raises(CorpusError, match="date"):
        load_corpus(write_lines(tmp_path, [line]))


def test_unknown_keys_rejected(tmp_path):
    line = ('{"entity_id":"e1","name":"H","extra":1,'
            '"reviews":[{"date":"2020-01-01","text":"A."}]}')
    with pytest.raises(CorpusError, match="unknown"):
        load_corpus(write_lines(tmp_path, [line]))


def test_save_load_round_trip(tmp_path, toy_corpus):
    path = tmp_path / "copy.jsonl"
    save_corpus(toy_corpus, path)
    reloaded = load_corpus(path)
    assert [entity_to_dict(e) for e in reloaded] == [entity_to_dict(e) for e in toy_corpus]


def test_reference_validity_rule():
    ref = ReferenceSummary(pros=("Good pool.",), cons=())
    assert not ref.valid
    assert ReferenceSummary(pros=("A.",), cons=("B.",)).valid


# --- sentence splitting -----------------------------------------------------

def entity_of(*review_texts):
    reviews = tuple(Review(date="2020-01-01", text=t) for t in review_texts)
    return Entity(entity_id="e", name="E", reviews=reviews)


def test_split_two_sentences():
    refs = split_sentences(entity_of("Great pool. Bad wifi."))
    assert [(r.review_index, r.sentence_index) for r in refs] == [(0, 0), (0, 1)]
    assert [r.text for r in refs] == ["Great pool.", "Bad wifi."]


def test_split_without_terminal_punctuation():
    refs = split_sentences(entity_of("Great pool"))
    assert [r.text for r in refs] == ["Great pool"]


def test_filter_rejecting_all_yields_empty():
    assert split_sentences(entity_of("Great pool. Bad wifi."), lambda s: False) == []


def test_abbreviations_do_not_split():
    assert split_text("Dr. Smith was kind. We will return.") == [
        "Dr. Smith was kind.", "We will return."]
    assert split_text("The rate was approx. 90 dollars. Fine by us.") == [
        "The rate was approx. 90 dollars.", "Fine by us."]


def test_decimal_numbers_do_not_split():
    assert split_text("We paid 4.5 stars worth. Good value.") == [
        "We paid 4.5 stars worth.", "Good value."]


def test_split_covers_all_characters_without_overlap(toy_corpus):
    for entity in toy_corpus:
        for review_index, review in enumerate(entity.reviews):
            parts = [r.text for r in split_sentences(entity)
                     if r.review_index == review_index]
            squashed = "".join("".join(p.split()) for p in parts)
            assert squashed == "".join(review.text.split())


def test_sentence_indices_dense_per_review(toy_corpus):
    for entity in toy_corpus:
        by_review = {}
        for ref in split_sentences(entity):
            by_review.setdefault(ref.review_index, []).append(ref.sentence_index)
        for indices in by_review.values():
            assert indices == list(range(len(indices)))
