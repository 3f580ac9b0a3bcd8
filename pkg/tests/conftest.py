import json
from pathlib import Path

import pytest

from reviewsum._data import data_path
from reviewsum.corpus import SentenceRef, load_corpus


@pytest.fixture(scope="session")
def toy_corpus():
    return load_corpus(str(data_path("toy_corpus.jsonl")))


@pytest.fixture(scope="session")
def sff_corpus_cases():
    """(name, raw text, expected dict) for every bundled golden pair."""
    directory = Path(str(data_path("sff_corpus")))
    cases = []
    for raw_path in sorted(directory.glob("*.raw.txt")):
        name = raw_path.name.replace(".raw.txt", "")
        raw = raw_path.read_text(encoding="utf-8")
        expected = json.loads(
            (directory / f"{name}.expected.json").read_text(encoding="utf-8"))
        cases.append((name, raw, expected))
    return cases


def make_pool(texts, entity_id="e"):
    """SentenceRefs in corpus order from plain strings."""
    return [SentenceRef(entity_id, 0, i, t) for i, t in enumerate(texts)]
