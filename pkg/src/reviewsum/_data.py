"""Access to data files bundled with the package."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources


def _data_root():
    return resources.files("reviewsum") / "data"


def data_path(name: str):
    """Path-like handle to a bundled data file or directory."""
    return _data_root() / name


@lru_cache(maxsize=None)
def default_stopwords() -> frozenset[str]:
    text = (_data_root() / "stopwords.txt").read_text(encoding="utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


@lru_cache(maxsize=None)
def default_gold_terms() -> frozenset[str]:
    text = (_data_root() / "gold_terms_hotel.txt").read_text(encoding="utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


@lru_cache(maxsize=None)
def default_opinion_lexicon() -> dict[str, str]:
    """Word -> polarity ("positive" | "negative") for the rule-based extractor."""
    text = (_data_root() / "opinion_lexicon.txt").read_text(encoding="utf-8")
    lexicon: dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        word, _, polarity = line.partition("\t")
        lexicon[word.strip().lower()] = polarity.strip().lower()
    return lexicon


def load_term_file(path) -> frozenset[str]:
    """Plain text term list: one lowercase term per line."""
    with open(path, "r", encoding="utf-8") as handle:
        return frozenset(w.strip().lower() for w in handle if w.strip())
