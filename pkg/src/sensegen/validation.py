"""Input validation helpers shared by the estimators and the CLI."""

from __future__ import annotations

import numbers
from pathlib import Path

from .corpus import AlignedSentencePair, Sentence, parse_bitext, parse_corpus
from .lexkb import LexKB


def check_positive_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 1:
        raise ValueError(f"{name} must be an integer >= 1, got {value!r}")
    return int(value)


def check_unit_interval(value, name: str, *, open_interval: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise TypeError(f"{name} must be a real number, got {value!r}")
    lo_ok = value > 0 if open_interval else value >= 0
    hi_ok = value < 1 if open_interval else value <= 1
    if not (lo_ok and hi_ok):
        bounds = "(0, 1)" if open_interval else "[0, 1]"
        raise ValueError(f"{name} must lie in {bounds}, got {value!r}")
    return float(value)


def check_kb(kb) -> LexKB:
    if not isinstance(kb, LexKB):
        raise TypeError(f"expected a LexKB, got {type(kb).__name__}")
    return kb


def check_bitext(X) -> list[AlignedSentencePair]:
    """Accept a path to a bitext file or a sequence of sentence pairs."""
    if isinstance(X, (str, Path)):
        return parse_bitext(X)
    pairs = list(X)
    for pair in pairs:
        if not isinstance(pair, AlignedSentencePair):
            raise TypeError(f"expected AlignedSentencePair items, got {type(pair).__name__}")
    return pairs


def check_sentences(X) -> list[Sentence]:
    """Accept a path to a corpus file or a sequence of sentences."""
    if isinstance(X, (str, Path)):
        return parse_corpus(X)
    sents = list(X)
    for sent in sents:
        if not isinstance(sent, Sentence):
            raise TypeError(f"expected Sentence items, got {type(sent).__name__}")
    return sents
