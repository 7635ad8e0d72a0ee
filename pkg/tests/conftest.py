import json

import pytest

from sensegen.corpus import AlignedSentencePair, SenseAnnotation, Sentence, Token
from sensegen.lexkb import load_kb

TOYKB_RECORDS = [
    {"id": "s1", "pos": "n", "lemmas": {"en": ["bank"], "it": ["banca"]}, "edges": ["s3"],
     "freq": {"en": {"bank": 10}}},
    {"id": "s2", "pos": "n", "lemmas": {"en": ["bank"], "it": ["riva"]}, "edges": ["s4"],
     "freq": {"en": {"bank": 3}}},
    {"id": "s3", "pos": "n", "lemmas": {"en": ["money"], "it": ["denaro"]}, "edges": []},
    {"id": "s4", "pos": "n", "lemmas": {"en": ["river"], "it": ["fiume"]}, "edges": []},
]


def write_jsonl(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")
    return path


@pytest.fixture
def toykb_path(tmp_path):
    return write_jsonl(tmp_path / "toykb.jsonl", TOYKB_RECORDS)


@pytest.fixture(scope="session")
def toykb(tmp_path_factory):
    # immutable, so one instance can serve every test
    return load_kb(write_jsonl(tmp_path_factory.mktemp("kb") / "toykb.jsonl", TOYKB_RECORDS))


def sent(lang, lemmas, anns=(), doc="d1", sid="s0", iids=False):
    """Sentence of noun tokens; ``anns`` is a sequence of (index, synset)."""
    tokens = tuple(
        Token(lemma, lemma, "n", f"{doc}.{sid}.t{i}" if iids else None) for i, lemma in enumerate(lemmas)
    )
    annotations = tuple(SenseAnnotation(i, s, 1.0, "gold") for i, s in anns)
    return Sentence(doc, sid, lang, tokens, annotations)


def pair(src_lemmas, tgt_lemmas, links, src_anns=(), tgt_anns=(), sid="s0"):
    return AlignedSentencePair(
        sent("en", src_lemmas, src_anns, sid=sid),
        sent("it", tgt_lemmas, tgt_anns, sid=sid),
        frozenset(links),
    )
