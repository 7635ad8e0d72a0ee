"""Multilingual lexical knowledge base: synsets, lexicalizations, edges, frequencies.

A KB file holds one JSON record per line::

    {"id": "s1", "pos": "n", "lemmas": {"en": ["bank"], "it": ["banca"]},
     "gloss": "...", "edges": ["s3"], "freq": {"en": {"bank": 10}}}

Edges may be declared on one side only; they are symmetrized on load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

POS_TAGS = frozenset({"n", "v", "a", "r"})
_FIELDS = ("id", "pos", "lemmas", "gloss", "edges", "freq")


class KBError(ValueError):
    """Raised for malformed or inconsistent knowledge-base files."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Synset:
    id: str
    pos: str
    lemmas: Mapping[str, frozenset[str]]
    gloss: str | None = None
    edges: frozenset[str] = frozenset()
    freq: Mapping[str, Mapping[str, int]] = field(default_factory=dict)

    def __post_init__(self):
        if self.gloss is not None and not isinstance(self.gloss, str):
            raise TypeError(f"synset {self.id!r}: gloss must be a string or None")
        if not isinstance(self.edges, frozenset):
            raise TypeError(f"synset {self.id!r}: edges must be a frozenset")

    def lexicalizes(self, lemma: str, lang: str) -> bool:
        return lemma in self.lemmas.get(lang, ())

    def frequency(self, lemma: str, lang: str) -> int:
        return self.freq.get(lang, {}).get(lemma, 0)


class LexKB:
    """Immutable synset graph with a (language, lemma) -> synsets index.

    Build one with :func:`load_kb` or :meth:`from_synsets`; both validate
    ids and edges and symmetrize the edge relation.
    """

    def __init__(self, synsets: Mapping[str, Synset]):
        self._synsets = dict(synsets)
        index: dict[tuple[str, str], set[str]] = {}
        for sid, syn in self._synsets.items():
            for lang, lemmas in syn.lemmas.items():
                for lemma in lemmas:
                    index.setdefault((lang, lemma), set()).add(sid)
        self._index = {key: frozenset(v) for key, v in index.items()}

    @classmethod
    def from_synsets(cls, synsets: Iterable[Synset]) -> "LexKB":
        by_id: dict[str, Synset] = {}
        for syn in synsets:
            if syn.id in by_id:
                raise KBError(f"duplicate synset id {syn.id!r}")
            by_id[syn.id] = syn
        return cls(_symmetrize(by_id, {}))

    @property
    def synsets(self) -> Mapping[str, Synset]:
        return self._synsets

    @property
    def index(self) -> Mapping[tuple[str, str], frozenset[str]]:
        return self._index

    def __len__(self) -> int:
        return len(self._synsets)

    def __contains__(self, sid: object) -> bool:
        return sid in self._synsets

    def __getitem__(self, sid: str) -> Synset:
        return self._synsets[sid]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LexKB):
            return NotImplemented
        return self._synsets == other._synsets

    def __getstate__(self):
        # cached graph arrays are rebuilt lazily after unpickling
        return {"_synsets": self._synsets, "_index": self._index}

    def __setstate__(self, state):
        self.__dict__.update(state)

    def languages(self) -> set[str]:
        return {lang for lang, _ in self._index}

    def senses(self, lemma: str, lang: str) -> frozenset[str]:
        return self._index.get((lang, lemma), frozenset())

    @cached_property
    def node_ids(self) -> list[str]:
        """Synset ids in sorted order; position = row/column in :attr:`transition`."""
        return sorted(self._synsets)

    @cached_property
    def node_position(self) -> dict[str, int]:
        return {sid: i for i, sid in enumerate(self.node_ids)}

    @cached_property
    def transition(self) -> tuple[sp.csr_matrix, np.ndarray]:
        """Column-stochastic transition matrix over the undirected graph, plus a dangling mask."""
        pos = self.node_position
        n = len(pos)
        rows, cols = [], []
        for sid, syn in self._synsets.items():
            for other in syn.edges:
                rows.append(pos[other])
                cols.append(pos[sid])
        data = np.ones(len(rows))
        adj = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
        degree = np.asarray(adj.sum(axis=0)).ravel()
        dangling = degree == 0
        scale = np.divide(1.0, degree, out=np.zeros(n), where=~dangling)
        return (adj @ sp.diags(scale)).tocsr(), dangling


def _symmetrize(by_id: dict[str, Synset], lines: Mapping[str, int]) -> dict[str, Synset]:
    neighbours: dict[str, set[str]] = {sid: set() for sid in by_id}
    for sid, syn in by_id.items():
        for other in syn.edges:
            if other not in by_id:
                raise KBError(
                    f"synset {sid!r} has an edge to unknown id {other!r}", lines.get(sid)
                )
            if other == sid:
                continue
            neighbours[sid].add(other)
            neighbours[other].add(sid)
    return {
        sid: Synset(syn.id, syn.pos, syn.lemmas, syn.gloss, frozenset(neighbours[sid]), syn.freq)
        for sid, syn in by_id.items()
    }


def _parse_record(record: object, lineno: int) -> Synset:
    if not isinstance(record, dict):
        raise KBError("record is not a JSON object", lineno)
    unknown = set(record) - set(_FIELDS)
    if unknown:
        raise KBError(f"unknown field(s) {sorted(unknown)}", lineno)
    for required in ("id", "pos", "lemmas", "edges"):
        if required not in record:
            raise KBError(f"missing field {required!r}", lineno)
    sid = record["id"]
    if not isinstance(sid, str) or not sid:
        raise KBError("id must be a non-empty string", lineno)
    if record["pos"] not in POS_TAGS:
        raise KBError(f"pos must be one of {sorted(POS_TAGS)}, got {record['pos']!r}", lineno)

    lemmas = record["lemmas"]
    if not isinstance(lemmas, dict) or not all(
        isinstance(v, list) and all(isinstance(x, str) and x for x in v) for v in lemmas.values()
    ):
        raise KBError("lemmas must map language to an array of non-empty strings", lineno)

    gloss = record.get("gloss")
    if gloss is not None and not isinstance(gloss, str):
        raise KBError("gloss must be a string", lineno)

    edges = record["edges"]
    if not isinstance(edges, list) or not all(isinstance(e, str) for e in edges):
        raise KBError("edges must be an array of synset ids", lineno)

    freq = record.get("freq") or {}
    if not isinstance(freq, dict):
        raise KBError("freq must be an object", lineno)
    for lang, counts in freq.items():
        if not isinstance(counts, dict):
            raise KBError(f"freq[{lang!r}] must be an object", lineno)
        for lemma, count in counts.items():
            if isinstance(count, bool) or not isinstance(count, int) or count < 0:
                raise KBError(f"freq[{lang!r}][{lemma!r}] must be a non-negative integer", lineno)
            if lemma not in lemmas.get(lang, ()):
                raise KBError(f"freq lemma {lemma!r} is not a {lang} lemma of {sid!r}", lineno)

    return Synset(
        id=sid,
        pos=record["pos"],
        lemmas={lang: frozenset(v) for lang, v in lemmas.items()},
        gloss=gloss,
        edges=frozenset(edges),
        freq={lang: dict(c) for lang, c in freq.items()},
    )


def load_kb(path: str | Path) -> LexKB:
    by_id: dict[str, Synset] = {}
    lines: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise KBError(f"malformed JSON ({exc.msg})", lineno) from None
            syn = _parse_record(record, lineno)
            if syn.id in by_id:
                raise KBError(
                    f"duplicate synset id {syn.id!r} (first seen on line {lines[syn.id]})", lineno
                )
            by_id[syn.id] = syn
            lines[syn.id] = lineno
    return LexKB(_symmetrize(by_id, lines))


def synset_record(syn: Synset) -> dict:
    record: dict = {
        "id": syn.id,
        "pos": syn.pos,
        "lemmas": {lang: sorted(syn.lemmas[lang]) for lang in sorted(syn.lemmas)},
    }
    if syn.gloss is not None:
        record["gloss"] = syn.gloss
    record["edges"] = sorted(syn.edges)
    freq = {lang: dict(sorted(c.items())) for lang, c in sorted(syn.freq.items()) if c}
    if freq:
        record["freq"] = freq
    return record


def dump_kb(kb: LexKB, path: str | Path) -> None:
    """Write ``kb`` in canonical form: sorted ids, sorted lemmas, symmetric edges."""
    with open(path, "w", encoding="utf-8") as fh:
        for sid in kb.node_ids:
            fh.write(json.dumps(synset_record(kb[sid]), ensure_ascii=False, separators=(",", ":")))
            fh.write("\n")


def senses_of(kb: LexKB, lemma: str, lang: str) -> frozenset[str]:
    return kb.senses(lemma, lang)


def synset_contains(kb: LexKB, sid: str, lemma: str, lang: str) -> bool:
    if sid not in kb:
        raise KeyError(f"unknown synset id {sid!r}")
    return kb[sid].lexicalizes(lemma, lang)


def translation_pairs(kb: LexKB, lang_a: str, lang_b: str) -> set[tuple[str, str]]:
    pairs = set()
    for syn in kb.synsets.values():
        for a in syn.lemmas.get(lang_a, ()):
            for b in syn.lemmas.get(lang_b, ()):
                pairs.add((a, b))
    return pairs


def mfs(kb: LexKB, lemma: str, pos: str | None, lang: str) -> str | None:
    """Most frequent sense of ``lemma``; ties go to the smallest synset id."""
    candidates = kb.senses(lemma, lang)
    if pos is not None:
        candidates = [sid for sid in candidates if kb[sid].pos == pos]
    if not candidates:
        return None
    return min(candidates, key=lambda sid: (-kb[sid].frequency(lemma, lang), sid))
