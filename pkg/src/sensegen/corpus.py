"""Sentences, sense annotations, bitexts, Pharaoh alignments, key files, statistics.

Corpus files hold one sentence per line::

    {"doc":"d1","sid":"s0","lang":"en","tokens":[{"surface":"Bank","lemma":"bank","pos":"n","iid":"d1.s0.t0"}],
     "annotations":[{"token":0,"synset":"s1","score":1.0,"source":"gold"}]}

Bitext files hold ``{"src": <sentence>, "tgt": <sentence>, "align": [[i, j], ...]}``
per line. Serialization is canonical (fixed field order, compact separators) so
two runs over the same input can be compared byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

TOKEN_POS = frozenset({"n", "v", "a", "r", "other"})
CONTENT_POS = frozenset({"n", "v", "a", "r"})
SOURCES = frozenset({"gold", "ppr", "prop", "nn", "mfs", "ref"})


class CorpusFormatError(ValueError):
    """A corpus, bitext, alignment, or key file violates its format."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Token:
    surface: str
    lemma: str
    pos: str = "other"
    iid: str | None = None

    def __post_init__(self):
        if not self.surface:
            raise CorpusFormatError("token surface must be non-empty")
        if self.pos not in TOKEN_POS:
            raise CorpusFormatError(f"token pos must be one of {sorted(TOKEN_POS)}, got {self.pos!r}")

    @property
    def is_content(self) -> bool:
        return self.pos in CONTENT_POS


@dataclass(frozen=True)
class SenseAnnotation:
    token_index: int
    synset: str
    score: float = 1.0
    source: str = "gold"

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise CorpusFormatError(f"annotation score {self.score!r} outside [0, 1]")
        if self.source not in SOURCES:
            raise CorpusFormatError(f"annotation source must be one of {sorted(SOURCES)}")


@dataclass(frozen=True)
class Sentence:
    """A tokenized sentence; annotations are kept sorted by token index."""

    doc: str
    sid: str
    lang: str
    tokens: tuple[Token, ...]
    annotations: tuple[SenseAnnotation, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        anns = tuple(sorted(self.annotations, key=lambda a: a.token_index))
        seen = set()
        for ann in anns:
            if not 0 <= ann.token_index < len(self.tokens):
                raise CorpusFormatError(
                    f"annotation token index {ann.token_index} out of range for "
                    f"{len(self.tokens)}-token sentence {self.doc}.{self.sid}"
                )
            if ann.token_index in seen:
                raise CorpusFormatError(
                    f"duplicate annotation for token {ann.token_index} in {self.doc}.{self.sid}"
                )
            seen.add(ann.token_index)
        object.__setattr__(self, "annotations", anns)

    @property
    def key(self) -> tuple[str, str]:
        return (self.doc, self.sid)

    def annotation_at(self, index: int) -> SenseAnnotation | None:
        for ann in self.annotations:
            if ann.token_index == index:
                return ann
        return None

    def annotation_map(self) -> dict[int, SenseAnnotation]:
        return {a.token_index: a for a in self.annotations}

    def with_annotations(self, annotations: Iterable[SenseAnnotation]) -> "Sentence":
        return replace(self, annotations=tuple(annotations))

    def token_key(self, index: int) -> str:
        """Identifier used for token-occurrence embeddings."""
        return f"{self.doc}.{self.sid}.t{index}"


@dataclass(frozen=True)
class AlignedSentencePair:
    src: Sentence
    tgt: Sentence
    align: frozenset[tuple[int, int]] = frozenset()
    pseudo: bool = False

    def __post_init__(self):
        links = frozenset((int(i), int(j)) for i, j in self.align)
        for i, j in links:
            if not (0 <= i < len(self.src.tokens) and 0 <= j < len(self.tgt.tokens)):
                raise CorpusFormatError(
                    f"link {i}-{j} out of range for a {len(self.src.tokens)}x"
                    f"{len(self.tgt.tokens)} sentence pair"
                )
        object.__setattr__(self, "align", links)

    def src_links(self, i: int) -> list[int]:
        return sorted(j for a, j in self.align if a == i)

    def tgt_links(self, j: int) -> list[int]:
        return sorted(i for i, b in self.align if b == j)


@dataclass(frozen=True)
class CorpusStats:
    annotated_tokens: int = 0
    annotated_word_types: int = 0
    sense_types: int = 0
    failed_alignments: int = 0

    def as_dict(self) -> dict[str, int]:
        return {
            "annotated_tokens": self.annotated_tokens,
            "annotated_word_types": self.annotated_word_types,
            "sense_types": self.sense_types,
            "failed_alignments": self.failed_alignments,
        }


# -- records ---------------------------------------------------------------

def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def sentence_record(sent: Sentence) -> dict:
    tokens = []
    for tok in sent.tokens:
        rec = {"surface": tok.surface, "lemma": tok.lemma, "pos": tok.pos}
        if tok.iid is not None:
            rec["iid"] = tok.iid
        tokens.append(rec)
    return {
        "doc": sent.doc,
        "sid": sent.sid,
        "lang": sent.lang,
        "tokens": tokens,
        "annotations": [
            {"token": a.token_index, "synset": a.synset, "score": a.score, "source": a.source}
            for a in sent.annotations
        ],
    }


def _require(record: Mapping, name: str, kind, lineno: int | None):
    if name not in record:
        raise CorpusFormatError(f"missing field {name!r}", lineno)
    value = record[name]
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise CorpusFormatError(f"field {name!r} has the wrong type", lineno)
    return value


def _optional_str(record: Mapping, name: str, lineno: int | None) -> str | None:
    value = record.get(name)
    if value is not None and not (isinstance(value, str) and value):
        raise CorpusFormatError(f"field {name!r} must be a non-empty string", lineno)
    return value


def sentence_from_record(record: object, lineno: int | None = None) -> Sentence:
    if not isinstance(record, dict):
        raise CorpusFormatError("sentence record is not a JSON object", lineno)
    try:
        tokens = []
        for tok in _require(record, "tokens", list, lineno):
            if not isinstance(tok, dict):
                raise CorpusFormatError("token is not a JSON object", lineno)
            tokens.append(
                Token(
                    surface=_require(tok, "surface", str, lineno),
                    lemma=_require(tok, "lemma", str, lineno),
                    pos=_require(tok, "pos", str, lineno),
                    iid=_optional_str(tok, "iid", lineno),
                )
            )
        anns = []
        for ann in record.get("annotations", []):
            if not isinstance(ann, dict):
                raise CorpusFormatError("annotation is not a JSON object", lineno)
            score = _require(ann, "score", (int, float), lineno)
            anns.append(
                SenseAnnotation(
                    token_index=_require(ann, "token", int, lineno),
                    synset=_require(ann, "synset", str, lineno),
                    score=float(score),
                    source=_require(ann, "source", str, lineno),
                )
            )
        return Sentence(
            doc=_require(record, "doc", str, lineno),
            sid=_require(record, "sid", str, lineno),
            lang=_require(record, "lang", str, lineno),
            tokens=tuple(tokens),
            annotations=tuple(anns),
        )
    except CorpusFormatError as exc:
        if exc.line is None and lineno is not None:
            raise CorpusFormatError(str(exc), lineno) from None
        raise


def pair_record(pair: AlignedSentencePair) -> dict:
    rec = {
        "src": sentence_record(pair.src),
        "tgt": sentence_record(pair.tgt),
        "align": [list(link) for link in sorted(pair.align)],
    }
    if pair.pseudo:
        rec["pseudo"] = True
    return rec


def pair_from_record(record: object, lineno: int | None = None) -> AlignedSentencePair:
    if not isinstance(record, dict):
        raise CorpusFormatError("bitext record is not a JSON object", lineno)
    src = sentence_from_record(_require(record, "src", dict, lineno), lineno)
    tgt = sentence_from_record(_require(record, "tgt", dict, lineno), lineno)
    links = []
    for link in record.get("align", []):
        if (
            not isinstance(link, list)
            or len(link) != 2
            or not all(isinstance(x, int) and not isinstance(x, bool) for x in link)
        ):
            raise CorpusFormatError(f"malformed link {link!r}", lineno)
        links.append(tuple(link))
    try:
        return AlignedSentencePair(src, tgt, frozenset(links), bool(record.get("pseudo", False)))
    except CorpusFormatError as exc:
        raise CorpusFormatError(str(exc), lineno) from None


def _read_records(path: str | Path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                yield lineno, json.loads(raw)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"malformed JSON ({exc.msg})", lineno) from None


def _check_unique(sentences: Iterable[tuple[int, Sentence]]) -> None:
    seen: dict[tuple[str, str], int] = {}
    for lineno, sent in sentences:
        if sent.key in seen:
            raise CorpusFormatError(
                f"duplicate sentence {sent.doc}.{sent.sid} (first on line {seen[sent.key]})", lineno
            )
        seen[sent.key] = lineno


# -- corpus files ----------------------------------------------------------

def parse_corpus(path: str | Path) -> list[Sentence]:
    numbered = [(lineno, sentence_from_record(rec, lineno)) for lineno, rec in _read_records(path)]
    _check_unique(numbered)
    return [sent for _, sent in numbered]


def serialize_corpus(sentences: Iterable[Sentence], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sent in sentences:
            fh.write(_dumps(sentence_record(sent)) + "\n")


# -- bitexts and Pharaoh alignments ----------------------------------------

def parse_pharaoh_line(line: str, lineno: int | None = None) -> frozenset[tuple[int, int]]:
    links = set()
    for item in line.split():
        left, sep, right = item.partition("-")
        if not sep or not left.isdigit() or not right.isdigit():
            raise CorpusFormatError(f"malformed Pharaoh link {item!r}", lineno)
        links.add((int(left), int(right)))
    return frozenset(links)


def format_pharaoh(links: Iterable[tuple[int, int]]) -> str:
    return " ".join(f"{i}-{j}" for i, j in sorted(links))


def read_pharaoh(path: str | Path) -> list[frozenset[tuple[int, int]]]:
    with open(path, encoding="utf-8") as fh:
        return [parse_pharaoh_line(raw, n) for n, raw in enumerate(fh, start=1)]


def write_pharaoh(pairs: Iterable[AlignedSentencePair], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(format_pharaoh(pair.align) + "\n")


def parse_bitext(path: str | Path, align_path: str | Path | None = None) -> list[AlignedSentencePair]:
    """Read a bitext; links from ``align_path`` (Pharaoh) replace embedded ones."""
    numbered = [(lineno, pair_from_record(rec, lineno)) for lineno, rec in _read_records(path)]
    if align_path is not None:
        alignments = read_pharaoh(align_path)
        if len(alignments) != len(numbered):
            raise CorpusFormatError(
                f"alignment file has {len(alignments)} lines but the bitext has "
                f"{len(numbered)} sentence pairs"
            )
        attached = []
        for (lineno, pair), links in zip(numbered, alignments):
            try:
                attached.append((lineno, replace(pair, align=links)))
            except CorpusFormatError as exc:
                raise CorpusFormatError(f"{exc} (alignment line {len(attached) + 1})", lineno) from None
        numbered = attached
    _check_unique((n, p.src) for n, p in numbered)
    return [pair for _, pair in numbered]


def serialize_bitext(pairs: Iterable[AlignedSentencePair], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(_dumps(pair_record(pair)) + "\n")


# -- statistics ------------------------------------------------------------

def corpus_stats(sentences: Iterable[Sentence], failed_alignments: int = 0) -> CorpusStats:
    tokens = 0
    word_types = set()
    sense_types = set()
    for sent in sentences:
        for ann in sent.annotations:
            tok = sent.tokens[ann.token_index]
            tokens += 1
            word_types.add((tok.lemma, tok.pos))
            sense_types.add(ann.synset)
    return CorpusStats(tokens, len(word_types), len(sense_types), failed_alignments)


def format_stats_table(rows: Mapping[str, CorpusStats]) -> str:
    """Aligned-column table with one row per language."""
    header = ("Lang", "Annotated Tokens", "Annotated Word Types", "Sense Types", "Failed Alignments")
    body = [
        (lang, f"{s.annotated_tokens:,}", f"{s.annotated_word_types:,}", f"{s.sense_types:,}",
         f"{s.failed_alignments:,}")
        for lang, s in rows.items()
    ]
    widths = [max(len(r[k]) for r in [header, *body]) for k in range(len(header))]
    lines = ["  ".join(cell.rjust(w) if k else cell.ljust(w) for k, (cell, w) in enumerate(zip(r, widths)))
             for r in [header, *body]]
    return "\n".join(lines) + "\n"


# -- key files -------------------------------------------------------------

def key_from_sentences(sentences: Iterable[Sentence]) -> dict[str, frozenset[str]]:
    key: dict[str, set[str]] = {}
    for sent in sentences:
        for ann in sent.annotations:
            iid = sent.tokens[ann.token_index].iid
            if iid is not None:
                key.setdefault(iid, set()).add(ann.synset)
    return {iid: frozenset(s) for iid, s in key.items()}


def dump_key(key: Mapping[str, Iterable[str]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for iid, synsets in key.items():
            fh.write(" ".join([iid, *sorted(synsets)]) + "\n")


def write_key(sentences: Iterable[Sentence], path: str | Path) -> None:
    dump_key(key_from_sentences(sentences), path)


def parse_key(path: str | Path) -> dict[str, frozenset[str]]:
    key: dict[str, frozenset[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            fields = raw.split()
            if not fields:
                continue
            if len(fields) < 2:
                raise CorpusFormatError(f"instance {fields[0]!r} has no synsets", lineno)
            if fields[0] in key:
                raise CorpusFormatError(f"duplicate instance id {fields[0]!r}", lineno)
            key[fields[0]] = frozenset(fields[1:])
    return key


def content_tokens(sentence: Sentence) -> Sequence[int]:
    return [i for i, tok in enumerate(sentence.tokens) if tok.is_content]


def strip_annotations(sentence: Sentence) -> Sentence:
    return replace(sentence, annotations=())


__all__ = [
    "AlignedSentencePair", "CorpusFormatError", "CorpusStats", "SenseAnnotation", "Sentence",
    "Token", "content_tokens", "corpus_stats", "dump_key", "format_pharaoh", "format_stats_table",
    "key_from_sentences", "pair_from_record", "pair_record", "parse_bitext", "parse_corpus",
    "parse_key", "parse_pharaoh_line", "read_pharaoh", "sentence_from_record", "sentence_record",
    "serialize_bitext", "serialize_corpus", "strip_annotations", "write_key", "write_pharaoh",
]
