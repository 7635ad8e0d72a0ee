"""IBM Model 1 word alignment with knowledge-base augmentation and correction.

Two KB-driven steps wrap a plain Model 1 aligner:

* :func:`augment_bitext` appends one-token pseudo pairs for every KB
  translation pair seen in the corpus, biasing EM toward mutual translations;
* :func:`correct_alignment` relinks source tokens whose links share no synset
  to a free target token that does.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .corpus import AlignedSentencePair, Sentence, Token
from .lexkb import LexKB, translation_pairs
from .validation import check_bitext, check_kb, check_positive_int

NULL = "<NULL>"
FLOOR = 1e-12
PSEUDO_DOC = "__pseudo__"


@dataclass
class TranslationTable:
    """``t[(src, tgt)] = p(tgt | src)``; rows sum to one over the target vocabulary."""

    t: dict[tuple[str, str], float] = field(default_factory=dict)
    src_vocab: set[str] = field(default_factory=set)
    tgt_vocab: set[str] = field(default_factory=set)

    def prob(self, src: str, tgt: str) -> float:
        return self.t.get((src, tgt), FLOOR)

    def row_sums(self) -> dict[str, float]:
        sums: dict[str, float] = defaultdict(float)
        for (src, _), p in self.t.items():
            sums[src] += p
        return dict(sums)

    def dump(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for (src, tgt), p in sorted(self.t.items()):
                fh.write(f"{src} {tgt} {p!r}\n")

    @classmethod
    def load(cls, path: str | Path) -> "TranslationTable":
        table = cls()
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                parts = raw.split()
                if not parts:
                    continue
                if len(parts) != 3:
                    raise ValueError(f"line {lineno}: expected 'src tgt prob'")
                src, tgt, p = parts[0], parts[1], float(parts[2])
                table.t[(src, tgt)] = p
                table.src_vocab.add(src)
                table.tgt_vocab.add(tgt)
        return table


def _lemmas(sent: Sentence) -> list[str]:
    return [tok.lemma for tok in sent.tokens]


def augment_bitext(
    bitext: Sequence[AlignedSentencePair],
    kb: LexKB,
    lang_src: str,
    lang_tgt: str,
    copies: int = 1,
) -> list[AlignedSentencePair]:
    """Append ``copies`` pseudo pairs per KB translation pair found in both vocabularies."""
    check_positive_int(copies, "copies")
    real = [p for p in bitext if not p.pseudo]
    src_vocab = {lemma for p in real for lemma in _lemmas(p.src)}
    tgt_vocab = {lemma for p in real for lemma in _lemmas(p.tgt)}
    shared = sorted(
        (a, b) for a, b in translation_pairs(kb, lang_src, lang_tgt)
        if a in src_vocab and b in tgt_vocab
    )
    out = list(bitext)
    n = 0
    for a, b in shared:
        for _ in range(copies):
            sid = f"p{n}"
            out.append(
                AlignedSentencePair(
                    Sentence(PSEUDO_DOC, sid, lang_src, (Token(a, a),)),
                    Sentence(PSEUDO_DOC, sid, lang_tgt, (Token(b, b),)),
                    frozenset({(0, 0)}),
                    pseudo=True,
                )
            )
            n += 1
    return out


def _sides(bitext, reverse: bool):
    for pair in bitext:
        src, tgt = _lemmas(pair.src), _lemmas(pair.tgt)
        yield (tgt, src) if reverse else (src, tgt)


def train_model1(
    bitext: Sequence[AlignedSentencePair],
    iterations: int = 5,
    seed: int = 0,
    reverse: bool = False,
) -> TranslationTable:
    """EM for IBM Model 1 over lemmas, conditioning on the source side plus NULL.

    With ``reverse=True`` the roles of the two sides are swapped, giving the
    table for the other alignment direction. Initialization is uniform, so
    ``seed`` does not change the result; it is accepted for interface symmetry
    with the rest of the toolkit.
    """
    del seed
    check_positive_int(iterations, "iterations")
    corpus = list(_sides(bitext, reverse))
    if not corpus:
        raise ValueError("cannot train an aligner on an empty bitext")
    src_vocab = {w for src, _ in corpus for w in src} | {NULL}
    tgt_vocab = {w for _, tgt in corpus for w in tgt}
    uniform = 1.0 / len(tgt_vocab)

    t: dict[tuple[str, str], float] = {}
    for _ in range(iterations):
        counts: dict[tuple[str, str], float] = defaultdict(float)
        totals: dict[str, float] = defaultdict(float)
        for src, tgt in corpus:
            conditioning = [NULL, *src]
            for f in tgt:
                probs = [t.get((e, f), uniform) if t else uniform for e in conditioning]
                denom = sum(probs)
                for e, p in zip(conditioning, probs):
                    c = p / denom
                    counts[(e, f)] += c
                    totals[e] += c
        t = {(e, f): c / totals[e] for (e, f), c in counts.items()}
    return TranslationTable(t, src_vocab, tgt_vocab)


def log_likelihood(bitext: Sequence[AlignedSentencePair], table: TranslationTable, reverse: bool = False) -> float:
    """Model 1 corpus log-likelihood (constant length terms dropped)."""
    total = 0.0
    for src, tgt in _sides(bitext, reverse):
        conditioning = [NULL, *src]
        for f in tgt:
            total += math.log(sum(table.prob(e, f) for e in conditioning) / len(conditioning))
    return total


def _viterbi(src: list[str], tgt: list[str], table: TranslationTable) -> set[tuple[int, int]]:
    """Link each target position to its best source position.

    Ties go to the smallest source index; NULL takes the word (no link) only
    when strictly more probable than every real position.
    """
    links = set()
    for j, f in enumerate(tgt):
        best, best_p = None, -1.0
        for i, e in enumerate(src):
            p = table.prob(e, f)
            if p > best_p:
                best, best_p = i, p
        if best is not None and best_p >= table.prob(NULL, f):
            links.add((best, j))
    return links


_NEIGHBOURS = ((-1, 0), (0, -1), (1, 0), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1))


def grow_diag(forward: set[tuple[int, int]], backward: set[tuple[int, int]]) -> set[tuple[int, int]]:
    union = forward | backward
    links = forward & backward
    grew = True
    while grew:
        grew = False
        for i, j in sorted(links):
            for di, dj in _NEIGHBOURS:
                cand = (i + di, j + dj)
                if cand in links or cand not in union:
                    continue
                src_free = all(a != cand[0] for a, _ in links)
                tgt_free = all(b != cand[1] for _, b in links)
                if src_free or tgt_free:
                    links.add(cand)
                    grew = True
    return links


def align_pair(
    pair: AlignedSentencePair,
    table_fwd: TranslationTable,
    table_rev: TranslationTable,
) -> frozenset[tuple[int, int]]:
    """Viterbi links in both directions, symmetrized by intersection plus grow-diag.

    ``table_fwd`` is p(tgt | src) and ``table_rev`` is p(src | tgt). Ties go to
    the smallest index on the side being searched.
    """
    src, tgt = _lemmas(pair.src), _lemmas(pair.tgt)
    forward = _viterbi(src, tgt, table_fwd)
    backward = {(i, j) for j, i in _viterbi(tgt, src, table_rev)}
    return frozenset(grow_diag(forward, backward))


def _shares_synset(kb: LexKB, pair: AlignedSentencePair, i: int, j: int) -> bool:
    a = kb.senses(pair.src.tokens[i].lemma, pair.src.lang)
    if not a:
        return False
    return not a.isdisjoint(kb.senses(pair.tgt.tokens[j].lemma, pair.tgt.lang))


def sharing_links(pair: AlignedSentencePair, links: Iterable[tuple[int, int]], kb: LexKB) -> int:
    return sum(_shares_synset(kb, pair, i, j) for i, j in links)


def correct_alignment(
    pair: AlignedSentencePair,
    links: Iterable[tuple[int, int]],
    kb: LexKB,
) -> frozenset[tuple[int, int]]:
    """Greedy relinking toward synset-sharing links.

    Source tokens are visited left to right. A token with no link, or whose
    links all fail to share a synset with it, is relinked to the smallest
    currently unaligned target token that does share one. Passes repeat until
    nothing changes; every change adds one sharing link and removes only
    non-sharing ones, so the sharing count strictly increases and the loop ends.
    """
    current = set(links)
    n_src, n_tgt = len(pair.src.tokens), len(pair.tgt.tokens)
    changed = True
    while changed:
        changed = False
        for i in range(n_src):
            mine = [(a, b) for a, b in current if a == i]
            if any(_shares_synset(kb, pair, a, b) for a, b in mine):
                continue
            taken = {b for _, b in current}
            for j in range(n_tgt):
                if j not in taken and _shares_synset(kb, pair, i, j):
                    current.difference_update(mine)
                    current.add((i, j))
                    changed = True
                    break
    return frozenset(current)


class Model1Aligner(BaseEstimator, TransformerMixin):
    """Word aligner: KB augmentation, Model 1 in both directions, grow-diag, KB correction.

    ``fit`` takes the bitext (and optionally a KB); ``transform`` returns the
    same sentence pairs with their ``align`` links replaced. Pseudo pairs are
    dropped from the output.
    """

    def __init__(self, iterations=5, copies=1, augment=True, correct=True, seed=0):
        self.iterations = iterations
        self.copies = copies
        self.augment = augment
        self.correct = correct
        self.seed = seed

    def fit(self, X, y=None, kb=None):
        pairs = check_bitext(X)
        if kb is not None:
            check_kb(kb)
        self.kb_ = kb
        train = pairs
        if kb is not None and self.augment and pairs:
            train = augment_bitext(pairs, kb, pairs[0].src.lang, pairs[0].tgt.lang, self.copies)
        self.table_fwd_ = train_model1(train, self.iterations, self.seed)
        self.table_rev_ = train_model1(train, self.iterations, self.seed, reverse=True)
        return self

    def transform(self, X):
        check_is_fitted(self, ["table_fwd_", "table_rev_"])
        out = []
        for pair in check_bitext(X):
            if pair.pseudo:
                continue
            links = align_pair(pair, self.table_fwd_, self.table_rev_)
            if self.kb_ is not None and self.correct:
                links = correct_alignment(pair, links, self.kb_)
            out.append(replace(pair, align=links))
        return out
