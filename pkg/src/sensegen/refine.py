"""Annotation refinement: SoftConstraint re-ranking and the KB, NN, and sync filters.

Filters return a new sentence (or pair) and, when given a ``Counter``, add the
number of removed annotations under a reason code:

``kb``              synset does not lexicalize the token's lemma
``unknown-synset``  synset id missing from the KB
``nn``              nearest-neighbour WSD disagrees
``sync``            aligned annotated counterparts all carry other synsets
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from typing import Iterable

from .corpus import AlignedSentencePair, Sentence
from .embedwsd import EmbeddingStore, nn_disambiguate
from .graphwsd import SenseDistribution, normalize_scores
from .lexkb import LexKB


@dataclass(frozen=True)
class SoftConstraintConfig:
    lam: float = 1.0
    use_frequency: bool = False

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam!r}")


def soft_constraint(
    dist: SenseDistribution,
    translation_lemmas: Iterable[str],
    tgt_lang: str,
    kb: LexKB,
    cfg: SoftConstraintConfig = SoftConstraintConfig(),
    *,
    lemma: str | None = None,
    lang: str | None = None,
) -> SenseDistribution:
    """Boost senses lexicalized by an observed translation.

    ``score(s) * (1 + lam * match(s))``, optionally times
    ``1 + freq(s) / sum(freq)`` using the frequency of ``lemma`` in ``lang``,
    then renormalized.
    """
    translations = set(translation_lemmas)
    if not translations or not dist.scores:
        return dist
    freq = {}
    if cfg.use_frequency and lemma is not None and lang is not None:
        freq = {sid: kb[sid].frequency(lemma, lang) for sid in dist.scores if sid in kb}
    freq_total = sum(freq.values())
    boosted = {}
    for sid, score in dist.scores.items():
        lemmas = kb[sid].lemmas.get(tgt_lang, frozenset()) if sid in kb else frozenset()
        factor = 1.0 + cfg.lam * (not translations.isdisjoint(lemmas))
        if freq_total > 0:
            factor *= 1.0 + freq.get(sid, 0) / freq_total
        boosted[sid] = score * factor
    return SenseDistribution(dist.token_index, normalize_scores(boosted))


def _count(counts: Counter | None, reason: str, n: int = 1) -> None:
    if counts is not None and n:
        counts[reason] += n


def kb_filter(sentence: Sentence, kb: LexKB, counts: Counter | None = None) -> Sentence:
    kept = []
    for ann in sentence.annotations:
        if ann.synset not in kb:
            _count(counts, "unknown-synset")
        elif not kb[ann.synset].lexicalizes(sentence.tokens[ann.token_index].lemma, sentence.lang):
            _count(counts, "kb")
        else:
            kept.append(ann)
    if len(kept) == len(sentence.annotations):
        return sentence
    return sentence.with_annotations(kept)


def nn_filter(
    sentence: Sentence,
    token_embeddings: EmbeddingStore,
    synset_embeddings: EmbeddingStore,
    kb: LexKB,
    counts: Counter | None = None,
) -> Sentence:
    kept = []
    for ann in sentence.annotations:
        vec = token_embeddings.get(sentence.token_key(ann.token_index))
        if vec is not None:
            lemma = sentence.tokens[ann.token_index].lemma
            best = nn_disambiguate(vec, kb.senses(lemma, sentence.lang), synset_embeddings)
            if best is not None and best[0] != ann.synset:
                _count(counts, "nn")
                continue
        kept.append(ann)
    if len(kept) == len(sentence.annotations):
        return sentence
    return sentence.with_annotations(kept)


def _sync_keep(own: dict, other: dict, partners) -> set[int]:
    keep = set()
    for idx, ann in own.items():
        annotated = [other[k].synset for k in partners(idx) if k in other]
        if not annotated or ann.synset in annotated:
            keep.add(idx)
    return keep


def sync_filter(pair: AlignedSentencePair, counts: Counter | None = None) -> AlignedSentencePair:
    """Drop annotations that disagree with every annotated aligned counterpart.

    Both sides are judged against the input state, so a disagreement removes
    the annotations on both sides at once.
    """
    src, tgt = pair.src.annotation_map(), pair.tgt.annotation_map()
    keep_src = _sync_keep(src, tgt, pair.src_links)
    keep_tgt = _sync_keep(tgt, src, pair.tgt_links)
    removed = len(src) - len(keep_src) + len(tgt) - len(keep_tgt)
    if not removed:
        return pair
    _count(counts, "sync", removed)
    return replace(
        pair,
        src=pair.src.with_annotations(a for a in pair.src.annotations if a.token_index in keep_src),
        tgt=pair.tgt.with_annotations(a for a in pair.tgt.annotations if a.token_index in keep_tgt),
    )


def sync_violations(pair: AlignedSentencePair) -> list[tuple[str, int]]:
    """Annotations that have annotated aligned counterparts but share a synset with none."""
    bad = []
    src, tgt = pair.src.annotation_map(), pair.tgt.annotation_map()
    for side, own, other, partners in (("src", src, tgt, pair.src_links), ("tgt", tgt, src, pair.tgt_links)):
        for idx, ann in own.items():
            annotated = [other[k].synset for k in partners(idx) if k in other]
            if annotated and ann.synset not in annotated:
                bad.append((side, idx))
    return bad
