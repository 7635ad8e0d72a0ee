"""Knowledge-based WSD with personalized PageRank, word-to-word variant.

For every focus word the teleport vector is spread over the senses of the
other content words in the sentence, PageRank is run on the whole KB graph,
and the focus word's candidate senses are ranked by their stationary mass.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import partial
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._parallel import parallel_map
from .corpus import SenseAnnotation, Sentence, content_tokens
from .lexkb import LexKB
from .validation import check_kb, check_positive_int, check_sentences, check_unit_interval


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class PprConfig:
    damping: float = 0.85
    tolerance: float = 1e-8
    max_iterations: int = 1000
    # spread teleport mass evenly per context word instead of per synset
    per_word_teleport: bool = False

    def __post_init__(self):
        check_unit_interval(self.damping, "damping", open_interval=True)
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance!r}")
        check_positive_int(self.max_iterations, "max_iterations")


@dataclass(frozen=True)
class SenseDistribution:
    token_index: int
    scores: Mapping[str, float] = field(default_factory=dict)

    def argmax(self) -> str | None:
        """Best-scoring synset; ties go to the smallest id."""
        if not self.scores:
            return None
        return min(self.scores, key=lambda sid: (-self.scores[sid], sid))

    def total(self) -> float:
        return float(sum(self.scores.values()))


def normalize_scores(scores: Mapping[str, float]) -> dict[str, float]:
    """Scale to unit sum; an all-zero mapping becomes uniform over its keys."""
    keys = sorted(scores)
    total = sum(scores[k] for k in keys)
    if total > 0:
        return {k: scores[k] / total for k in keys}
    return {k: 1.0 / len(keys) for k in keys}


def ppr(kb: LexKB, teleport: Mapping[str, float], cfg: PprConfig = PprConfig()) -> dict[str, float]:
    """Personalized PageRank by power iteration on the symmetrized KB graph.

    Iterates ``p <- (1 - d) v + d (M p + mass_dangling(p) v)`` from ``p = v``
    until the L1 change drops below ``cfg.tolerance``.
    """
    if not teleport:
        raise ValueError("teleport vector is empty")
    pos = kb.node_position
    v = np.zeros(len(pos))
    for sid, w in teleport.items():
        if sid not in pos:
            raise KeyError(f"teleport synset {sid!r} is not in the KB")
        if w < 0:
            raise ValueError(f"teleport weight for {sid!r} is negative")
        v[pos[sid]] += w
    total = v.sum()
    if not total > 0:
        raise ValueError("teleport vector has zero total mass")
    v /= total

    M, dangling = kb.transition
    d = cfg.damping
    p = v.copy()
    for _ in range(cfg.max_iterations):
        nxt = (1.0 - d) * v + d * (M @ p + p[dangling].sum() * v)
        delta = np.abs(nxt - p).sum()
        p = nxt
        if delta < cfg.tolerance:
            break
    else:
        raise ConvergenceError(
            f"PageRank did not converge within {cfg.max_iterations} iterations (L1 change {delta:.3e})"
        )
    p /= p.sum()
    return {sid: float(p[i]) for i, sid in enumerate(kb.node_ids)}


def _teleport(context: list[frozenset[str]], exclude: frozenset[str], per_word: bool) -> dict[str, float]:
    if not per_word:
        return {sid: 1.0 for sid in sorted(frozenset().union(*context) - exclude)}
    mass: dict[str, float] = {}
    for senses in context:
        usable = sorted(senses - exclude)
        for sid in usable:
            mass[sid] = mass.get(sid, 0.0) + 1.0 / len(usable)
    return mass


def disambiguate_w2w(sentence: Sentence, kb: LexKB, cfg: PprConfig = PprConfig()) -> list[SenseDistribution]:
    """One PageRank run per content token, teleporting from the other tokens' senses.

    Tokens without candidates, or whose context yields an empty teleport, get
    no distribution. When the focus senses receive no mass at all (disconnected
    graph) the distribution is uniform.
    """
    positions = content_tokens(sentence)
    senses = {i: kb.senses(sentence.tokens[i].lemma, sentence.lang) for i in positions}
    out = []
    cache: dict[tuple, dict[str, float]] = {}
    for i in positions:
        candidates = senses[i]
        if not candidates:
            continue
        context = [senses[k] for k in positions if k != i and senses[k]]
        teleport = _teleport(context, candidates, cfg.per_word_teleport)
        if not teleport:
            continue
        key = tuple(sorted(teleport.items()))
        if key not in cache:
            cache[key] = ppr(kb, teleport, cfg)
        rank = cache[key]
        out.append(SenseDistribution(i, normalize_scores({sid: rank[sid] for sid in candidates})))
    return out


def annotate_top1(sentence: Sentence, dists: Sequence[SenseDistribution], source: str = "ppr") -> Sentence:
    anns = []
    for dist in dists:
        best = dist.argmax()
        if best is not None:
            score = min(1.0, max(0.0, dist.scores[best]))
            anns.append(SenseAnnotation(dist.token_index, best, score, source))
    return sentence.with_annotations(anns)


def _w2w_job(sentence, kb, cfg):
    return disambiguate_w2w(sentence, kb, cfg)


def disambiguate_corpus(
    sentences: Sequence[Sentence], kb: LexKB, cfg: PprConfig = PprConfig(), n_jobs: int | None = None
) -> list[list[SenseDistribution]]:
    return parallel_map(partial(_w2w_job, kb=kb, cfg=cfg), sentences, n_jobs)


def write_distributions(
    sentences: Sequence[Sentence], dists: Sequence[Sequence[SenseDistribution]], path
) -> None:
    """Sidecar file with lines ``iid synset score`` for every token that has an iid."""
    with open(path, "w", encoding="utf-8") as fh:
        for sent, per_sent in zip(sentences, dists):
            for dist in per_sent:
                iid = sent.tokens[dist.token_index].iid
                if iid is None:
                    continue
                for sid in sorted(dist.scores):
                    fh.write(f"{iid} {sid} {dist.scores[sid]!r}\n")


class PPRDisambiguator(BaseEstimator, TransformerMixin):
    """Estimator wrapper around :func:`disambiguate_w2w`.

    ``fit`` only records the knowledge base; ``predict_proba`` returns the
    per-token distributions and ``transform`` writes the top sense of each as
    an annotation.
    """

    def __init__(self, damping=0.85, tolerance=1e-8, max_iterations=1000, per_word_teleport=False, n_jobs=None):
        self.damping = damping
        self.tolerance = tolerance
        self.max_iterations = max_iterations
        self.per_word_teleport = per_word_teleport
        self.n_jobs = n_jobs

    def _config(self) -> PprConfig:
        return PprConfig(self.damping, self.tolerance, self.max_iterations, self.per_word_teleport)

    def fit(self, X=None, y=None, kb=None):
        if kb is None:
            raise ValueError("PPRDisambiguator.fit requires kb=")
        self.kb_ = check_kb(kb)
        self.config_ = self._config()
        return self

    def predict_proba(self, X) -> list[list[SenseDistribution]]:
        check_is_fitted(self, "kb_")
        return disambiguate_corpus(check_sentences(X), self.kb_, self.config_, self.n_jobs)

    def transform(self, X) -> list[Sentence]:
        sents = check_sentences(X)
        return [annotate_top1(s, d) for s, d in zip(sents, self.predict_proba(sents))]

    def predict(self, X) -> list[dict[int, str]]:
        return [{d.token_index: d.argmax() for d in per} for per in self.predict_proba(X)]
