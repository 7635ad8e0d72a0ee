"""End-to-end corpus taggers.

* :func:`label_prop` projects gold source annotations onto the target side,
  then applies the KB filter and the nearest-neighbour filter.
* :func:`label_sync` tags both sides with PageRank WSD, re-ranks each
  distribution with the aligned translation, and synchronizes the two sides.
* :func:`label_gen` tags the pivot side only, projects the result, re-ranks
  the target candidates with the pivot scores, and applies the KB filter.

Every function returns its output together with a :class:`PipelineReport`
whose counters account for each input annotation exactly once.
"""

from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import asdict, dataclass, field, replace
from functools import partial
from typing import Callable, Sequence

from sklearn.base import BaseEstimator, TransformerMixin, clone
from sklearn.utils.validation import check_is_fitted

from ._parallel import parallel_map
from .corpus import AlignedSentencePair, CorpusStats, SenseAnnotation, Sentence, corpus_stats, format_stats_table
from .embedwsd import EmbeddingStore
from .graphwsd import PprConfig, SenseDistribution, annotate_top1, disambiguate_w2w, normalize_scores
from .lexkb import LexKB
from .refine import SoftConstraintConfig, kb_filter, nn_filter, soft_constraint, sync_filter
from .validation import check_bitext, check_kb

BaseWSD = Callable[[Sentence, LexKB, PprConfig], Sequence[SenseDistribution]]

# Reasons an annotation can disappear between input and output.
REMOVAL_REASONS = ("merged", "kb", "unknown-synset", "nn", "sync", "no-candidate")


@dataclass
class PipelineReport:
    method: str
    stats: dict[str, CorpusStats]
    removals: Counter
    input_annotations: int
    output_annotations: int
    failed: int
    steps: dict[str, int] = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def is_balanced(self) -> bool:
        return self.input_annotations == self.output_annotations + sum(self.removals.values()) + self.failed

    def records(self) -> list[dict]:
        out = [{"record": "config", "method": self.method, **self.config}]
        for side, stats in self.stats.items():
            out.append({"record": "stats", "side": side, **stats.as_dict()})
        out.append({
            "record": "accounting",
            "input_annotations": self.input_annotations,
            "output_annotations": self.output_annotations,
            "failed": self.failed,
            "removals": {k: self.removals[k] for k in sorted(self.removals)},
        })
        for step in self.steps:
            out.append({"record": "step", "name": step, "count": self.steps[step]})
        return out

    def dump_diagnostics(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for rec in self.records():
                fh.write(json.dumps(rec, sort_keys=False, separators=(",", ":")) + "\n")

    def summary(self) -> str:
        lines = [f"{self.method}", "", format_stats_table(self.stats)]
        lines.append(f"input annotations:  {self.input_annotations}")
        lines.append(f"output annotations: {self.output_annotations}")
        lines.append(f"failed propagation: {self.failed}")
        for reason in sorted(self.removals):
            lines.append(f"removed [{reason}]: {self.removals[reason]}")
        for step, count in self.steps.items():
            lines.append(f"step {step}: {count}")
        return "\n".join(lines) + "\n"


def _real(bitext: Sequence[AlignedSentencePair]) -> list[AlignedSentencePair]:
    return [p for p in check_bitext(bitext) if not p.pseudo]


def _sum_counters(counters) -> Counter:
    total: Counter = Counter()
    for c in counters:
        total.update(c)
    return total


def propagate(pair: AlignedSentencePair, kb: LexKB) -> tuple[Sentence, Counter, dict[int, list[int]]]:
    """Copy source annotations to their aligned target tokens.

    A source token linked to several target tokens propagates only when
    exactly one of them is lexicalized by the synset. Source annotations that
    land on the same target token with different synsets all fail; with the
    same synset they merge into one annotation keeping the highest score.

    Returns the annotated target sentence, a counter with ``failed`` and
    ``merged``, and the source indices behind each target annotation.
    """
    counts: Counter = Counter()
    proposals: dict[int, list[SenseAnnotation]] = {}
    origins: dict[int, list[int]] = {}
    tgt = pair.tgt
    for ann in pair.src.annotations:
        targets = pair.src_links(ann.token_index)
        if len(targets) > 1:
            syn = kb.synsets.get(ann.synset)
            targets = [j for j in targets if syn is not None and syn.lexicalizes(tgt.tokens[j].lemma, tgt.lang)]
        if len(targets) != 1:
            counts["failed"] += 1
            continue
        j = targets[0]
        proposals.setdefault(j, []).append(ann)
        origins.setdefault(j, []).append(ann.token_index)

    out = []
    for j in sorted(proposals):
        anns = proposals[j]
        if len({a.synset for a in anns}) > 1:
            counts["failed"] += len(anns)
            del origins[j]
            continue
        counts["merged"] += len(anns) - 1
        out.append(SenseAnnotation(j, anns[0].synset, max(a.score for a in anns), "prop"))
    return tgt.with_annotations(out), counts, origins


# -- LabelProp -------------------------------------------------------------

def _prop_job(pair, kb, token_embeddings, synset_embeddings):
    counts: Counter = Counter(input=len(pair.src.annotations))
    tgt, prop_counts, _ = propagate(pair, kb)
    counts.update(prop_counts)
    counts["propagated"] += len(tgt.annotations)
    tgt = kb_filter(tgt, kb, counts)
    if token_embeddings is not None and synset_embeddings is not None:
        tgt = nn_filter(tgt, token_embeddings, synset_embeddings, kb, counts)
    return tgt, counts


def label_prop(
    bitext: Sequence[AlignedSentencePair],
    kb: LexKB,
    token_embeddings: EmbeddingStore | None = None,
    synset_embeddings: EmbeddingStore | None = None,
    n_jobs: int | None = None,
) -> tuple[list[Sentence], PipelineReport]:
    """Project gold source annotations, then KB-filter and NN-filter the target side.

    The NN filter runs only when both embedding stores are given.
    """
    pairs = _real(bitext)
    results = parallel_map(
        partial(_prop_job, kb=kb, token_embeddings=token_embeddings, synset_embeddings=synset_embeddings),
        pairs,
        n_jobs,
    )
    corpus = [tgt for tgt, _ in results]
    counts = _sum_counters(c for _, c in results)
    lang = pairs[0].tgt.lang if pairs else "tgt"
    report = PipelineReport(
        method="label-prop",
        stats={lang: corpus_stats(corpus, counts["failed"])},
        removals=Counter({r: counts[r] for r in REMOVAL_REASONS if counts[r]}),
        input_annotations=counts["input"],
        output_annotations=sum(len(s.annotations) for s in corpus),
        failed=counts["failed"],
        steps={"propagated": counts["propagated"], "removed_kb": counts["kb"] + counts["unknown-synset"],
               "removed_nn": counts["nn"]},
        config={"nn_filter": token_embeddings is not None and synset_embeddings is not None},
    )
    return corpus, report


# -- LabelSync -------------------------------------------------------------

def _rerank_side(own: Sentence, other: Sentence, partners, dists, kb, sc_cfg, counts, label):
    anns = []
    for dist in dists:
        i = dist.token_index
        translations = {other.tokens[k].lemma for k in partners(i)}
        new = soft_constraint(dist, translations, other.lang, kb, sc_cfg, lemma=own.tokens[i].lemma, lang=own.lang)
        if new.argmax() != dist.argmax():
            counts[f"reranked_{label}"] += 1
        best = new.argmax()
        if best is not None:
            anns.append(SenseAnnotation(i, best, min(1.0, new.scores[best]), "ppr"))
    return own.with_annotations(anns)


def _sync_job(pair, kb, ppr_cfg, sc_cfg, base_wsd):
    counts: Counter = Counter()
    d_src = base_wsd(pair.src, kb, ppr_cfg)
    d_tgt = base_wsd(pair.tgt, kb, ppr_cfg)
    counts["wsd_src"] += len(d_src)
    counts["wsd_tgt"] += len(d_tgt)
    src = _rerank_side(pair.src, pair.tgt, pair.src_links, d_src, kb, sc_cfg, counts, "src")
    tgt = _rerank_side(pair.tgt, pair.src, pair.tgt_links, d_tgt, kb, sc_cfg, counts, "tgt")
    counts["input"] += len(src.annotations) + len(tgt.annotations)
    out = sync_filter(replace(pair, src=src, tgt=tgt), counts)
    return out, counts


def label_sync(
    bitext: Sequence[AlignedSentencePair],
    kb: LexKB,
    ppr_cfg: PprConfig = PprConfig(),
    sc_cfg: SoftConstraintConfig = SoftConstraintConfig(),
    base_wsd: BaseWSD = disambiguate_w2w,
    n_jobs: int | None = None,
) -> tuple[list[AlignedSentencePair], PipelineReport]:
    """Tag both sides, re-rank with aligned translations, keep synchronized annotations.

    ``base_wsd`` maps ``(sentence, kb, ppr_cfg)`` to sense distributions and
    defaults to PageRank WSD; it must be picklable when ``n_jobs`` > 1.
    """
    pairs = _real(bitext)
    results = parallel_map(
        partial(_sync_job, kb=kb, ppr_cfg=ppr_cfg, sc_cfg=sc_cfg, base_wsd=base_wsd), pairs, n_jobs
    )
    out = [p for p, _ in results]
    counts = _sum_counters(c for _, c in results)
    stats = {}
    if out:
        stats[f"{out[0].src.lang}"] = corpus_stats(p.src for p in out)
        stats[f"{out[0].tgt.lang}"] = corpus_stats(p.tgt for p in out)
    report = PipelineReport(
        method="label-sync",
        stats=stats,
        removals=Counter({r: counts[r] for r in REMOVAL_REASONS if counts[r]}),
        input_annotations=counts["input"],
        output_annotations=sum(len(p.src.annotations) + len(p.tgt.annotations) for p in out),
        failed=0,
        steps={k: counts[k] for k in ("wsd_src", "wsd_tgt", "reranked_src", "reranked_tgt")},
        config={"ppr": asdict(ppr_cfg), "soft_constraint": asdict(sc_cfg)},
    )
    return out, report


# -- LabelGen --------------------------------------------------------------

def _restrict(dists: list[SenseDistribution], lemma: str, lang: str, kb: LexKB) -> dict[str, float]:
    combined: dict[str, float] = {}
    for dist in dists:
        for sid, score in dist.scores.items():
            combined[sid] = combined.get(sid, 0.0) + score / len(dists)
    return {sid: s for sid, s in combined.items() if sid in kb and kb[sid].lexicalizes(lemma, lang)}


def _gen_job(pair, kb, ppr_cfg, sc_cfg, base_wsd, rerank):
    counts: Counter = Counter()
    dists = {d.token_index: d for d in base_wsd(pair.src, kb, ppr_cfg)}
    pivot = annotate_top1(pair.src, [dists[i] for i in sorted(dists)])
    counts["input"] += len(pivot.annotations)
    tgt, prop_counts, origins = propagate(replace(pair, src=pivot), kb)
    counts.update(prop_counts)
    counts["propagated"] += len(tgt.annotations)
    if rerank:
        anns = []
        for ann in tgt.annotations:
            j = ann.token_index
            lemma = tgt.tokens[j].lemma
            restricted = _restrict([dists[i] for i in origins[j]], lemma, tgt.lang, kb)
            if not restricted:
                counts["no-candidate"] += 1
                continue
            dist = SenseDistribution(j, normalize_scores(restricted))
            translations = {pair.src.tokens[i].lemma for i in pair.tgt_links(j)}
            dist = soft_constraint(dist, translations, pair.src.lang, kb, sc_cfg, lemma=lemma, lang=tgt.lang)
            best = dist.argmax()
            if best != ann.synset:
                counts["reranked"] += 1
            anns.append(SenseAnnotation(j, best, min(1.0, dist.scores[best]), "prop"))
        tgt = tgt.with_annotations(anns)
    tgt = kb_filter(tgt, kb, counts)
    return tgt, counts


def label_gen(
    bitext: Sequence[AlignedSentencePair],
    kb: LexKB,
    ppr_cfg: PprConfig = PprConfig(),
    sc_cfg: SoftConstraintConfig = SoftConstraintConfig(),
    rerank: bool = True,
    base_wsd: BaseWSD = disambiguate_w2w,
    n_jobs: int | None = None,
) -> tuple[list[Sentence], PipelineReport]:
    """Tag the pivot side, project to the target, re-rank and KB-filter.

    Re-ranking restricts the pivot distribution to synsets that contain the
    target lemma, renormalizes, and applies SoftConstraint with the aligned
    pivot lemmas. ``rerank=False`` keeps the projected pivot argmax.
    """
    pairs = _real(bitext)
    results = parallel_map(
        partial(_gen_job, kb=kb, ppr_cfg=ppr_cfg, sc_cfg=sc_cfg, base_wsd=base_wsd, rerank=rerank),
        pairs,
        n_jobs,
    )
    corpus = [t for t, _ in results]
    counts = _sum_counters(c for _, c in results)
    lang = pairs[0].tgt.lang if pairs else "tgt"
    report = PipelineReport(
        method="label-gen",
        stats={lang: corpus_stats(corpus, counts["failed"])},
        removals=Counter({r: counts[r] for r in REMOVAL_REASONS if counts[r]}),
        input_annotations=counts["input"],
        output_annotations=sum(len(s.annotations) for s in corpus),
        failed=counts["failed"],
        steps={"pivot_annotations": counts["input"], "propagated": counts["propagated"],
               "reranked": counts["reranked"]},
        config={"ppr": asdict(ppr_cfg), "soft_constraint": asdict(sc_cfg), "rerank": rerank},
    )
    return corpus, report


def sample_pairs(bitext: Sequence[AlignedSentencePair], n: int, seed: int = 0) -> list[AlignedSentencePair]:
    """Seeded sample of ``n`` pairs, returned in their original order."""
    pairs = list(bitext)
    if n >= len(pairs):
        return pairs
    picked = sorted(random.Random(seed).sample(range(len(pairs)), n))
    return [pairs[i] for i in picked]


# -- estimators ------------------------------------------------------------

class _PipelineEstimator(BaseEstimator, TransformerMixin):
    def fit(self, X=None, y=None, kb=None, **fit_params):
        if kb is None:
            raise ValueError(f"{type(self).__name__}.fit requires kb=")
        self.kb_ = check_kb(kb)
        return self

    def _aligned(self, X):
        pairs = check_bitext(X)
        if getattr(self, "aligner", None) is not None:
            pairs = clone(self.aligner).fit(pairs, kb=self.kb_).transform(pairs)
        return pairs


class LabelProp(_PipelineEstimator):
    """Semi-supervised projection of gold source annotations.

    ``aligner`` (e.g. :class:`~sensegen.align.Model1Aligner`) realigns the
    bitext before projection; by default the embedded links are used.
    """

    def __init__(self, aligner=None, n_jobs=None):
        self.aligner = aligner
        self.n_jobs = n_jobs

    def fit(self, X=None, y=None, kb=None, token_embeddings=None, synset_embeddings=None):
        super().fit(X, y, kb=kb)
        self.token_embeddings_ = token_embeddings
        self.synset_embeddings_ = synset_embeddings
        return self

    def transform(self, X) -> list[Sentence]:
        check_is_fitted(self, "kb_")
        corpus, self.report_ = label_prop(
            self._aligned(X), self.kb_, self.token_embeddings_, self.synset_embeddings_, self.n_jobs
        )
        return corpus


class LabelSync(_PipelineEstimator):
    """Unsupervised symmetric tagging of both bitext sides."""

    def __init__(self, damping=0.85, tolerance=1e-8, max_iterations=1000, lam=1.0, use_frequency=False,
                 aligner=None, n_jobs=None):
        self.damping = damping
        self.tolerance = tolerance
        self.max_iterations = max_iterations
        self.lam = lam
        self.use_frequency = use_frequency
        self.aligner = aligner
        self.n_jobs = n_jobs

    def transform(self, X) -> list[AlignedSentencePair]:
        check_is_fitted(self, "kb_")
        out, self.report_ = label_sync(
            self._aligned(X), self.kb_,
            PprConfig(self.damping, self.tolerance, self.max_iterations),
            SoftConstraintConfig(self.lam, self.use_frequency),
            n_jobs=self.n_jobs,
        )
        return out


class LabelGen(_PipelineEstimator):
    """Unsupervised asymmetric tagging: pivot-side WSD projected to the target."""

    def __init__(self, damping=0.85, tolerance=1e-8, max_iterations=1000, lam=1.0, use_frequency=False,
                 rerank=True, aligner=None, n_jobs=None):
        self.damping = damping
        self.tolerance = tolerance
        self.max_iterations = max_iterations
        self.lam = lam
        self.use_frequency = use_frequency
        self.rerank = rerank
        self.aligner = aligner
        self.n_jobs = n_jobs

    def transform(self, X) -> list[Sentence]:
        check_is_fitted(self, "kb_")
        corpus, self.report_ = label_gen(
            self._aligned(X), self.kb_,
            PprConfig(self.damping, self.tolerance, self.max_iterations),
            SoftConstraintConfig(self.lam, self.use_frequency),
            rerank=self.rerank,
            n_jobs=self.n_jobs,
        )
        return corpus
