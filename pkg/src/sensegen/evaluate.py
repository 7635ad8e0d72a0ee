"""Key-file scoring, MFS baseline, frequency reference classifier, McNemar's test."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from scipy.stats import chi2
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .corpus import Sentence
from .lexkb import LexKB, mfs
from .validation import check_kb, check_sentences

Key = Mapping[str, Iterable[str]]


@dataclass
class ScoreReport:
    precision: float
    recall: float
    f1: float
    attempted: int
    correct: int
    gold_total: int
    ignored: int = 0
    by_pos: dict[str, "ScoreReport"] = field(default_factory=dict)

    @property
    def nouns(self) -> "ScoreReport | None":
        return self.by_pos.get("n")

    def as_record(self) -> dict:
        rec = {
            "precision": self.precision, "recall": self.recall, "f1": self.f1,
            "attempted": self.attempted, "correct": self.correct, "gold_total": self.gold_total,
            "ignored": self.ignored,
        }
        if self.by_pos:
            rec["by_pos"] = {pos: r.as_record() for pos, r in sorted(self.by_pos.items())}
        return rec

    def table(self) -> str:
        rows = [("subset", "P", "R", "F1", "attempted", "correct", "gold")]
        rows.append(("all", *self._cells()))
        for pos, rep in sorted(self.by_pos.items()):
            rows.append((f"pos={pos}", *rep._cells()))
        widths = [max(len(r[k]) for r in rows) for k in range(len(rows[0]))]
        return "\n".join(
            "  ".join(c.ljust(w) if k == 0 else c.rjust(w) for k, (c, w) in enumerate(zip(r, widths)))
            for r in rows
        ) + "\n"

    def _cells(self):
        return (f"{self.precision:.4f}", f"{self.recall:.4f}", f"{self.f1:.4f}",
                str(self.attempted), str(self.correct), str(self.gold_total))


def _prf(correct: int, attempted: int, gold_total: int) -> tuple[float, float, float]:
    p = correct / attempted if attempted else 0.0
    r = correct / gold_total if gold_total else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f


def score(pred: Key, gold: Key, pos_of: Mapping[str, str] | None = None) -> ScoreReport:
    """Precision/recall/F1 of ``pred`` against ``gold``.

    A prediction is correct when it shares any synset with the gold set.
    Predictions for instances absent from ``gold`` are counted in ``ignored``.
    With ``pos_of`` (iid -> pos) a per-POS breakdown is added.
    """
    def tally(iids):
        attempted = correct = 0
        for iid in iids:
            if iid in pred:
                attempted += 1
                correct += not set(pred[iid]).isdisjoint(gold[iid])
        return attempted, correct

    attempted, correct = tally(gold)
    ignored = sum(1 for iid in pred if iid not in gold)
    report = ScoreReport(*_prf(correct, attempted, len(gold)), attempted, correct, len(gold), ignored)
    if pos_of:
        for pos in sorted({pos_of[i] for i in gold if i in pos_of}):
            subset = [i for i in gold if pos_of.get(i) == pos]
            a, c = tally(subset)
            report.by_pos[pos] = ScoreReport(*_prf(c, a, len(subset)), a, c, len(subset))
    return report


def pos_map(sentences: Iterable[Sentence]) -> dict[str, str]:
    return {tok.iid: tok.pos for s in sentences for tok in s.tokens if tok.iid is not None}


def mfs_tag(sentences: Iterable[Sentence], kb: LexKB) -> dict[str, frozenset[str]]:
    key = {}
    for sent in sentences:
        for tok in sent.tokens:
            if tok.iid is None or not tok.is_content:
                continue
            best = mfs(kb, tok.lemma, tok.pos, sent.lang)
            if best is not None:
                key[tok.iid] = frozenset({best})
    return key


@dataclass
class FreqModel:
    counts: dict[tuple[str, str], Counter] = field(default_factory=dict)

    def best(self, lemma: str, pos: str) -> str | None:
        c = self.counts.get((lemma, pos))
        if not c:
            return None
        return min(c, key=lambda sid: (-c[sid], sid))

    def dump(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for (lemma, pos) in sorted(self.counts):
                c = self.counts[(lemma, pos)]
                rec = {"lemma": lemma, "pos": pos, "counts": {s: c[s] for s in sorted(c)}}
                fh.write(json.dumps(rec, ensure_ascii=False, separators=(",", ":")) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "FreqModel":
        model = cls()
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                if not raw.strip():
                    continue
                try:
                    rec = json.loads(raw)
                    counts = Counter({str(s): int(n) for s, n in rec["counts"].items()})
                    key = (str(rec["lemma"]), str(rec["pos"]))
                except (json.JSONDecodeError, KeyError, TypeError, ValueError, AttributeError):
                    raise ValueError(f"line {lineno}: malformed model record") from None
                if any(n < 1 for n in counts.values()):
                    raise ValueError(f"line {lineno}: counts must be >= 1")
                model.counts[key] = counts
        return model


def train_freq(corpus: Iterable[Sentence]) -> FreqModel:
    model = FreqModel()
    for sent in corpus:
        for ann in sent.annotations:
            tok = sent.tokens[ann.token_index]
            model.counts.setdefault((tok.lemma, tok.pos), Counter())[ann.synset] += 1
    return model


def predict_freq(
    model: FreqModel, sentences: Iterable[Sentence], kb: LexKB | None = None, backoff: bool = True
) -> dict[str, frozenset[str]]:
    """Most frequent training sense per (lemma, pos); MFS from the KB for unseen words."""
    if backoff and kb is None:
        raise ValueError("MFS backoff needs a knowledge base")
    key = {}
    for sent in sentences:
        for tok in sent.tokens:
            if tok.iid is None or not tok.is_content:
                continue
            best = model.best(tok.lemma, tok.pos)
            if best is None and backoff:
                best = mfs(kb, tok.lemma, tok.pos, sent.lang)
            if best is not None:
                key[tok.iid] = frozenset({best})
    return key


@dataclass(frozen=True)
class McNemarResult:
    statistic: float
    p: float
    b: int
    c: int

    def __iter__(self):
        return iter((self.statistic, self.p, self.b, self.c))


def mcnemar_from_counts(b: int, c: int) -> McNemarResult:
    """Continuity-corrected chi-square McNemar test for discordant counts ``b`` and ``c``."""
    if b + c == 0:
        return McNemarResult(0.0, 1.0, b, c)
    stat = max(abs(b - c) - 1, 0) ** 2 / (b + c)
    return McNemarResult(stat, float(chi2.sf(stat, df=1)), b, c)


def mcnemar(pred_a: Key, pred_b: Key, gold: Key) -> McNemarResult:
    """Compare two systems on the gold instances both attempted."""
    b = c = 0
    for iid in gold:
        if iid not in pred_a or iid not in pred_b:
            continue
        ok_a = not set(pred_a[iid]).isdisjoint(gold[iid])
        ok_b = not set(pred_b[iid]).isdisjoint(gold[iid])
        b += ok_a and not ok_b
        c += ok_b and not ok_a
    return mcnemar_from_counts(b, c)


class FrequencyClassifier(BaseEstimator, ClassifierMixin):
    """Reference WSD classifier: most frequent sense per (lemma, pos) in training data.

    ``predict`` returns a key mapping (iid -> synsets) rather than an array,
    since instances are identified by id.
    """

    def __init__(self, backoff=True):
        self.backoff = backoff

    def fit(self, X, y=None, kb=None):
        self.model_ = train_freq(check_sentences(X))
        self.kb_ = check_kb(kb) if kb is not None else None
        return self

    def predict(self, X) -> dict[str, frozenset[str]]:
        check_is_fitted(self, "model_")
        return predict_freq(self.model_, check_sentences(X), self.kb_, self.backoff)

    def score(self, X, y, sample_weight=None) -> float:
        """F1 of the predictions against gold key ``y``."""
        return score(self.predict(X), y).f1
