"""Seeded synthetic worlds: a KB, a gold-annotated bitext, and embeddings.

World layout, for each group ``k`` of an ambiguous pivot lemma ``w{k}``:

* ``degree`` sense synsets, each graph-adjacent to one monosemous context
  synset (pivot lemma ``c{k}_{m}``, target lemma ``ct{k}_{m}``);
* target translations: for disambiguating groups every sense gets its own
  lemma ``t{k}_{m}``, which also lexicalizes one isolated filler synset (so
  the target side stays ambiguous while the translation pair is not);
  otherwise all senses share ``t{k}``.

Each sentence holds two groups' focus words, each followed by its context
word; a context word is withheld (on both sides) with probability
``withheld``. Alignments are the identity.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import (
    AlignedSentencePair, SenseAnnotation, Sentence, Token, dump_key, serialize_bitext, strip_annotations,
)
from .embedwsd import EmbeddingStore, pseudo_vector
from .lexkb import LexKB, Synset, dump_kb


@dataclass(frozen=True)
class WorldSpec:
    seed: int = 0
    n_synsets: int = 30
    degree: int = 2
    languages: tuple[str, str] = ("en", "it")
    n_sentences: int = 50
    fraction: float = 1.0
    withheld: float = 0.0
    nn_agreement: float = 1.0
    n_test_sentences: int = 0
    token_dim: int = 8

    def n_fillers(self) -> int:
        return max(1, self.n_synsets // 5)

    def n_groups(self) -> int:
        return (self.n_synsets - self.n_fillers()) // (2 * self.degree)

    def validate(self) -> None:
        if len(self.languages) != 2 or self.languages[0] == self.languages[1]:
            raise ValueError("languages must be two distinct codes (pivot, target)")
        if self.degree < 2:
            raise ValueError("degree must be >= 2 for lemmas to be ambiguous")
        if self.n_groups() < 2:
            raise ValueError(
                f"infeasible world: {self.n_synsets} synsets cannot hold two lemma groups of degree "
                f"{self.degree} (each needs {2 * self.degree} synsets, plus {self.n_fillers()} fillers)"
            )
        if not 0.0 <= self.fraction <= 1.0 or not 0.0 <= self.withheld <= 1.0:
            raise ValueError("fraction and withheld must lie in [0, 1]")
        if not 0.0 <= self.nn_agreement <= 1.0:
            raise ValueError("nn_agreement must lie in [0, 1]")
        if self.n_sentences < 0 or self.n_test_sentences < 0 or self.token_dim < 1:
            raise ValueError("sentence counts must be >= 0 and token_dim >= 1")


@dataclass
class World:
    spec: WorldSpec
    kb: LexKB
    bitext: list[AlignedSentencePair]
    test_bitext: list[AlignedSentencePair]
    token_embeddings: dict[str, EmbeddingStore]
    synset_embeddings: EmbeddingStore
    gold: dict[str, str] = field(default_factory=dict)
    disambiguating: frozenset[int] = frozenset()

    @property
    def pivot(self) -> str:
        return self.spec.languages[0]

    @property
    def target(self) -> str:
        return self.spec.languages[1]

    def unannotated(self, split: str = "train") -> list[AlignedSentencePair]:
        pairs = self.bitext if split == "train" else self.test_bitext
        return [AlignedSentencePair(strip_annotations(p.src), p.tgt, p.align) for p in pairs]

    def gold_key(self, side: str = "tgt", split: str = "train") -> dict[str, frozenset[str]]:
        pairs = self.bitext if split == "train" else self.test_bitext
        key = {}
        for pair in pairs:
            sent = pair.src if side == "src" else pair.tgt
            for tok in sent.tokens:
                if tok.iid in self.gold:
                    key[tok.iid] = frozenset({self.gold[tok.iid]})
        return key

    def write(self, directory: str | Path) -> dict[str, Path]:
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "kb": out / "kb.jsonl",
            "bitext": out / "bitext.jsonl",
            "test": out / "test.jsonl",
            "synset_emb": out / "synsets.emb",
            "gold_tgt": out / "gold.tgt.key",
            "gold_test": out / "gold.test.key",
        }
        dump_kb(self.kb, paths["kb"])
        serialize_bitext(self.bitext, paths["bitext"])
        serialize_bitext(self.test_bitext, paths["test"])
        self.synset_embeddings.dump(paths["synset_emb"])
        for lang, store in self.token_embeddings.items():
            paths[f"token_emb_{lang}"] = out / f"tokens.{lang}.emb"
            store.dump(paths[f"token_emb_{lang}"])
        dump_key(self.gold_key("tgt"), paths["gold_tgt"])
        dump_key(self.gold_key("tgt", "test"), paths["gold_test"])
        return paths


def generate_world(spec: WorldSpec) -> World:
    spec.validate()
    rng = random.Random(spec.seed)
    pivot, target = spec.languages
    n_groups, n_fill = spec.n_groups(), spec.n_fillers()

    id_numbers = list(range(spec.n_synsets))
    rng.shuffle(id_numbers)
    ids = iter(f"bn:{n:05d}n" for n in id_numbers)
    senses = [[next(ids) for _ in range(spec.degree)] for _ in range(n_groups)]
    contexts = [[next(ids) for _ in range(spec.degree)] for _ in range(n_groups)]
    fillers = [next(ids) for _ in range(n_fill)]
    spare = list(ids)

    n_disamb = round(spec.fraction * n_groups)
    disambiguating = frozenset(rng.sample(range(n_groups), n_disamb))

    lemmas: dict[str, dict[str, set[str]]] = {}
    edges: dict[str, set[str]] = {}
    freq: dict[str, dict[str, dict[str, int]]] = {}

    def add(sid, lang, lemma):
        lemmas.setdefault(sid, {}).setdefault(lang, set()).add(lemma)

    translation: dict[tuple[int, int], str] = {}
    for k in range(n_groups):
        for m in range(spec.degree):
            s, c = senses[k][m], contexts[k][m]
            add(s, pivot, f"w{k}")
            freq[s] = {pivot: {f"w{k}": rng.randint(1, 20)}}
            tl = f"t{k}_{m}" if k in disambiguating else f"t{k}"
            translation[(k, m)] = tl
            add(s, target, tl)
            if k in disambiguating:
                add(rng.choice(fillers), target, tl)
            add(c, pivot, f"c{k}_{m}")
            add(c, target, f"ct{k}_{m}")
            edges[s] = {c}
    for n, sid in enumerate(fillers + spare):
        add(sid, pivot, f"f{n}")
        add(sid, target, f"ft{n}")

    kb = LexKB.from_synsets(
        Synset(
            id=sid,
            pos="n",
            lemmas={lang: frozenset(v) for lang, v in lemmas[sid].items()},
            edges=frozenset(edges.get(sid, ())),
            freq=freq.get(sid, {}),
        )
        for sid in sorted(lemmas)
    )

    dim = spec.token_dim
    base = {sid: pseudo_vector(f"synset:{sid}", dim) for sid in kb.node_ids}
    synset_store = EmbeddingStore(2 * dim, {sid: np.concatenate([v, v]) for sid, v in base.items()})
    token_stores = {pivot: EmbeddingStore(dim), target: EmbeddingStore(dim)}
    noise_rng = np.random.default_rng(spec.seed)
    gold: dict[str, str] = {}

    def make_sentence(doc, sid, lang, items):
        tokens, anns = [], []
        for i, (lemma, synset) in enumerate(items):
            iid = f"{lang}.{doc}.{sid}.t{i}"
            tokens.append(Token(lemma, lemma, "n", iid))
            gold[iid] = synset
            if lang == pivot:
                anns.append(SenseAnnotation(i, synset, 1.0, "gold"))
        sent = Sentence(doc, sid, lang, tuple(tokens), tuple(anns))
        for i, (lemma, synset) in enumerate(items):
            planted = synset
            others = sorted(kb.senses(lemma, lang) - {synset})
            if others and rng.random() >= spec.nn_agreement:
                planted = rng.choice(others)
            vec = base[planted] + 0.05 * noise_rng.standard_normal(dim)
            token_stores[lang].add(sent.token_key(i), vec)
        return sent

    def make_split(doc, count):
        pairs = []
        for n in range(count):
            src_items, tgt_items = [], []
            for k in rng.sample(range(n_groups), 2):
                m = rng.randrange(spec.degree)
                src_items.append((f"w{k}", senses[k][m]))
                tgt_items.append((translation[(k, m)], senses[k][m]))
                if rng.random() >= spec.withheld:
                    src_items.append((f"c{k}_{m}", contexts[k][m]))
                    tgt_items.append((f"ct{k}_{m}", contexts[k][m]))
            sid = f"s{n}"
            pairs.append(
                AlignedSentencePair(
                    make_sentence(doc, sid, pivot, src_items),
                    make_sentence(doc, sid, target, tgt_items),
                    frozenset((i, i) for i in range(len(src_items))),
                )
            )
        return pairs

    train = make_split("train", spec.n_sentences)
    test = make_split("test", spec.n_test_sentences)
    return World(spec, kb, train, test, token_stores, synset_store, gold, disambiguating)
