"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import math
import random
import time
from functools import partial
from pathlib import Path

import numpy as np
import pytest

from sensegen.align import align_pair, correct_alignment, sharing_links, train_model1
from sensegen.cli import main
from sensegen.corpus import (
    AlignedSentencePair, SenseAnnotation, Sentence, Token, corpus_stats, parse_bitext, serialize_corpus,
)
from sensegen.embedwsd import EmbeddingStore, cosine, nn_disambiguate
from sensegen.evaluate import mcnemar_from_counts, mfs_tag, predict_freq, score, train_freq
from sensegen.fixtures import WorldSpec, generate_world
from sensegen.graphwsd import SenseDistribution, disambiguate_w2w, ppr
from sensegen.lexkb import LexKB, Synset, synset_contains
from sensegen.pipelines import label_gen, label_prop, label_sync
from sensegen.refine import kb_filter, nn_filter, sync_filter, sync_violations

pytestmark = pytest.mark.acceptance


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance {number}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return emit


# -- 1. PageRank oracle ----------------------------------------------------

def _graph_kb(n, adjacency):
    return LexKB.from_synsets(
        Synset(f"v{k:02d}", "n", {"en": frozenset({f"w{k}"})},
               edges=frozenset(f"v{j:02d}" for j in range(n) if adjacency[k, j]))
        for k in range(n)
    )


def _dense_ppr(adjacency, v, d=0.85):
    deg = adjacency.sum(axis=0)
    M = np.divide(adjacency, deg, out=np.zeros_like(adjacency), where=deg > 0)
    dangling = (deg == 0).astype(float)
    system = np.eye(len(v)) - d * M - d * np.outer(v, dangling)
    return np.linalg.solve(system, (1 - d) * v)


def test_criterion_1_ppr_oracle(verdict):
    rng = np.random.default_rng(2024)
    worst, elapsed = 0.0, 0.0
    for _ in range(200):
        n = int(rng.integers(2, 21))
        upper = np.triu(rng.random((n, n)) < rng.uniform(0.05, 0.5), k=1)
        adjacency = (upper | upper.T).astype(float)
        weights = rng.random(n) * (rng.random(n) < 0.4)
        if weights.sum() == 0:
            weights[rng.integers(n)] = 1.0
        kb = _graph_kb(n, adjacency)
        start = time.perf_counter()
        got = ppr(kb, {f"v{k:02d}": float(w) for k, w in enumerate(weights) if w > 0})
        elapsed += time.perf_counter() - start
        expected = _dense_ppr(adjacency, weights / weights.sum())
        worst = max(worst, float(np.max(np.abs(np.array([got[f"v{k:02d}"] for k in range(n)]) - expected))))
    two = ppr(_graph_kb(2, np.array([[0.0, 1.0], [1.0, 0.0]])), {"v00": 1.0})
    two_ok = abs(two["v00"] - 0.540540) <= 1e-6 and abs(two["v01"] - 0.459459) <= 1e-6
    ok = worst <= 1e-6 and two_ok and elapsed < 5.0
    verdict(1, ok, f"max L-inf error {worst:.2e} over 200 graphs, 2-node ({two['v00']:.6f}, {two['v01']:.6f}), "
                   f"ppr time {elapsed:.2f}s")


# -- 2. filter soundness ---------------------------------------------------

def _scrambled(pairs, seed):
    rng = random.Random(seed)
    out = []
    for p in pairs:
        links = {(i, j) for i in range(len(p.src.tokens)) for j in range(len(p.tgt.tokens)) if rng.random() < 0.35}
        out.append(AlignedSentencePair(p.src, p.tgt, frozenset(links)))
    return out


def _random_sentence(rng, kb, lemmas, synset_ids, lang, n):
    k = rng.randint(1, 6)
    tokens = tuple(Token(lem, lem, "n") for lem in (rng.choice(lemmas) for _ in range(k)))
    anns = tuple(SenseAnnotation(i, rng.choice(synset_ids), rng.random(), "ppr")
                 for i in sorted(rng.sample(range(k), rng.randint(0, k))))
    return Sentence("rand", f"s{n}", lang, tokens, anns)


def test_criterion_2_filter_soundness(verdict):
    world = generate_world(WorldSpec(seed=4, n_synsets=50, n_sentences=120, withheld=0.3, nn_agreement=0.6))
    kb, tgt = world.kb, world.target
    violations = 0
    checked = 0
    for seed in range(3):
        noisy = _scrambled(world.bitext, seed)
        outputs = label_prop(noisy, kb, world.token_embeddings[tgt], world.synset_embeddings)[0]
        outputs += label_gen(_scrambled(world.unannotated(), seed), kb)[0]
        for s in outputs:
            for a in s.annotations:
                checked += 1
                violations += not synset_contains(kb, a.synset, s.tokens[a.token_index].lemma, s.lang)
    sync_bad = 0
    for seed in range(3):
        synced, _ = label_sync(_scrambled(world.unannotated(), seed), kb)
        sync_bad += sum(bool(sync_violations(p)) for p in synced)

    rng = random.Random(99)
    lemmas = sorted({lem for (_, lem) in kb.index}) + ["unknown"]
    ids = list(kb.node_ids) + ["bn:missing"]
    synset_store = world.synset_embeddings
    not_idempotent = 0
    for n in range(1000):
        lang = rng.choice(world.spec.languages)
        s = _random_sentence(rng, kb, lemmas, ids, lang, n)
        tokens = EmbeddingStore(world.spec.token_dim, {
            s.token_key(i): np.asarray([rng.gauss(0, 1) for _ in range(world.spec.token_dim)])
            for i in range(len(s.tokens))
        })
        once = kb_filter(s, kb)
        not_idempotent += kb_filter(once, kb) != once
        once = nn_filter(s, tokens, synset_store, kb)
        not_idempotent += nn_filter(once, tokens, synset_store, kb) != once
        t = _random_sentence(rng, kb, lemmas, ids, lang, n)
        links = {(i, j) for i in range(len(s.tokens)) for j in range(len(t.tokens)) if rng.random() < 0.4}
        once = sync_filter(AlignedSentencePair(s, t, frozenset(links)))
        not_idempotent += sync_filter(once) != once
        not_idempotent += bool(sync_violations(once))
    ok = violations == 0 and sync_bad == 0 and not_idempotent == 0 and checked > 0
    verdict(2, ok, f"{violations}/{checked} KB violations, {sync_bad} unsynchronized pairs, "
                   f"{not_idempotent} idempotence failures on 1000 random sentences")


# -- 3. SoftConstraint correction -------------------------------------------

def _planted_stub(sentence, kb, cfg, gold):
    out = []
    for i, tok in enumerate(sentence.tokens):
        cands = sorted(kb.senses(tok.lemma, sentence.lang))
        right = gold[tok.iid]
        wrong = [c for c in cands if c != right]
        if not wrong:
            out.append(SenseDistribution(i, {right: 1.0}))
            continue
        scores = {right: 0.4, wrong[0]: 0.5}
        for c in wrong[1:]:
            scores[c] = 0.1 / len(wrong[1:])
        out.append(SenseDistribution(i, scores))
    return out


def test_criterion_3_soft_constraint(verdict):
    world = generate_world(WorldSpec(seed=0, n_synsets=50, n_sentences=200, fraction=1.0, withheld=0.2))
    stub = partial(_planted_stub, gold=world.gold)
    base_wrong = sum(
        d.argmax() != world.gold[p.src.tokens[d.token_index].iid]
        for p in world.bitext for d in stub(p.src, world.kb, None)
    )
    out, _ = label_sync(world.unannotated(), world.kb, base_wsd=stub)
    total = correct = 0
    for p in out:
        for sent, links in ((p.src, p.src_links), (p.tgt, p.tgt_links)):
            for a in sent.annotations:
                if links(a.token_index):
                    total += 1
                    correct += a.synset == world.gold[sent.tokens[a.token_index].iid]
    ok = total > 0 and correct == total and base_wrong > 0
    verdict(3, ok, f"{correct}/{total} aligned annotated tokens carry the planted sense "
                   f"(stub argmax wrong on {base_wrong} pivot tokens)")


# -- 4 & 5. synthetic-world experiments --------------------------------------

@pytest.fixture(scope="module")
def world4():
    return generate_world(WorldSpec(seed=0, n_synsets=50, degree=2, fraction=1.0, n_sentences=200, withheld=0.2,
                                    n_test_sentences=100))


def _accuracy(sentences, gold, only=None):
    hits = total = 0
    for s in sentences:
        for a in s.annotations:
            iid = s.tokens[a.token_index].iid
            if only is not None and iid not in only:
                continue
            total += 1
            hits += a.synset == gold[iid]
    return hits / total if total else 0.0, total


def test_criterion_4_end_to_end(world4, verdict):
    start = time.perf_counter()
    unannotated = world4.unannotated()
    synced, _ = label_sync(unannotated, world4.kb)
    generated, _ = label_gen(unannotated, world4.kb)
    elapsed = time.perf_counter() - start
    raw = {}
    for p in unannotated:
        for d in disambiguate_w2w(p.tgt, world4.kb):
            raw[p.tgt.tokens[d.token_index].iid] = d.argmax()
    raw_sents = [
        s.with_annotations(SenseAnnotation(i, raw[t.iid]) for i, t in enumerate(s.tokens) if t.iid in raw)
        for s in (p.tgt for p in unannotated)
    ]
    lines, ok = [], elapsed < 60.0
    for name, sents in (("label_sync", [p.tgt for p in synced]), ("label_gen", generated)):
        acc, n = _accuracy(sents, world4.gold)
        covered = {s.tokens[a.token_index].iid for s in sents for a in s.annotations}
        base, _ = _accuracy(raw_sents, world4.gold, covered)
        ok = ok and n > 0 and acc > base
        lines.append(f"{name} {acc:.3f} vs raw w2w {base:.3f} on {n} tokens")
    verdict(4, ok, "; ".join(lines) + f"; runtime {elapsed:.1f}s")


def test_criterion_5_extrinsic(world4, verdict):
    generated, _ = label_gen(world4.unannotated(), world4.kb)
    model = train_freq(generated)
    test_sents = [p.tgt for p in world4.test_bitext]
    gold = world4.gold_key("tgt", "test")
    ref = score(predict_freq(model, test_sents, world4.kb, backoff=True), gold)
    base = score(mfs_tag(test_sents, world4.kb), gold)
    verdict(5, ref.f1 > base.f1, f"frequency model F {ref.f1:.3f} vs MFS F {base.f1:.3f} on {len(gold)} test tokens")


# -- 6. embedding identities -------------------------------------------------

def test_criterion_6_embeddings(verdict):
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(1000):
        d = int(rng.integers(1, 64))
        u, v = rng.standard_normal(d), rng.standard_normal(d)
        worst = max(worst, abs(cosine(np.concatenate([u, u]), np.concatenate([v, v])) - cosine(u, v)))
    mismatches = cases = 0
    for _ in range(300):
        d = int(rng.integers(2, 12))
        store = EmbeddingStore(2 * d, {f"s{k:03d}": rng.standard_normal(2 * d) for k in range(40)})
        ids = sorted(store.keys())
        token = rng.standard_normal(d)
        cands = list(rng.choice(ids, size=int(rng.integers(1, 10)), replace=False))
        full = np.concatenate([token, token])
        sims = {c: float(full @ store[c]) / (np.linalg.norm(full) * np.linalg.norm(store[c])) for c in cands}
        expected = min(cands, key=lambda c: (-sims[c], c))
        cases += 1
        mismatches += nn_disambiguate(token, cands, store)[0] != expected
    ok = worst <= 1e-12 and mismatches == 0
    verdict(6, ok, f"max self-concatenation error {worst:.1e} over 1000 pairs, "
                   f"{mismatches}/{cases} NN mismatches against brute force")


# -- 7. aligner ------------------------------------------------------------

def _dictionary_corpus(n_pairs=500, vocab=60, seed=7):
    rng = random.Random(seed)
    pairs = []
    for n in range(n_pairs):
        words = rng.sample(range(vocab), rng.randint(2, 6))
        src = Sentence("dict", f"s{n}", "en", tuple(Token(f"e{w}", f"e{w}", "n") for w in words))
        tgt = Sentence("dict", f"s{n}", "it", tuple(Token(f"i{w}", f"i{w}", "n") for w in words))
        pairs.append(AlignedSentencePair(src, tgt, frozenset((i, i) for i in range(len(words)))))
    return pairs


def test_criterion_7_aligner(verdict):
    corpus = _dictionary_corpus()
    fwd = train_model1(corpus, iterations=5)
    rev = train_model1(corpus, iterations=5, reverse=True)
    proposed = hit = 0
    for p in corpus:
        links = align_pair(p, fwd, rev)
        proposed += len(links)
        hit += len(links & p.align)
    precision = hit / proposed

    rng = random.Random(77)
    src_vocab, tgt_vocab = [f"a{k}" for k in range(6)], [f"b{k}" for k in range(6)]
    decreases = 0
    for case in range(500):
        kb = LexKB.from_synsets(
            Synset(f"x{k}", "n", {"en": frozenset(rng.sample(src_vocab, rng.randint(0, 2))),
                                  "it": frozenset(rng.sample(tgt_vocab, rng.randint(0, 2)))})
            for k in range(rng.randint(1, 8))
        )
        n, m = rng.randint(1, 6), rng.randint(1, 6)
        p = AlignedSentencePair(
            Sentence("c", f"s{case}", "en", tuple(Token(w, w, "n") for w in rng.choices(src_vocab, k=n))),
            Sentence("c", f"s{case}", "it", tuple(Token(w, w, "n") for w in rng.choices(tgt_vocab, k=m))),
        )
        links = {(i, j) for i in range(n) for j in range(m) if rng.random() < 0.3}
        decreases += sharing_links(p, correct_alignment(p, links, kb), kb) < sharing_links(p, links, kb)
    ok = precision >= 0.95 and decreases == 0
    verdict(7, ok, f"precision {precision:.4f} on 500 dictionary pairs; "
                   f"{decreases}/500 corrections lowered the sharing-link count")


# -- 8. scorer and statistics ------------------------------------------------

def test_criterion_8_scorer_stats(verdict):
    gold = {"i1": {"s1"}, "i2": {"s2"}, "i3": {"s3"}, "i4": {"s4"}}
    pred = {"i1": {"s1"}, "i2": {"s2"}, "i3": {"s9"}}
    r = score(pred, gold)
    score_ok = all(abs(a - b) <= 1e-9 for a, b in ((r.precision, 2 / 3), (r.recall, 1 / 2), (r.f1, 4 / 7)))

    toks = tuple(Token(w, w, "n") for w in ("bank", "bank", "river", "money"))
    s1 = Sentence("d", "s1", "en", toks, (SenseAnnotation(0, "s1"), SenseAnnotation(1, "s2"),
                                          SenseAnnotation(2, "s4")))
    s2 = Sentence("d", "s2", "en", toks, (SenseAnnotation(0, "s1"), SenseAnnotation(3, "s3")))
    st = corpus_stats([s1, s2], failed_alignments=3)
    stats_ok = (st.annotated_tokens, st.annotated_word_types, st.sense_types, st.failed_alignments) == (5, 3, 4, 3)

    res = mcnemar_from_counts(10, 2)
    mc_ok = round(res.statistic, 4) == 4.0833 and 0.042 <= res.p <= 0.045
    mc_ok = mc_ok and abs(res.p - math.erfc(math.sqrt(res.statistic / 2))) <= 1e-12
    verdict(8, score_ok and stats_ok and mc_ok,
            f"P={r.precision:.6f} R={r.recall:.6f} F={r.f1:.6f}; stats {tuple(st.as_dict().values())}; "
            f"McNemar {res.statistic:.4f} p={res.p:.4f}")


# -- 9. CLI determinism ------------------------------------------------------

def _cli_runs(root, jobs, monkeypatch):
    """Run every subcommand once inside ``root`` with relative paths; return {path: bytes}.

    Relative paths keep the run snapshot in the diagnostics identical across
    directories.
    """
    root.mkdir()
    monkeypatch.chdir(root)
    out = Path(".")
    w = out / "world"

    def call(*argv):
        code = main([str(a) for a in argv] + ["--jobs", str(jobs)])
        assert code == 0, argv

    call("make-world", "--out-dir", w, "--synsets", "40", "--sentences", "60", "--test-sentences", "30",
         "--withheld", "0.2", "--nn-agreement", "0.8", "--seed", "1")
    kb, bitext = w / "kb.jsonl", w / "bitext.jsonl"
    call("kb-validate", "--kb", kb, "--out", out / "kb.canon.jsonl")
    call("align", "--bitext", bitext, "--kb", kb, "--out", out / "aligned.jsonl", "--pharaoh", out / "al.txt",
         "--table-fwd", out / "t.fwd", "--table-rev", out / "t.rev")
    call("sample", "--bitext", bitext, "--n", "20", "--seed", "5", "--out", out / "sample.jsonl")
    test_pairs = parse_bitext(w / "test.jsonl")
    serialize_corpus([p.tgt for p in test_pairs], out / "test.tgt.jsonl")
    call("wsd-ppr", "--corpus", out / "test.tgt.jsonl", "--kb", kb, "--out", out / "ppr.jsonl",
         "--dist", out / "ppr.dist")
    call("label-prop", "--bitext", bitext, "--kb", kb, "--out", out / "prop.jsonl",
         "--token-emb", w / "tokens.it.emb", "--synset-emb", w / "synsets.emb",
         "--report", out / "prop.report", "--diagnostics", out / "prop.diag")
    call("label-sync", "--bitext", bitext, "--kb", kb, "--out-src", out / "sync.src.jsonl",
         "--out-tgt", out / "sync.tgt.jsonl", "--out-bitext", out / "sync.bitext.jsonl",
         "--report", out / "sync.report", "--diagnostics", out / "sync.diag", "--realign")
    call("label-gen", "--bitext", bitext, "--kb", kb, "--out", out / "gen.jsonl",
         "--report", out / "gen.report", "--diagnostics", out / "gen.diag")
    call("stats", "--corpus", out / "gen.jsonl", "--out", out / "gen.stats")
    call("train-ref", "--corpus", out / "gen.jsonl", "--out", out / "ref.model")
    call("predict-ref", "--model", out / "ref.model", "--corpus", out / "test.tgt.jsonl", "--kb", kb,
         "--out", out / "ref.key")
    call("mfs", "--corpus", out / "test.tgt.jsonl", "--kb", kb, "--out", out / "mfs.key")
    call("score", "--pred", out / "ref.key", "--gold", w / "gold.test.key", "--corpus", out / "test.tgt.jsonl",
         "--out", out / "ref.score")
    call("mcnemar", "--pred-a", out / "ref.key", "--pred-b", out / "mfs.key", "--gold", w / "gold.test.key",
         "--out", out / "mcnemar.txt")
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_criterion_9_cli_determinism(tmp_path, monkeypatch, verdict):
    a = _cli_runs(tmp_path / "a", 1, monkeypatch)
    b = _cli_runs(tmp_path / "b", 1, monkeypatch)
    c = _cli_runs(tmp_path / "c", 8, monkeypatch)
    differ = sorted({k for k in a if a.get(k) != b.get(k) or a.get(k) != c.get(k)} | (set(a) ^ set(b)) | (set(a) ^ set(c)))
    ok = not differ and len(a) >= 20
    verdict(9, ok, f"{len(a)} output files from 14 subcommands; differing across runs/--jobs: {differ or 'none'}")
