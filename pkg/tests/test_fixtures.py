import pytest

from sensegen.corpus import parse_bitext, parse_key
from sensegen.embedwsd import EmbeddingStore, nn_disambiguate
from sensegen.fixtures import WorldSpec, generate_world
from sensegen.lexkb import load_kb, senses_of
from sensegen.refine import kb_filter


@pytest.fixture(scope="module")
def world():
    return generate_world(WorldSpec(seed=2, n_synsets=40, n_sentences=30, n_test_sentences=10, withheld=0.2))


def test_same_seed_same_world():
    spec = WorldSpec(seed=5, n_synsets=30, n_sentences=20)
    a, b = generate_world(spec), generate_world(spec)
    assert a.kb == b.kb and a.bitext == b.bitext and a.gold == b.gold
    c = generate_world(WorldSpec(seed=6, n_synsets=30, n_sentences=20))
    assert c.bitext != a.bitext


@pytest.mark.parametrize(
    "kwargs, message",
    [
        ({"n_synsets": 8}, "infeasible"),
        ({"degree": 1}, "degree"),
        ({"languages": ("en", "en")}, "distinct"),
        ({"fraction": 1.5}, "fraction"),
        ({"nn_agreement": -0.1}, "nn_agreement"),
    ],
)
def test_invalid_specs(kwargs, message):
    with pytest.raises(ValueError, match=message):
        generate_world(WorldSpec(**kwargs))


def test_kb_shape(world):
    spec = world.spec
    assert len(world.kb) == spec.n_synsets
    for k in range(spec.n_groups()):
        assert len(senses_of(world.kb, f"w{k}", world.pivot)) == spec.degree


def test_gold_passes_kb_filter(world):
    for p in world.bitext + world.test_bitext:
        assert kb_filter(p.src, world.kb) == p.src
        for tok in p.tgt.tokens:
            assert world.kb[world.gold[tok.iid]].lexicalizes(tok.lemma, p.tgt.lang)


def test_fraction_one_makes_translations_disambiguating():
    w = generate_world(WorldSpec(seed=0, n_synsets=30, fraction=1.0))
    for k in w.disambiguating:
        senses = senses_of(w.kb, f"w{k}", w.pivot)
        for sid in senses:
            (t,) = w.kb[sid].lemmas[w.target]
            assert senses_of(w.kb, t, w.target) & senses == {sid}
            # still ambiguous within the target language
            assert len(senses_of(w.kb, t, w.target)) >= 2
    assert len(w.disambiguating) == w.spec.n_groups()


def test_fraction_zero_keeps_translations_shared():
    w = generate_world(WorldSpec(seed=0, n_synsets=30, fraction=0.0))
    assert w.disambiguating == frozenset()
    for k in range(w.spec.n_groups()):
        assert senses_of(w.kb, f"t{k}", w.target) == senses_of(w.kb, f"w{k}", w.pivot)


def test_identity_alignment_and_iids(world):
    for p in world.bitext:
        assert p.align == {(i, i) for i in range(len(p.src.tokens))}
        assert len(p.src.tokens) == len(p.tgt.tokens)
        assert all(t.iid.startswith(f"{p.tgt.lang}.train.") for t in p.tgt.tokens)
        assert p.tgt.annotations == ()


def test_nn_agreement_one_plants_gold(world):
    for p in world.bitext:
        s = p.tgt
        for i, tok in enumerate(s.tokens):
            vec = world.token_embeddings[s.lang][s.token_key(i)]
            best = nn_disambiguate(vec, senses_of(world.kb, tok.lemma, s.lang), world.synset_embeddings)
            assert best[0] == world.gold[tok.iid]


def test_write_round_trip(world, tmp_path):
    paths = world.write(tmp_path)
    assert load_kb(paths["kb"]) == world.kb
    assert parse_bitext(paths["bitext"]) == world.bitext
    assert parse_bitext(paths["test"]) == world.test_bitext
    assert parse_key(paths["gold_tgt"]) == world.gold_key("tgt")
    assert len(EmbeddingStore.load(paths[f"token_emb_{world.target}"])) == len(world.token_embeddings[world.target])
