"""Sense-annotated corpus generation from bitexts and a multilingual knowledge base."""

from .align import Model1Aligner, align_pair, augment_bitext, correct_alignment, train_model1
from .corpus import (
    AlignedSentencePair, CorpusStats, SenseAnnotation, Sentence, Token, corpus_stats, parse_bitext,
    parse_corpus, parse_key, serialize_bitext, serialize_corpus, write_key,
)
from .embedwsd import EmbeddingStore, cosine, nn_disambiguate
from .evaluate import FrequencyClassifier, mcnemar, mfs_tag, predict_freq, score, train_freq
from .fixtures import WorldSpec, generate_world
from .graphwsd import PPRDisambiguator, PprConfig, SenseDistribution, disambiguate_w2w, ppr
from .lexkb import LexKB, Synset, load_kb, mfs, senses_of, synset_contains, translation_pairs
from .pipelines import LabelGen, LabelProp, LabelSync, label_gen, label_prop, label_sync
from .refine import SoftConstraintConfig, kb_filter, nn_filter, soft_constraint, sync_filter

__version__ = "0.1.0"
