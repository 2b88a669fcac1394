"""wordemb: train word embeddings (CBOW, Skip-gram, optional subword
n-grams) with negative sampling and evaluate them on analogy and
word-similarity benchmarks."""

from .corpus import (
    NoiseTable,
    Vocabulary,
    build_noise_table,
    build_vocabulary,
    filter_sentences,
    keep_probability,
    tokenize_line,
)
from .errors import ConfigError, ParseError, TrainingDivergedError, WordembError
from .evaluation import (
    AnalogyCorpus,
    AnalogyQuestion,
    Category,
    EvalReport,
    SimilarityPair,
    evaluate_analogies,
    evaluate_similarity,
    expand_pairs,
    load_analogy_corpus,
    load_similarity_pairs,
    oov_fallback_vector,
    solve_analogy,
    spearman,
)
from .corpus_tools import CategorySpec, build_corpus, validate_corpus
from .store import VectorStore, cosine
from .trainer import (
    ModelConfig,
    ParameterMatrices,
    cbow_step,
    extract_ngrams,
    hash_ngram,
    init_parameters,
    lr_schedule,
    negative_sampling_step,
    skipgram_step,
    train,
    word_representation,
)

__version__ = "0.1.0"

__all__ = [
    "AnalogyCorpus",
    "AnalogyQuestion",
    "Category",
    "CategorySpec",
    "ConfigError",
    "EvalReport",
    "ModelConfig",
    "NoiseTable",
    "ParameterMatrices",
    "ParseError",
    "SimilarityPair",
    "TrainingDivergedError",
    "VectorStore",
    "Vocabulary",
    "WordembError",
    "build_corpus",
    "build_noise_table",
    "build_vocabulary",
    "cbow_step",
    "cosine",
    "evaluate_analogies",
    "evaluate_similarity",
    "expand_pairs",
    "extract_ngrams",
    "filter_sentences",
    "hash_ngram",
    "init_parameters",
    "keep_probability",
    "load_analogy_corpus",
    "load_similarity_pairs",
    "lr_schedule",
    "negative_sampling_step",
    "oov_fallback_vector",
    "skipgram_step",
    "solve_analogy",
    "spearman",
    "tokenize_line",
    "train",
    "validate_corpus",
    "word_representation",
]
