"""Feature-template CRF sequence labeling toolkit.

CoNLL corpus I/O, template-based feature extraction (windows, affixes,
embedding clusters, gazetteers), linear-chain CRF training and decoding,
and entity-level evaluation.
"""

from .clustering import (
    ClusterModel,
    EmbeddingTable,
    assign_cluster,
    kmeans,
    load_clusters,
    load_embeddings,
    save_clusters,
)
from .conll import (
    CorpusStats,
    LabelSchema,
    Sentence,
    Token,
    class_weights,
    corpus_stats,
    parse_conll,
    split_label,
    validate_bio,
    write_conll,
)
from .crf import (
    CrfModel,
    Lattice,
    TrainConfig,
    TrainResult,
    forward_backward,
    load_model,
    nll_and_gradient,
    save_model,
    sequence_score,
    train,
    viterbi,
)
from .errors import ConfigError, CrfSeqError, DataError, InternalError, ParseError
from .features import (
    FeatureIndex,
    FeatureTemplateConfig,
    extract_features,
    featurize,
    index_corpus,
    is_digit_token,
    prefix,
    suffix,
)
from .gazetteer import Gazetteer, load_gazetteer, match_positions
from .metrics import EntitySpan, EvalReport, evaluate, extract_spans, report_render

__version__ = "0.1.0"

__all__ = [
    "ClusterModel",
    "ConfigError",
    "CorpusStats",
    "CrfModel",
    "CrfSeqError",
    "DataError",
    "EmbeddingTable",
    "EntitySpan",
    "EvalReport",
    "FeatureIndex",
    "FeatureTemplateConfig",
    "Gazetteer",
    "InternalError",
    "LabelSchema",
    "Lattice",
    "ParseError",
    "Sentence",
    "Token",
    "TrainConfig",
    "TrainResult",
    "assign_cluster",
    "class_weights",
    "corpus_stats",
    "evaluate",
    "extract_features",
    "extract_spans",
    "featurize",
    "forward_backward",
    "index_corpus",
    "is_digit_token",
    "kmeans",
    "load_clusters",
    "load_embeddings",
    "load_gazetteer",
    "load_model",
    "match_positions",
    "nll_and_gradient",
    "parse_conll",
    "prefix",
    "report_render",
    "save_clusters",
    "save_model",
    "sequence_score",
    "split_label",
    "suffix",
    "train",
    "validate_bio",
    "viterbi",
    "write_conll",
]
