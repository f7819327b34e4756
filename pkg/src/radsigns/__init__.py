"""Character-level CRF tagging and dictionary chunk matching for structured
findings in Chinese radiology report sentences."""

__version__ = "0.1.0"

from .corpus import (
    ENTITY_KINDS,
    NUM_TAGS,
    RELATION_KINDS,
    TAG_LABELS,
    CorpusFormatError,
    EmissionMatrix,
    Entity,
    Quadruple,
    Relation,
    SecondaryPartDictionary,
    Sentence,
    TagSequence,
    read_dictionary,
    read_emissions,
    read_tagged_corpus,
    write_quadruples,
    write_tagged_corpus,
)
from .crf import (
    TaggerModel,
    TransitionMatrix,
    load_model,
    log_partition,
    nll,
    nll_gradient,
    path_score,
    save_model,
    viterbi_decode,
)
from .encoder import (
    FeatureVocabulary,
    LinearScorerParams,
    extract_features,
    external_emissions,
    score_sentence,
)
from .evaluation import (
    ConfusionMatrix,
    ErrorRecord,
    PrfBreakdown,
    PrfScores,
    agreement_f1,
    classify_errors,
    entity_prf,
    relation_prf,
)
from .tag2relation import Chunk, chunk_sentence, find_primary_parts, match
from .tagscheme import entities_to_tags, tags_to_entities, validate_path
from .trainer import TrainConfig, TrainReport, evaluate_dev, train

__all__ = [
    "CorpusFormatError",
    "Chunk",
    "ConfusionMatrix",
    "EmissionMatrix",
    "Entity",
    "ErrorRecord",
    "FeatureVocabulary",
    "LinearScorerParams",
    "PrfBreakdown",
    "PrfScores",
    "Quadruple",
    "Relation",
    "SecondaryPartDictionary",
    "Sentence",
    "TagSequence",
    "TaggerModel",
    "TrainConfig",
    "TrainReport",
    "TransitionMatrix",
    "ENTITY_KINDS",
    "NUM_TAGS",
    "RELATION_KINDS",
    "TAG_LABELS",
    "agreement_f1",
    "chunk_sentence",
    "classify_errors",
    "entities_to_tags",
    "entity_prf",
    "evaluate_dev",
    "extract_features",
    "external_emissions",
    "find_primary_parts",
    "load_model",
    "log_partition",
    "match",
    "nll",
    "nll_gradient",
    "path_score",
    "read_dictionary",
    "read_emissions",
    "read_tagged_corpus",
    "relation_prf",
    "save_model",
    "score_sentence",
    "tags_to_entities",
    "train",
    "validate_path",
    "viterbi_decode",
    "write_quadruples",
    "write_tagged_corpus",
]
