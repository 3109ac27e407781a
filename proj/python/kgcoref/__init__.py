"""Knowledge-aware pronoun coreference."""

from ._core import (
    Corpus,
    CoverageError,
    Error,
    KnowledgeGraph,
    LookupError,
    Model,
    NumericError,
    ParseError,
    SyntheticData,
    ValidationError,
    build_knowledge_graph,
    classify_pronoun,
    evaluate,
    extract_sp,
    generate_synthetic,
    load_checkpoint,
    load_corpus,
    load_triplets,
    merge_graphs,
    parse_corpus,
    predict,
    threshold_sweep,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
