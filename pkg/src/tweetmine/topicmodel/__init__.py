"""LDA by collapsed Gibbs sampling, model-selection diagnostics, topic assignment."""

from .assign import (
    assign_topics,
    assignment_counts,
    calibration_sample,
    calibration_score,
    select_cutoff,
    top_words,
)
from .meta import TopicMeta, default_topic_meta, excluded_topics, load_topic_meta
from .model import GibbsSampler, LdaModel, train
from .selection import SelectionRow, arun2010, cao2009, deveaud2014, jensen_shannon, select_k
from .vocab import IndexedCorpus, Vocabulary, build_vocabulary, default_stopwords, load_stopwords

__all__ = [
    "GibbsSampler", "IndexedCorpus", "LdaModel", "SelectionRow", "TopicMeta", "Vocabulary",
    "arun2010", "assign_topics", "assignment_counts", "build_vocabulary", "calibration_sample",
    "calibration_score", "cao2009", "default_stopwords", "default_topic_meta", "deveaud2014",
    "excluded_topics", "jensen_shannon", "load_stopwords", "load_topic_meta", "select_cutoff",
    "select_k", "top_words", "train",
]
