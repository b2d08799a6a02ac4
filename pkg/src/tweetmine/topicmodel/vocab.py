from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


@lru_cache(maxsize=1)
def default_stopwords() -> frozenset[str]:
    text = resources.files("tweetmine.data").joinpath("stopwords_en.txt").read_text(encoding="utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


def load_stopwords(path: str | Path | None = None, extra: Iterable[str] = ()) -> frozenset[str]:
    if path is None:
        words = set(default_stopwords())
    else:
        words = {w.strip().lower() for w in Path(path).read_text(encoding="utf-8").splitlines() if w.strip()}
    words.update(w.lower() for w in extra)
    return frozenset(words)


@dataclass
class Vocabulary:
    words: list[str]
    frequency: np.ndarray
    index: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.index:
            self.index = {w: i for i, w in enumerate(self.words)}

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index


@dataclass
class IndexedCorpus:
    """Documents as vocabulary-index arrays, with the ids of the kept documents."""

    vocab: Vocabulary
    doc_ids: list[str]
    docs: list[np.ndarray]
    dropped_ids: list[str] = field(default_factory=list)

    @property
    def n_tokens(self) -> int:
        return int(sum(len(d) for d in self.docs))

    def flat(self) -> tuple[np.ndarray, np.ndarray]:
        words = np.concatenate(self.docs).astype(np.int32) if self.docs else np.zeros(0, np.int32)
        doc_of = np.repeat(np.arange(len(self.docs), dtype=np.int32), [len(d) for d in self.docs])
        return words, doc_of


def build_vocabulary(
    doc_ids: Sequence[str],
    token_lists: Sequence[Sequence[str]],
    stopwords: Iterable[str] | None = None,
    min_count: int = 4,
) -> IndexedCorpus:
    """Drop stopwords and tokens seen fewer than ``min_count`` times; index the rest.

    The vocabulary is sorted alphabetically so that indices do not depend on
    document order. Documents left empty are dropped and their ids returned.
    """
    stop = default_stopwords() if stopwords is None else frozenset(stopwords)
    counts = Counter(t for toks in token_lists for t in toks)
    words = sorted(w for w, c in counts.items() if c >= min_count and w not in stop)
    if not words:
        raise ValueError("vocabulary is empty after stopword and frequency pruning")
    vocab = Vocabulary(words, np.array([counts[w] for w in words], dtype=np.int64))
    kept_ids, docs, dropped = [], [], []
    for did, toks in zip(doc_ids, token_lists):
        idx = [vocab.index[t] for t in toks if t in vocab.index]
        if idx:
            kept_ids.append(did)
            docs.append(np.asarray(idx, dtype=np.int32))
        else:
            dropped.append(did)
    return IndexedCorpus(vocab, kept_ids, docs, dropped)
