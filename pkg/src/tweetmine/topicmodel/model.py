from __future__ import annotations

import io
import json
import logging
import zipfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import gibbs
from .vocab import IndexedCorpus, Vocabulary

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


@dataclass
class LdaModel:
    """Final state of a collapsed Gibbs chain.

    ``n_kw`` is topic-by-word and ``n_dk`` document-by-topic; ``z`` holds the
    topic of every token in corpus order.
    """

    K: int
    alpha: float
    beta: float
    seed: int
    iterations: int
    vocab: Vocabulary
    doc_ids: list[str]
    doc_lengths: np.ndarray
    n_kw: np.ndarray
    n_dk: np.ndarray
    z: np.ndarray

    @property
    def V(self) -> int:
        return len(self.vocab)

    @property
    def D(self) -> int:
        return len(self.doc_ids)

    def phi(self) -> np.ndarray:
        num = self.n_kw + self.beta
        return num / num.sum(axis=1, keepdims=True)

    def theta(self) -> np.ndarray:
        num = self.n_dk + self.alpha
        return num / num.sum(axis=1, keepdims=True)

    def save(self, path: str | Path) -> None:
        meta = {
            "format_version": FORMAT_VERSION,
            "K": self.K,
            "alpha": self.alpha,
            "beta": self.beta,
            "seed": self.seed,
            "iterations": self.iterations,
            "vocab": self.vocab.words,
            "doc_ids": self.doc_ids,
        }
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        arrays = {
            "meta": np.frombuffer(json.dumps(meta, sort_keys=True).encode("utf-8"), dtype=np.uint8),
            "frequency": self.vocab.frequency,
            "doc_lengths": self.doc_lengths,
            "n_kw": self.n_kw,
            "n_dk": self.n_dk,
            "z": self.z,
        }
        write_npz(path, arrays)

    @classmethod
    def load(cls, path: str | Path) -> "LdaModel":
        with np.load(path) as npz:
            meta = json.loads(npz["meta"].tobytes().decode("utf-8"))
            if meta.get("format_version") != FORMAT_VERSION:
                raise ValueError(f"unsupported model format {meta.get('format_version')}")
            return cls(
                K=meta["K"],
                alpha=meta["alpha"],
                beta=meta["beta"],
                seed=meta["seed"],
                iterations=meta["iterations"],
                vocab=Vocabulary(meta["vocab"], npz["frequency"]),
                doc_ids=meta["doc_ids"],
                doc_lengths=npz["doc_lengths"],
                n_kw=npz["n_kw"],
                n_dk=npz["n_dk"],
                z=npz["z"],
            )

    def permuted(self, perm) -> "LdaModel":
        """Same model with topic ``perm[k]`` renamed to ``k``."""
        perm = np.asarray(perm)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(len(perm))
        return LdaModel(
            self.K, self.alpha, self.beta, self.seed, self.iterations, self.vocab, self.doc_ids,
            self.doc_lengths, self.n_kw[perm], self.n_dk[:, perm], inv[self.z].astype(self.z.dtype),
        )


def write_npz(path: Path, arrays: dict[str, np.ndarray]) -> None:
    """``np.savez_compressed`` with fixed zip timestamps (byte-reproducible)."""
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        for name, arr in arrays.items():
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.ascontiguousarray(arr), allow_pickle=False)
            info = zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0))
            info.compress_type = zipfile.ZIP_DEFLATED
            zf.writestr(info, buf.getvalue())


class GibbsSampler:
    """Single collapsed Gibbs chain; call :meth:`sweep` repeatedly, then :meth:`model`."""

    def __init__(self, corpus: IndexedCorpus, K: int, alpha: float | None = None, beta: float = 0.01, seed: int = 0):
        if K < 1:
            raise ValueError("K must be >= 1")
        if not corpus.docs:
            raise ValueError("corpus has no documents")
        self.corpus = corpus
        self.K = K
        self.alpha = 50.0 / K if alpha is None else float(alpha)
        self.beta = float(beta)
        self.seed = seed
        self.words, self.doc_of = corpus.flat()
        if K > len(self.words):
            logger.warning("K=%d exceeds the %d corpus tokens", K, len(self.words))
        self.rng = np.random.Generator(np.random.PCG64(seed))
        self.z = self.rng.integers(0, K, size=len(self.words), dtype=np.int32)
        V = len(corpus.vocab)
        self.n_wk = np.zeros((V, K), dtype=np.int64)
        self.n_dk = np.zeros((len(corpus.docs), K), dtype=np.int64)
        self.n_k = np.zeros(K, dtype=np.int64)
        gibbs.init_counts(self.words, self.doc_of, self.z, self.n_wk, self.n_dk, self.n_k)
        self.iterations = 0

    def sweep(self) -> None:
        u = self.rng.random(len(self.words))
        vbeta = self.beta * self.n_wk.shape[0]
        gibbs.sweep(self.words, self.doc_of, self.z, self.n_wk, self.n_dk, self.n_k, self.alpha, self.beta, vbeta, u)
        self.iterations += 1

    def model(self) -> LdaModel:
        return LdaModel(
            K=self.K,
            alpha=self.alpha,
            beta=self.beta,
            seed=self.seed,
            iterations=self.iterations,
            vocab=self.corpus.vocab,
            doc_ids=list(self.corpus.doc_ids),
            doc_lengths=np.array([len(d) for d in self.corpus.docs], dtype=np.int64),
            n_kw=np.ascontiguousarray(self.n_wk.T).copy(),
            n_dk=self.n_dk.copy(),
            z=self.z.copy(),
        )


def train(
    corpus: IndexedCorpus,
    K: int,
    alpha: float | None = None,
    beta: float = 0.01,
    iterations: int = 1000,
    seed: int = 0,
    callback: Callable[[GibbsSampler], None] | None = None,
) -> LdaModel:
    """Fit LDA by collapsed Gibbs sampling and return the final-state model.

    ``alpha`` defaults to 50/K. ``callback`` is invoked after every sweep.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    sampler = GibbsSampler(corpus, K, alpha, beta, seed)
    for _ in range(iterations):
        sampler.sweep()
        if callback is not None:
            callback(sampler)
    return sampler.model()
